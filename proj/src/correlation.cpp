#include "mgi/correlation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgi {

ObjectImage ObjectImage::constant(GridShape grid, double value) {
  ObjectImage f{grid, Eigen::VectorXd::Constant(grid.pixel_count(), value)};
  f.validate();
  return f;
}

void ObjectImage::validate() const {
  if (grid.rows <= 0 || grid.cols <= 0)
    throw std::invalid_argument("ObjectImage: grid dimensions must be positive");
  if (values.size() != grid.pixel_count())
    throw std::invalid_argument("ObjectImage: value count does not match grid");
  for (Eigen::Index p = 0; p < values.size(); ++p) {
    const double v = values[p];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("ObjectImage: transparency at pixel " +
                                  std::to_string(p) +
                                  " outside [0,1]: " + std::to_string(v));
    }
  }
}

namespace {

double to_real(wick::Complex v, const char* what) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real()))) {
    throw std::runtime_error(std::string("expected a real moment for ") +
                             what + ", got imaginary part " +
                             std::to_string(v.imag()));
  }
  return v.real();
}

// Ordered string of number operators n_arm for the given arms of one pixel
// group (local modes 0..3).
std::vector<wick::LadderOp> number_string(std::initializer_list<int> arms) {
  std::vector<wick::LadderOp> ops;
  ops.reserve(2 * arms.size());
  for (int arm : arms) {
    ops.push_back(wick::create(arm - 1));
    ops.push_back(wick::annihilate(arm - 1));
  }
  return ops;
}

double group_moment(const wick::PairMomentTable& table,
                    std::initializer_list<int> arms) {
  const auto ops = number_string(arms);
  return to_real(wick::gaussian_moment(ops, table), "a number-operator string");
}

}  // namespace

double mean_intensity(const ConverterMatrix& q, int arm) {
  if (arm < 1 || arm > 4)
    throw std::invalid_argument("mean_intensity: arm must be in 1..4");
  const wick::Complex v =
      exit_pair_moment(wick::create(arm - 1), wick::annihilate(arm - 1), q);
  return to_real(v, "<n>");
}

double gi_coefficient(const ConverterMatrix& q, int arm_j) {
  if (arm_j < 2 || arm_j > 4)
    throw std::invalid_argument("gi_coefficient: arm must be in 2..4");
  const Eigen::Matrix4cd& m = q.q();
  const int j = arm_j - 1;
  const wick::Complex q11j =
      m(0, 0) * std::conj(m(j, 0)) + m(0, 2) * std::conj(m(j, 2));
  const double coefficient = std::norm(q11j);

  // Mandatory cross-check: the same number must come out of the Wick sum as
  // the same-pixel photon-number covariance Cov(n_1, n_j).
  const auto table = single_group_moment_table(q);
  const double covariance = group_moment(table, {1, arm_j}) -
                            group_moment(table, {1}) * group_moment(table, {arm_j});
  if (std::abs(coefficient - covariance) >
      1e-8 * std::max(1.0, std::abs(covariance))) {
    throw std::runtime_error(
        "gi_coefficient: |Q_(11j)|^2 = " + std::to_string(coefficient) +
        " disagrees with the Wick covariance " + std::to_string(covariance) +
        " for arm " + std::to_string(arm_j));
  }
  return coefficient;
}

Eigen::VectorXd ghost_image_mean(const ObjectImage& f, double c_j) {
  f.validate();
  const PixelModeSet modes{f.grid};
  Eigen::VectorXd g(f.grid.pixel_count());
  for (int p = 0; p < f.grid.pixel_count(); ++p)
    g[p] = c_j * f.values[modes.inverted_pixel(p)];
  return g;
}

Eigen::MatrixXd inversion_permutation(GridShape grid) {
  const int n = grid.pixel_count();
  const PixelModeSet modes{grid};
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, modes.inverted_pixel(i)) = 1.0;
  return p;
}

Eigen::MatrixXd binning_matrix(GridShape grid, int factor, BinWeights weights) {
  if (factor < 1 || grid.rows % factor != 0 || grid.cols % factor != 0) {
    throw std::invalid_argument("binning_matrix: factor " +
                                std::to_string(factor) +
                                " does not divide the grid");
  }
  const int out_rows = grid.rows / factor;
  const int out_cols = grid.cols / factor;
  double w = 1.0;
  if (weights == BinWeights::Average) w = 1.0 / (factor * factor);
  if (weights == BinWeights::Orthonormal) w = 1.0 / factor;
  Eigen::MatrixXd b =
      Eigen::MatrixXd::Zero(out_rows * out_cols, grid.pixel_count());
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int out = (r / factor) * out_cols + (c / factor);
      b(out, r * grid.cols + c) = w;
    }
  }
  return b;
}

MeasurementModel build_measurement_operator(
    const std::array<double, 3>& c,
    const std::array<Eigen::MatrixXd, 3>& detectors, GridShape grid) {
  const int n = grid.pixel_count();
  Eigen::Index total_rows = 0;
  for (const auto& b : detectors) {
    if (b.cols() != n) {
      throw std::invalid_argument(
          "build_measurement_operator: detector matrix has " +
          std::to_string(b.cols()) + " columns, expected " + std::to_string(n));
    }
    total_rows += b.rows();
  }
  const Eigen::MatrixXd inversion = inversion_permutation(grid);
  MeasurementModel model{grid, c, detectors,
                         Eigen::MatrixXd(total_rows, n)};
  Eigen::Index row = 0;
  for (int k = 0; k < 3; ++k) {
    model.a.middleRows(row, detectors[k].rows()) =
        detectors[k] * (c[k] * inversion);
    row += detectors[k].rows();
  }
  return model;
}

MeasurementModel build_measurement_operator(const ConverterMatrix& q,
                                            GridShape grid) {
  const Eigen::MatrixXd identity =
      Eigen::MatrixXd::Identity(grid.pixel_count(), grid.pixel_count());
  return build_measurement_operator(
      {gi_coefficient(q, 2), gi_coefficient(q, 3), gi_coefficient(q, 4)},
      {identity, identity, identity}, grid);
}

namespace {

// Same-pixel Wick moments entering the closed-form covariance of the pair
// of fluctuation operators G_i, G_j. Names track the operator strings:
// e = <n>, w = two-number moments, t = three, q8 = the full eight-operator
// same-pixel string <n1 ni n1 nj>.
struct PatternMoments {
  double e1, ei, ej;
  double w11, w1i, w1j, wij, wi1;
  double t_1i1, t_11j, t_1ij, t_i1j;
  double q8;
  double ci, cj, cij;
};

PatternMoments pattern_moments(const ConverterMatrix& q, int arm_i,
                               int arm_j) {
  const auto table = single_group_moment_table(q);
  PatternMoments m{};
  m.e1 = group_moment(table, {1});
  m.ei = group_moment(table, {arm_i});
  m.ej = group_moment(table, {arm_j});
  m.w11 = group_moment(table, {1, 1});
  m.w1i = group_moment(table, {1, arm_i});
  m.w1j = group_moment(table, {1, arm_j});
  m.wij = group_moment(table, {arm_i, arm_j});
  m.wi1 = group_moment(table, {arm_i, 1});
  m.t_1i1 = group_moment(table, {1, arm_i, 1});
  m.t_11j = group_moment(table, {1, 1, arm_j});
  m.t_1ij = group_moment(table, {1, arm_i, arm_j});
  m.t_i1j = group_moment(table, {arm_i, 1, arm_j});
  m.q8 = group_moment(table, {1, arm_i, 1, arm_j});
  m.ci = m.w1i - m.e1 * m.ei;
  m.cj = m.w1j - m.e1 * m.ej;
  m.cij = m.wij - m.ei * m.ej;
  return m;
}

// Cov(G_i(rho), G_j(rho')) in crystal coordinates. The bucket sum over
// pixel pairs (u, v) is split by which of u, v coincide with rho, rho';
// disconnected patterns cancel against <I1 Ii><I1 Ij> and drop out.
double covariance_entry(const PatternMoments& m, double f_rho,
                        double f_rho_p, bool same_pixel, double s1,
                        double s2) {
  if (same_pixel) {
    const double f = f_rho;
    const double off = s1 - f;
    const double pair_sum = off * off - (s2 - f * f);
    return pair_sum * m.e1 * m.e1 * m.cij +
           (s2 - f * f) * (m.w11 * m.wij - m.e1 * m.e1 * m.ei * m.ej) +
           f * off * m.e1 *
               ((m.t_1ij - m.w1i * m.ej) + (m.t_i1j - m.ei * m.w1j)) +
           f * f * (m.q8 - m.w1i * m.w1j);
  }
  const double others1 = s1 - f_rho - f_rho_p;
  const double others2 = s2 - f_rho * f_rho - f_rho_p * f_rho_p;
  return others2 * (m.w11 - m.e1 * m.e1) * m.ei * m.ej +
         f_rho_p * others1 * m.e1 * m.ei * m.cj +
         f_rho * others1 * m.e1 * m.ej * m.ci +
         f_rho * f_rho * m.ej * (m.t_1i1 - m.w1i * m.e1) +
         f_rho_p * f_rho_p * m.ei * (m.t_11j - m.e1 * m.w1j) +
         f_rho * f_rho_p * (m.w1j * m.wi1 - m.e1 * m.e1 * m.ei * m.ej);
}

void check_arm_pair(int arm_i, int arm_j) {
  if (arm_i < 2 || arm_i > 4 || arm_j < 2 || arm_j > 4)
    throw std::invalid_argument("covariance block arms must be in 2..4");
}

}  // namespace

Eigen::MatrixXd covariance_block(const ObjectImage& f, const ConverterMatrix& q,
                                 int arm_i, int arm_j, long n_frames) {
  check_arm_pair(arm_i, arm_j);
  if (n_frames < 1)
    throw std::invalid_argument("covariance_block: n_frames must be >= 1");
  f.validate();
  const int n = f.grid.pixel_count();
  const PixelModeSet modes{f.grid};
  const PatternMoments m = pattern_moments(q, arm_i, arm_j);
  const double s1 = f.values.sum();
  const double s2 = f.values.squaredNorm();
  const double scale = 1.0 / static_cast<double>(n_frames);

  Eigen::MatrixXd block(n, n);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n; ++p) {
    const int rho = modes.inverted_pixel(p);
    for (int pp = 0; pp < n; ++pp) {
      const int rho_p = modes.inverted_pixel(pp);
      block(p, pp) = scale * covariance_entry(m, f.values[rho],
                                              f.values[rho_p], rho == rho_p,
                                              s1, s2);
    }
  }
  return block;
}

CovarianceBlocks build_covariance(
    const ObjectImage& f, const ConverterMatrix& q, long n_frames,
    const std::array<Eigen::MatrixXd, 3>* detectors, CovarianceMode mode) {
  f.validate();
  const int n = f.grid.pixel_count();

  std::array<Eigen::Index, 3> rows{n, n, n};
  if (detectors) {
    for (int k = 0; k < 3; ++k) {
      if ((*detectors)[k].cols() != n)
        throw std::invalid_argument("build_covariance: detector matrix has "
                                    "wrong column count");
      rows[k] = (*detectors)[k].rows();
    }
  }
  const Eigen::Index total = rows[0] + rows[1] + rows[2];
  CovarianceBlocks out{Eigen::MatrixXd::Zero(total, total), n_frames};

  std::array<Eigen::Index, 3> offset{0, rows[0], rows[0] + rows[1]};
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = bi; bj < 3; ++bj) {
      Eigen::MatrixXd block =
          covariance_block(f, q, bi + 2, bj + 2, n_frames);
      if (mode == CovarianceMode::BlockDiagonal)
        block = Eigen::MatrixXd(block.diagonal().asDiagonal());
      if (detectors)
        block = (*detectors)[bi] * block * (*detectors)[bj].transpose();
      out.sigma.block(offset[bi], offset[bj], rows[bi], rows[bj]) = block;
      if (bj != bi) {
        out.sigma.block(offset[bj], offset[bi], rows[bj], rows[bi]) =
            block.transpose();
      }
    }
  }

  const double scale = std::max(1.0, out.sigma.cwiseAbs().maxCoeff());
  const double asym =
      (out.sigma - out.sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw std::runtime_error("build_covariance: assembled matrix is not "
                             "symmetric, residual " + std::to_string(asym));
  out.sigma = ((out.sigma + out.sigma.transpose()) * 0.5).eval();

  // PSD guard. LDLT is cheap relative to assembly up to a few thousand
  // pixels; beyond that the sampling-time eigenvalue factorization performs
  // the same check.
  if (total <= 4096) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(out.sigma);
    const double min_pivot = ldlt.vectorD().minCoeff();
    if (min_pivot < -1e-8 * scale) {
      throw std::runtime_error(
          "build_covariance: covariance is not positive semidefinite "
          "(pivot " + std::to_string(min_pivot) + ")");
    }
  }
  return out;
}

}  // namespace mgi
