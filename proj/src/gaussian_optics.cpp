#include "mgi/gaussian_optics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <stdexcept>
#include <string>

namespace mgi {

void PhysicalParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(std::string("PhysicalParams: ") + name +
                                  " must be strictly positive");
    }
  };
  positive(k1, "k1");
  positive(k3, "k3");
  positive(beta, "beta");
  positive(focal_length, "focal_length");
  positive(pixel_pitch, "pixel_pitch");
  if (coupling_ratio < 0.0)
    throw std::invalid_argument("PhysicalParams: coupling_ratio must be >= 0");
  if (zeta < 0.0)
    throw std::invalid_argument("PhysicalParams: zeta must be >= 0");
  if (grid.rows <= 0 || grid.cols <= 0)
    throw std::invalid_argument("PhysicalParams: grid dimensions must be positive");
  if (n_frames < 1)
    throw std::invalid_argument("PhysicalParams: n_frames must be >= 1");
}

const Eigen::Matrix4cd& ConverterMatrix::metric() {
  static const Eigen::Matrix4cd k = [] {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = -1.0;
    m(2, 2) = 1.0;
    m(3, 3) = -1.0;
    return m;
  }();
  return k;
}

ConverterMatrix::ConverterMatrix(Eigen::Matrix4cd q) : q_(std::move(q)) {
  if (metric_residual() > 1e-8) {
    throw std::runtime_error(
        "ConverterMatrix: Q K Q^ - K residual " +
        std::to_string(metric_residual()) +
        " exceeds 1e-8; transformation is not Bogoliubov");
  }
}

double ConverterMatrix::metric_residual() const {
  const Eigen::Matrix4cd r = q_ * metric() * q_.adjoint() - metric();
  return r.cwiseAbs().maxCoeff();
}

Eigen::Matrix4cd build_generator(const PhysicalParams& params) {
  params.validate();
  const std::complex<double> i_unit{0.0, 1.0};
  const double xi = params.coupling_ratio;
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  // omega_p = omega_1 + omega_2: hyperbolic pair-production block.
  m(0, 1) = i_unit;
  m(1, 0) = -i_unit;
  // omega_p + omega_1 = omega_3: photon-conserving conversion, trigonometric.
  m(0, 2) = i_unit * xi;
  m(2, 0) = i_unit * xi;
  // omega_p + omega_2 = omega_4, expressed on the daggered pair (a2^, a4^).
  m(1, 3) = i_unit * xi;
  m(3, 1) = i_unit * xi;
  return m;
}

ConverterMatrix converter_matrix(const PhysicalParams& params) {
  const Eigen::Matrix4cd m = build_generator(params);
  const Eigen::Matrix4cd q = (m * params.zeta).exp();
  return ConverterMatrix(q);
}

int PixelModeSet::mode_id(int pixel, int arm) const {
  if (pixel < 0 || pixel >= grid.pixel_count() || arm < 1 || arm > 4) {
    throw std::invalid_argument("PixelModeSet: pixel " + std::to_string(pixel) +
                                ", arm " + std::to_string(arm) +
                                " outside the mode map");
  }
  return pixel * 4 + (arm - 1);
}

int PixelModeSet::inverted_pixel(int pixel) const {
  const int r = pixel / grid.cols;
  const int c = pixel % grid.cols;
  return (grid.rows - 1 - r) * grid.cols + (grid.cols - 1 - c);
}

namespace {

// Coefficients of one exit operator over the 8 entrance operators
// (a_0..a_3, a_0^..a_3^). Column n of Q multiplies the basis entry
// (a1, a2^, a3, a4^)[n].
using CoeffVector = std::array<wick::Complex, 8>;

CoeffVector exit_coefficients(const wick::LadderOp& op,
                              const Eigen::Matrix4cd& q) {
  if (op.mode < 0 || op.mode > 3) {
    throw std::invalid_argument(
        "exit_pair_moment: mode " + std::to_string(op.mode) +
        " is not an arm index (expected 0..3)");
  }
  // Basis entry n: annihilator of mode n for even n, creator for odd n.
  static constexpr std::array<int, 4> basis_mode = {0, 1, 2, 3};
  static constexpr std::array<bool, 4> basis_daggered = {false, true, false,
                                                         true};
  const int row = op.mode;
  const bool row_daggered = basis_daggered[row];
  // Row `row` of Q expresses the daggered exit operator when the basis entry
  // is daggered (arms 2, 4); otherwise the plain annihilator (arms 1, 3).
  const bool want_conjugate = (op.kind == wick::OpKind::Creation) != row_daggered;
  CoeffVector coeff{};
  for (int n = 0; n < 4; ++n) {
    wick::Complex qv = q(row, n);
    bool daggered = basis_daggered[n];
    if (want_conjugate) {
      qv = std::conj(qv);
      daggered = !daggered;
    }
    coeff[basis_mode[n] + (daggered ? 4 : 0)] += qv;
  }
  return coeff;
}

}  // namespace

wick::Complex exit_pair_moment(const wick::LadderOp& x,
                               const wick::LadderOp& y,
                               const ConverterMatrix& q) {
  const CoeffVector cx = exit_coefficients(x, q.q());
  const CoeffVector cy = exit_coefficients(y, q.q());
  // Only <a_k a_k^> survives on vacuum.
  wick::Complex sum{0.0, 0.0};
  for (int k = 0; k < 4; ++k) sum += cx[k] * cy[k + 4];
  return sum;
}

wick::PairMomentTable single_group_moment_table(const ConverterMatrix& q) {
  wick::PairMomentTable table = wick::PairMomentTable::grouped(4);
  for (int mx = 0; mx < 4; ++mx) {
    for (int my = 0; my < 4; ++my) {
      for (int kx = 0; kx < 2; ++kx) {
        for (int ky = 0; ky < 2; ++ky) {
          const wick::LadderOp x{mx, static_cast<wick::OpKind>(kx)};
          const wick::LadderOp y{my, static_cast<wick::OpKind>(ky)};
          table.set(x, y, exit_pair_moment(x, y, q));
        }
      }
    }
  }
  return table;
}

wick::PairMomentTable build_pair_moment_table(const ConverterMatrix& q,
                                              const PixelModeSet& modes) {
  wick::PairMomentTable table =
      wick::PairMomentTable::grouped(modes.mode_count());
  for (int pixel = 0; pixel < modes.grid.pixel_count(); ++pixel) {
    for (int mx = 0; mx < 4; ++mx) {
      for (int my = 0; my < 4; ++my) {
        for (int kx = 0; kx < 2; ++kx) {
          for (int ky = 0; ky < 2; ++ky) {
            const wick::LadderOp lx{mx, static_cast<wick::OpKind>(kx)};
            const wick::LadderOp ly{my, static_cast<wick::OpKind>(ky)};
            const wick::Complex v = exit_pair_moment(lx, ly, q);
            if (v == wick::Complex{0.0, 0.0}) continue;
            table.set({pixel * 4 + mx, lx.kind}, {pixel * 4 + my, ly.kind}, v);
          }
        }
      }
    }
  }
  return table;
}

}  // namespace mgi
