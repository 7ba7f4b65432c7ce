#include "mgi/reduction.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "sym_eig.hpp"

namespace mgi {

void ReductionConfig::validate() const {
  if (kappa < 0.0 || !std::isfinite(kappa))
    throw std::invalid_argument(
        "ReductionConfig: kappa must be positive (or 0 for the automatic "
        "noise-scaled choice)");
  if (!(pinv_tol > 0.0 && pinv_tol < 1.0))
    throw std::invalid_argument("ReductionConfig: pinv_tol must lie in (0,1)");
  if (max_iters < 1)
    throw std::invalid_argument("ReductionConfig: max_iters must be >= 1");
  if (!(conv_tol > 0.0))
    throw std::invalid_argument("ReductionConfig: conv_tol must be positive");
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m, double tol) {
  if (!m.allFinite())
    throw std::invalid_argument("pseudoinverse: matrix has non-finite entries");
  const auto assemble = [&](const auto& svd) {
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = tol * (s.size() ? s.maxCoeff() : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s[k] > cutoff && s[k] > 0.0) inv[k] = 1.0 / s[k];
    return (svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose())
        .eval();
  };
  if (std::min(m.rows(), m.cols()) <= 32) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return assemble(svd);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  return assemble(svd);
}

Eigen::MatrixXd pseudoinverse_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (!m.allFinite())
    throw std::invalid_argument(
        "pseudoinverse_symmetric: matrix has non-finite entries");
  const auto [vectors, values] =
      detail::symmetric_eigen(((m + m.transpose()) * 0.5).eval());
  const double cutoff = tol * (values.size() ? values.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (std::abs(values[k]) > cutoff) inv[k] = 1.0 / values[k];
  return vectors * inv.asDiagonal() * vectors.transpose();
}

namespace {

// Action of Sigma^- on a block of columns. Positive definite covariances
// take the LDLT fast path; anything rank-deficient falls back to the
// eigenvalue pseudoinverse, which matches the LDLT solve whenever both
// apply.
std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> sigma_inverse_action(
    const Eigen::MatrixXd& sigma, double tol) {
  if (!sigma.allFinite())
    throw std::invalid_argument("reduce_linear: covariance has non-finite "
                                "entries");
  auto ldlt = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(sigma);
  if (ldlt->info() == Eigen::Success) {
    const Eigen::VectorXd d = ldlt->vectorD();
    const double dmax = d.size() ? d.maxCoeff() : 0.0;
    if (dmax > 0.0 && d.minCoeff() > tol * dmax) {
      return [ldlt](const Eigen::MatrixXd& rhs) { return ldlt->solve(rhs); };
    }
  }
  auto pinv = std::make_shared<Eigen::MatrixXd>(
      pseudoinverse_symmetric(sigma, tol));
  return [pinv](const Eigen::MatrixXd& rhs) { return *pinv * rhs; };
}

void check_reduce_dimensions(const Eigen::VectorXd& xi,
                             const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& sigma,
                             const Eigen::MatrixXd& u) {
  if (xi.size() != a.rows())
    throw std::invalid_argument("reduce_linear: measurement length " +
                                std::to_string(xi.size()) +
                                " does not match A rows " +
                                std::to_string(a.rows()));
  if (sigma.rows() != a.rows() || sigma.cols() != a.rows())
    throw std::invalid_argument("reduce_linear: covariance shape does not "
                                "match the measurement dimension");
  if (u.size() != 0 && u.cols() != a.cols())
    throw std::invalid_argument("reduce_linear: U columns do not match A "
                                "columns");
}

}  // namespace

Eigen::VectorXd reduce_linear(const Eigen::VectorXd& xi,
                              const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& sigma,
                              const Eigen::MatrixXd& u, double tol) {
  check_reduce_dimensions(xi, a, sigma, u);
  const auto apply_w = sigma_inverse_action(sigma, tol);
  const Eigen::MatrixXd wa = apply_w(a);
  const Eigen::MatrixXd g = a.transpose() * wa;
  const Eigen::VectorXd rhs = a.transpose() * apply_w(xi).col(0);
  const Eigen::VectorXd f = pseudoinverse_symmetric(g, tol) * rhs;
  return u.size() ? Eigen::VectorXd(u * f) : f;
}

Eigen::VectorXd project_unit_box(const Eigen::VectorXd& v) {
  return v.cwiseMax(0.0).cwiseMin(1.0);
}

CovarianceBlocks estimate_noise_covariance(const ObjectImage& f_hat,
                                           const ConverterMatrix& q,
                                           long n_frames) {
  return build_covariance(f_hat, q, n_frames);
}

ReductionResult iterate_reduction(const Eigen::VectorXd& xi,
                                  const MeasurementModel& model,
                                  const CovarianceProvider& covariance_of,
                                  const ReductionConfig& config) {
  config.validate();
  const int n = model.grid.pixel_count();
  if (config.u.size() != 0) {
    const bool identity =
        config.u.rows() == n && config.u.cols() == n &&
        (config.u - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() ==
            0.0;
    if (!identity)
      throw std::invalid_argument(
          "iterate_reduction refines in object space; non-identity U is "
          "supported by reduce_linear only");
  }
  if (xi.size() != model.a.rows())
    throw std::invalid_argument("iterate_reduction: measurement length does "
                                "not match the model");

  ReductionResult result;
  result.estimate = ObjectImage::constant(model.grid, 1.0);

  auto check_finite = [](const Eigen::VectorXd& v, int pass) {
    if (!v.allFinite())
      throw std::runtime_error("iterate_reduction: non-finite estimate at "
                               "iteration " + std::to_string(pass));
  };

  // Pass 1: plain reduction against the constant-transparency covariance.
  Eigen::VectorXd previous = result.estimate.values;
  Eigen::MatrixXd sigma = covariance_of(result.estimate);
  Eigen::VectorXd estimate =
      project_unit_box(reduce_linear(xi, model.a, sigma, {}, config.pinv_tol));
  check_finite(estimate, 1);
  result.estimate.values = estimate;
  result.iterations = 1;
  result.noise_covariance = covariance_of(result.estimate);
  {
    const double denom = std::max(previous.norm(), 1e-300);
    result.diagnostics.push_back({(xi - model.a * estimate).norm(),
                                  (estimate - previous).norm() / denom, 0.0});
  }

  for (int pass = 2; pass <= config.max_iters; ++pass) {
    if (result.diagnostics.back().estimate_change < config.conv_tol) break;

    double kappa = config.kappa;
    if (kappa <= 0.0)
      kappa = 1e-2 * result.noise_covariance.diagonal().mean();
    if (!(kappa > 0.0)) kappa = 1.0;  // exactly consistent data, any prior works

    // Augmented system [A; I], blkdiag(Sigma_e, kappa I), [xi; f_e]. The
    // block structure collapses: G = A^T W A + I/kappa, rhs likewise.
    const auto apply_w = sigma_inverse_action(result.noise_covariance,
                                              config.pinv_tol);
    Eigen::MatrixXd g = model.a.transpose() * apply_w(model.a);
    g.diagonal().array() += 1.0 / kappa;
    const Eigen::VectorXd rhs = model.a.transpose() * apply_w(xi).col(0) +
                                result.estimate.values / kappa;
    previous = result.estimate.values;
    estimate = project_unit_box(
        pseudoinverse_symmetric(g, config.pinv_tol) * rhs);
    check_finite(estimate, pass);

    result.estimate.values = estimate;
    result.iterations = pass;
    result.noise_covariance = covariance_of(result.estimate);
    const double denom = std::max(previous.norm(), 1e-300);
    result.diagnostics.push_back({(xi - model.a * estimate).norm(),
                                  (estimate - previous).norm() / denom,
                                  kappa});
  }
  return result;
}

ReductionResult iterate_reduction(const Eigen::VectorXd& xi,
                                  const MeasurementModel& model,
                                  const ConverterMatrix& q, long n_frames,
                                  const ReductionConfig& config) {
  const auto& detectors = model.detectors;
  return iterate_reduction(
      xi, model,
      [&](const ObjectImage& f) {
        return build_covariance(f, q, n_frames, &detectors).sigma;
      },
      config);
}

std::vector<std::pair<int, double>> binning_mse_levels(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma, GridShape grid,
    double tol) {
  const int n = grid.pixel_count();
  if (a.cols() != n)
    throw std::invalid_argument("binning_mse_levels: A columns do not match "
                                "the grid");
  if (sigma.rows() != a.rows() || sigma.cols() != a.rows())
    throw std::invalid_argument("binning_mse_levels: covariance shape does "
                                "not match A");

  const Eigen::MatrixXd residual_projector =
      Eigen::MatrixXd::Identity(n, n) - pseudoinverse(a, tol) * a;
  const auto apply_w = sigma_inverse_action(sigma, tol);
  const Eigen::MatrixXd g = a.transpose() * apply_w(a);
  const Eigen::MatrixXd g_pinv = pseudoinverse_symmetric(g, tol);

  std::vector<std::pair<int, double>> levels;
  for (int b = 1; grid.rows % b == 0 && grid.cols % b == 0; b *= 2) {
    const Eigen::MatrixXd u = binning_matrix(grid, b, BinWeights::Orthonormal);
    if ((u * residual_projector).cwiseAbs().maxCoeff() > 1e-8) continue;
    levels.emplace_back(static_cast<int>(u.rows()),
                        (u * g_pinv * u.transpose()).trace());
  }
  return levels;
}

std::vector<std::pair<double, int>> effective_resolution_curve(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma,
    const std::vector<double>& mse_budgets, GridShape grid, double tol) {
  const auto levels = binning_mse_levels(a, sigma, grid, tol);
  std::vector<std::pair<double, int>> curve;
  curve.reserve(mse_budgets.size());
  for (double budget : mse_budgets) {
    int best = 0;
    for (const auto& [rank, mse] : levels)
      if (mse <= budget * (1.0 + 1e-12) && rank > best) best = rank;
    curve.emplace_back(budget, best);
  }
  return curve;
}

}  // namespace mgi
