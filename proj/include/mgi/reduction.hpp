#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mgi/correlation.hpp"

namespace mgi {

struct ReductionConfig {
  Eigen::MatrixXd u;      // ideal-device matrix; empty means identity
  double kappa = 0.0;     // <= 0 selects 1e-2 * mean diagonal of Sigma_nu,e
  double pinv_tol = 1e-10;
  int max_iters = 20;
  double conv_tol = 1e-4;

  void validate() const;  // throws std::invalid_argument
};

struct IterationDiagnostics {
  double residual_norm = 0.0;    // ||xi - A f_hat||
  double estimate_change = 0.0;  // relative L2 change from the previous pass
  double kappa = 0.0;            // pseudo-measurement weight actually used
};

struct ReductionResult {
  ObjectImage estimate;
  int iterations = 0;
  std::vector<IterationDiagnostics> diagnostics;
  Eigen::MatrixXd noise_covariance;  // final Sigma_nu,e
};

/// Moore-Penrose pseudoinverse by SVD; singular values below
/// tol * sigma_max are treated as zero.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m, double tol = 1e-10);

/// Pseudoinverse of a symmetric matrix through its eigendecomposition
/// (shared by the covariance factorization and the symmetric pseudoinverse). Same cutoff convention.
Eigen::MatrixXd pseudoinverse_symmetric(const Eigen::MatrixXd& m,
                                        double tol = 1e-10);

/// Minimum-MSE linear estimate of U f from xi = A f + nu,
/// U (A^T Sigma^- A)^- A^T Sigma^- xi. Pass an empty U for identity.
Eigen::VectorXd reduce_linear(const Eigen::VectorXd& xi,
                              const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& sigma,
                              const Eigen::MatrixXd& u = {},
                              double tol = 1e-10);

/// Elementwise clamp onto [0,1].
Eigen::VectorXd project_unit_box(const Eigen::VectorXd& v);

/// Noise covariance re-estimated at a transparency estimate.
CovarianceBlocks estimate_noise_covariance(const ObjectImage& f_hat,
                                           const ConverterMatrix& q,
                                           long n_frames);

using CovarianceProvider = std::function<Eigen::MatrixXd(const ObjectImage&)>;

/// Iterative interpretation: the first pass reduces with the covariance of
/// the constant-transparency image; later passes append the previous
/// estimate as a pseudo-measurement with covariance kappa*I, using the
/// covariance re-estimated from the projected estimate. Stops on relative
/// L2 change below conv_tol or after max_iters passes. Operates in object
/// space (identity U).
ReductionResult iterate_reduction(const Eigen::VectorXd& xi,
                                  const MeasurementModel& model,
                                  const CovarianceProvider& covariance_of,
                                  const ReductionConfig& config);

ReductionResult iterate_reduction(const Eigen::VectorXd& xi,
                                  const MeasurementModel& model,
                                  const ConverterMatrix& q, long n_frames,
                                  const ReductionConfig& config);

/// Feasible ideal devices U over power-of-two pixel binnings with
/// orthonormal rows: (rank of U, reduction MSE = trace of the estimate
/// covariance) per level. A level is feasible when U (I - A^- A) = 0.
std::vector<std::pair<int, double>> binning_mse_levels(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma, GridShape grid,
    double tol = 1e-10);

/// For each MSE budget, the finest achievable ideal device among the
/// binning levels above. Returns (budget, achievable rank of U); rank 0
/// when no level fits the budget.
std::vector<std::pair<double, int>> effective_resolution_curve(
    const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma,
    const std::vector<double>& mse_budgets, GridShape grid,
    double tol = 1e-10);

}  // namespace mgi
