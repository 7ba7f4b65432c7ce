#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "mgi/correlation.hpp"

namespace mgi {

/// Stacked correlator outputs of one simulated acquisition.
struct AcquisitionRecord {
  Eigen::VectorXd xi;
  std::uint64_t seed = 0;
  long n_frames = 1;
  std::uint64_t fingerprint = 0;  // hash of the generating configuration
};

/// Deterministic standard-normal stream: Box-Muller over mt19937_64, so a
/// seed pins the draws bit-for-bit independent of the standard library's
/// distribution implementation.
class NormalDeviates {
 public:
  explicit NormalDeviates(std::uint64_t seed) : rng_(seed) {}
  double next();

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// L with L L^T = sigma by symmetric eigenvalue factorization. Eigenvalues
/// in [-1e-10 * scale, 0) are clipped to zero; anything lower is a PSD
/// violation and throws.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& sigma);

/// xi = A f + L z with z i.i.d. standard normal from the seeded stream.
AcquisitionRecord sample_acquisition(const MeasurementModel& model,
                                     const CovarianceBlocks& sigma,
                                     const ObjectImage& f, std::uint64_t seed,
                                     std::uint64_t fingerprint = 0);

}  // namespace mgi
