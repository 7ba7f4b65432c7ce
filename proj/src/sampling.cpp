#include "mgi/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sym_eig.hpp"

namespace mgi {

double NormalDeviates::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // (0,1] and [0,1) uniforms from the top 53 bits.
  const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("covariance_factor: matrix must be square");
  const auto [vectors, values] = detail::symmetric_eigen(sigma);
  const double scale =
      std::max(1.0, values.size() ? values.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXd roots(values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (values[k] < -1e-10 * scale) {
      throw std::runtime_error(
          "covariance_factor: eigenvalue " + std::to_string(values[k]) +
          " breaks positive semidefiniteness");
    }
    roots[k] = std::sqrt(std::max(values[k], 0.0));
  }
  return vectors * roots.asDiagonal();
}

AcquisitionRecord sample_acquisition(const MeasurementModel& model,
                                     const CovarianceBlocks& sigma,
                                     const ObjectImage& f, std::uint64_t seed,
                                     std::uint64_t fingerprint) {
  f.validate();
  if (f.grid != model.grid)
    throw std::invalid_argument("sample_acquisition: object grid does not "
                                "match the model");
  if (sigma.sigma.rows() != model.a.rows())
    throw std::invalid_argument("sample_acquisition: covariance does not "
                                "match the measurement dimension");

  const Eigen::MatrixXd factor = covariance_factor(sigma.sigma);
  NormalDeviates normal(seed);
  Eigen::VectorXd z(factor.cols());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal.next();

  AcquisitionRecord record;
  record.xi = model.a * f.values + factor * z;
  record.seed = seed;
  record.n_frames = sigma.frame_count;
  record.fingerprint = fingerprint;
  return record;
}

}  // namespace mgi
