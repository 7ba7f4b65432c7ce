#include "mgi/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace mgi {

double snr(const Eigen::VectorXd& estimate, const ObjectImage& truth,
           double cap) {
  truth.validate();
  const Eigen::Index n = truth.values.size();
  if (estimate.size() != n)
    throw std::invalid_argument("snr: estimate and truth grids differ");

  // Calibrate the estimate against the truth: fit estimate ~ a*truth + b
  // and invert the affine map. Unlike the attenuating forward regression
  // this keeps the residual an unbiased image of the noise, so SNR ratios
  // across arms stay gauge-free.
  const double t_mean = truth.values.mean();
  const double e_mean = estimate.mean();
  const Eigen::VectorXd t_centered = truth.values.array() - t_mean;
  const Eigen::VectorXd e_centered = estimate.array() - e_mean;
  const double t_var = t_centered.squaredNorm();
  const double cross = t_centered.dot(e_centered);

  Eigen::VectorXd calibrated(n);
  const double gain_floor =
      1e-12 * (e_centered.norm() + 1.0) * (t_centered.norm() + 1.0);
  if (t_var > 0.0 && std::abs(cross) > gain_floor) {
    const double a = cross / t_var;
    calibrated = (estimate.array() - (e_mean - a * t_mean)) / a;
  } else {
    // Uninformative estimate: the best affine calibration collapses to the
    // constant mean(truth); SNR is then set by the truth contrast alone.
    calibrated = Eigen::VectorXd::Constant(n, t_mean);
  }

  double signal_sum = 0.0;
  int transparent = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    if (truth.values[p] >= 1.0 - 1e-12) {
      signal_sum += calibrated[p];
      ++transparent;
    }
  }
  if (transparent == 0)
    throw std::invalid_argument("snr: truth has no fully transparent pixels");

  const double mu = signal_sum / transparent;
  const double sigma = std::sqrt((calibrated - truth.values).squaredNorm() /
                                 static_cast<double>(n));
  if (!(sigma > 0.0) || mu / sigma > cap) return cap;
  return mu / sigma;
}

double mse(const Eigen::VectorXd& estimate, const ObjectImage& truth) {
  truth.validate();
  if (estimate.size() != truth.values.size())
    throw std::invalid_argument("mse: estimate and truth grids differ");
  return (estimate - truth.values).squaredNorm() /
         static_cast<double>(truth.values.size());
}

double summation_snr_ratio(const Eigen::Vector3d& c, const Eigen::Matrix3d& cov,
                           int best_index) {
  if (best_index < 0 || best_index > 2)
    throw std::invalid_argument("summation_snr_ratio: best_index must be 0..2");
  if (c[best_index] == 0.0)
    throw std::invalid_argument("summation_snr_ratio: best-arm coefficient "
                                "is zero");
  const double quad = Eigen::Vector3d::Ones().dot(cov * Eigen::Vector3d::Ones());
  if (!(quad > 0.0))
    throw std::invalid_argument("summation_snr_ratio: singular denominator "
                                "1^T C 1");
  const double total = c.sum();
  return total * total / quad * cov(best_index, best_index) /
         (c[best_index] * c[best_index]);
}

}  // namespace mgi
