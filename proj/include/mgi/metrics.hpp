#pragma once

#include <array>

#include <Eigen/Dense>

#include "mgi/correlation.hpp"

namespace mgi {

inline constexpr double kSnrCap = 1e6;

/// Signal-to-noise ratio of a reconstruction against a reference image.
/// The estimate is calibrated onto the truth by a least-squares affine fit
/// (gain plus offset, so any affine rescaling of the estimate is
/// immaterial); the result is the mean of the calibrated estimate over the
/// fully transparent pixels divided by the RMS residual over all pixels,
/// capped to keep exact recoveries finite. Throws if the truth has no
/// transparent pixels.
double snr(const Eigen::VectorXd& estimate, const ObjectImage& truth,
           double cap = kSnrCap);

/// Mean squared pixel difference.
double mse(const Eigen::VectorXd& estimate, const ObjectImage& truth);

/// Expected effect of plain summation on the best arm's SNR:
/// (sum c)^2 (1^T C 1)^-1 C_bb / c_b^2 with b the best arm. This is the
/// ratio of variance-normalised (power) SNRs, i.e. the square of the
/// amplitude-SNR ratio. best_index is 0-based into (c2, c3, c4).
double summation_snr_ratio(const Eigen::Vector3d& c, const Eigen::Matrix3d& cov,
                           int best_index);

/// Per-run quality summary emitted by the pipeline.
struct SnrReport {
  std::array<double, 3> c_coeffs{};  // c_2, c_3, c_4
  Eigen::Matrix3d image_cov = Eigen::Matrix3d::Zero();  // per-pixel mean
  Eigen::Matrix3d image_cov_centered =
      Eigen::Matrix3d::Zero();  // spatial mean of each image removed
  std::array<double, 3> snr_per_arm{};
  double snr_sum = 0.0;
  double snr_reduced = 0.0;
  int best_arm = 2;  // arm 2..4 maximising the model SNR c_j / sqrt(C_jj)
  double ratio_reduced_best = 0.0;
  double ratio_reduced_sum = 0.0;
  double measured_sum_ratio_sq = 0.0;  // (snr_sum / snr_best)^2
  double theoretical_sum_ratio = 0.0;  // summation_snr_ratio on model c, C
};

}  // namespace mgi
