#pragma once

#include <array>

#include <Eigen/Dense>

#include "mgi/gaussian_optics.hpp"

namespace mgi {

/// Piecewise-constant transparency map, one value per pixel, each in [0,1].
struct ObjectImage {
  GridShape grid;
  Eigen::VectorXd values;  // row-major pixel order

  static ObjectImage constant(GridShape grid, double value);
  void validate() const;  // throws std::invalid_argument

  double pixel(int p) const { return values[p]; }
  double at(int r, int c) const { return values[r * grid.cols + c]; }
};

/// Mean photon number <n_arm> at the crystal exit, identical for every
/// pixel (spatial stationarity). Behind the object the arm-1 value carries
/// an extra transparency weight f(p).
double mean_intensity(const ConverterMatrix& q, int arm);

/// Ghost-image coefficient c_j, arm_j in 2..4: the factor multiplying the
/// inverted transparency in the mean ghost image. Computed as
/// |Q_11 Q_j1* + Q_13 Q_j3*|^2 and cross-checked against the Wick-computed
/// same-pixel Cov(n_1, n_j); a disagreement beyond 1e-8 relative throws.
double gi_coefficient(const ConverterMatrix& q, int arm_j);

/// Mean ghost image on the detector grid: c_j * f(-p).
Eigen::VectorXd ghost_image_mean(const ObjectImage& f, double c_j);

/// Permutation realising the point inversion p -> -p through the grid
/// centre: (P f)(p) = f(-p).
Eigen::MatrixXd inversion_permutation(GridShape grid);

enum class BinWeights {
  Sum,          // each row sums its b x b block
  Average,      // rows average, entries 1/b^2
  Orthonormal,  // rows have unit norm, entries 1/b
};

/// (N/b^2) x N pixel-binning matrix over b x b blocks.
Eigen::MatrixXd binning_matrix(GridShape grid, int factor, BinWeights weights);

/// Block measurement operator A = [B_2 C_2; B_3 C_3; B_4 C_4] with
/// C_j = c_j * inversion permutation.
struct MeasurementModel {
  GridShape grid;
  std::array<double, 3> c_coeffs{};          // c_2, c_3, c_4
  std::array<Eigen::MatrixXd, 3> detectors;  // B_2, B_3, B_4
  Eigen::MatrixXd a;
};

MeasurementModel build_measurement_operator(
    const std::array<double, 3>& c,
    const std::array<Eigen::MatrixXd, 3>& detectors, GridShape grid);

/// Ideal-detector model (B_j = I) with c_j taken from gi_coefficient.
MeasurementModel build_measurement_operator(const ConverterMatrix& q,
                                            GridShape grid);

/// Signal-dependent noise covariance of the stacked correlator outputs,
/// 1/n_frames already applied.
struct CovarianceBlocks {
  Eigen::MatrixXd sigma;  // 3N x 3N, detector frame, symmetric PSD
  long frame_count = 1;
};

enum class CovarianceMode {
  Exact,
  /// Keep each detector pixel's exact cross-arm covariance (including its
  /// bucket-mediated contributions), drop cross-pixel entries.
  BlockDiagonal,
};

/// One N x N block Sigma_ij(f) = Cov(G_i(p), G_j(p')) / n_frames of the
/// ghost-image fluctuation operators G_j = I_1 I_j - <I_1><I_j>, with the
/// bucket I_1 = sum_p f(p) n_1(p). Detector-frame indices. The four-pixel
/// sum is collapsed to closed form by enumerating the coincidence patterns
/// that survive cross-pixel independence, so the cost is O(N^2) per block.
Eigen::MatrixXd covariance_block(const ObjectImage& f,
                                 const ConverterMatrix& q, int arm_i,
                                 int arm_j, long n_frames);

/// Serial reference for covariance_block: directly sums the Wick moments of
/// the full eight-operator strings over every bucket pixel pair. O(N^2) per
/// entry; test and benchmark use only.
Eigen::MatrixXd covariance_block_reference(const ObjectImage& f,
                                           const ConverterMatrix& q,
                                           int arm_i, int arm_j,
                                           long n_frames);

/// All nine blocks conjugated by the detector matrices,
/// Sigma_nu = [B_i Sigma_ij B_j^T]. Throws if the result fails the
/// symmetry/PSD consistency checks.
CovarianceBlocks build_covariance(
    const ObjectImage& f, const ConverterMatrix& q, long n_frames,
    const std::array<Eigen::MatrixXd, 3>* detectors = nullptr,
    CovarianceMode mode = CovarianceMode::Exact);

}  // namespace mgi
