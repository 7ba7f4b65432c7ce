#pragma once

#include <Eigen/Dense>

#include "mgi/wick.hpp"

namespace mgi {

struct GridShape {
  int rows = 0;
  int cols = 0;

  int pixel_count() const { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Physical inputs of the four-mode converter and the imaging geometry.
/// Wave numbers and the focal length only enter overall unit prefactors,
/// which this model normalises away; they are carried for completeness.
struct PhysicalParams {
  double k1 = 6.0e4;            // wave number, 1/cm
  double k3 = 1.7e5;            // wave number, 1/cm
  double beta = 10.0;           // nonlinear coupling, 1/cm
  double coupling_ratio = 0.4;  // xi = gamma / beta, dimensionless
  double zeta = 6.0;            // normalised crystal thickness beta * l
  double focal_length = 10.0;   // cm
  GridShape grid{64, 64};
  double pixel_pitch = 1.0e-3;  // cm
  long n_frames = 10000;        // frames accumulated per correlator output

  void validate() const;  // throws std::invalid_argument
};

/// 4x4 Bogoliubov matrix acting on (a1, a2^, a3, a4^). Bosonic commutators
/// survive the transformation iff Q K Q^ = K with K = diag(1,-1,1,-1).
class ConverterMatrix {
 public:
  explicit ConverterMatrix(Eigen::Matrix4cd q);

  const Eigen::Matrix4cd& q() const { return q_; }
  double metric_residual() const;

  static const Eigen::Matrix4cd& metric();

 private:
  Eigen::Matrix4cd q_;
};

/// Generator M of the converter, exp(M zeta) = Q. Couplings: pair
/// production a1<->a2^ at unit normalised strength plus the two up-
/// conversions a1<->a3 and a2<->a4 at strength coupling_ratio, phases fixed
/// so every coupling is +i at zeta -> 0+. Satisfies M K + K M^ = 0.
Eigen::Matrix4cd build_generator(const PhysicalParams& params);

/// Q = exp(M zeta) by scaling-and-squaring. Throws if the metric residual
/// exceeds 1e-8 (internal consistency failure).
ConverterMatrix converter_matrix(const PhysicalParams& params);

/// Mode bookkeeping for the discrete-pixel model: four frequency arms per
/// pixel, pixels independent, reference arms imaged through an inverting
/// system (crystal pixel p -> detector pixel -p).
struct PixelModeSet {
  GridShape grid;

  int mode_count() const { return 4 * grid.pixel_count(); }
  int mode_id(int pixel, int arm) const;  // arm in 1..4
  int pixel_of_mode(int mode) const { return mode / 4; }
  int arm_of_mode(int mode) const { return mode % 4 + 1; }
  int inverted_pixel(int pixel) const;
};

/// Second moment <x y> of two exit-field operators of one pixel group.
/// Modes index arms: mode = arm - 1 in 0..3. Each exit operator is the
/// Q-row (or conjugated row) combination of entrance operators, contracted
/// with the vacuum rule.
wick::Complex exit_pair_moment(const wick::LadderOp& x,
                               const wick::LadderOp& y,
                               const ConverterMatrix& q);

/// 8x8 moment table of a single pixel group (modes 0..3 = arms 1..4).
wick::PairMomentTable single_group_moment_table(const ConverterMatrix& q);

/// Moment table over all 4*N_pix modes: every pixel group carries the same
/// 8x8 block (spatial stationarity), cross-group moments are zero.
wick::PairMomentTable build_pair_moment_table(const ConverterMatrix& q,
                                              const PixelModeSet& modes);

}  // namespace mgi
