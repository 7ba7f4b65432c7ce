// Serial reference for the covariance kernel: evaluates the full
// eight-operator Wick moment for every bucket pixel pair instead of the
// collapsed coincidence patterns. O(N_pix^2) per entry, so usable only on
// small grids; kept for correctness tests and the benchmark.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mgi/correlation.hpp"

namespace mgi {

namespace {

double real_moment(wick::Complex v) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real())))
    throw std::runtime_error("covariance reference: non-real moment");
  return v.real();
}

}  // namespace

Eigen::MatrixXd covariance_block_reference(const ObjectImage& f,
                                           const ConverterMatrix& q,
                                           int arm_i, int arm_j,
                                           long n_frames) {
  if (arm_i < 2 || arm_i > 4 || arm_j < 2 || arm_j > 4)
    throw std::invalid_argument("covariance block arms must be in 2..4");
  if (n_frames < 1)
    throw std::invalid_argument(
        "covariance_block_reference: n_frames must be >= 1");
  f.validate();
  const int n = f.grid.pixel_count();
  const PixelModeSet modes{f.grid};
  const auto table = build_pair_moment_table(q, modes);
  const double scale = 1.0 / static_cast<double>(n_frames);

  auto push_number = [&](int pixel, int arm, std::vector<wick::LadderOp>& out) {
    const int mode = modes.mode_id(pixel, arm);
    out.push_back(wick::create(mode));
    out.push_back(wick::annihilate(mode));
  };

  Eigen::MatrixXd block(n, n);
  std::vector<wick::LadderOp> s_left, s_right, joined;
  for (int p = 0; p < n; ++p) {
    const int rho = modes.inverted_pixel(p);
    for (int pp = 0; pp < n; ++pp) {
      const int rho_p = modes.inverted_pixel(pp);
      double sum = 0.0;
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          s_left.clear();
          s_right.clear();
          joined.clear();
          push_number(u, 1, s_left);
          push_number(rho, arm_i, s_left);
          push_number(v, 1, s_right);
          push_number(rho_p, arm_j, s_right);
          joined.insert(joined.end(), s_left.begin(), s_left.end());
          joined.insert(joined.end(), s_right.begin(), s_right.end());
          const double whole = real_moment(wick::gaussian_moment(joined, table));
          const double left = real_moment(wick::gaussian_moment(s_left, table));
          const double right =
              real_moment(wick::gaussian_moment(s_right, table));
          sum += f.values[u] * f.values[v] * (whole - left * right);
        }
      }
      block(p, pp) = scale * sum;
    }
  }
  return block;
}

}  // namespace mgi
