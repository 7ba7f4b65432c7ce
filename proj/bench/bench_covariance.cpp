// Compares the closed-form covariance kernel against the serial
// eight-operator reference on growing grids, then scales the kernel alone.
// Usage: bench_covariance [max_reference_side] [max_kernel_side]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mgi/correlation.hpp"

namespace {

double seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

mgi::ObjectImage striped(mgi::GridShape grid) {
  mgi::ObjectImage f = mgi::ObjectImage::constant(grid, 0.0);
  for (int p = 0; p < grid.pixel_count(); ++p)
    f.values[p] = (p / grid.cols) % 2 == 0 ? 1.0 : 0.25;
  return f;
}

}  // namespace

int main(int argc, char** argv) {
  const int max_ref = argc > 1 ? std::atoi(argv[1]) : 4;
  const int max_kernel = argc > 2 ? std::atoi(argv[2]) : 32;

  mgi::PhysicalParams params;
  params.zeta = 1.0;
  params.coupling_ratio = 0.4;
  const mgi::ConverterMatrix q = mgi::converter_matrix(params);

  std::printf("%-8s %-14s %-14s %-10s %-12s\n", "grid", "reference[s]",
              "kernel[s]", "speedup", "max|diff|");
  for (int side = 2; side <= max_ref; side *= 2) {
    const mgi::ObjectImage f = striped({side, side});
    Eigen::MatrixXd ref, fast;
    const double t_ref = seconds(
        [&] { ref = mgi::covariance_block_reference(f, q, 2, 3, 100); });
    const double t_fast =
        seconds([&] { fast = mgi::covariance_block(f, q, 2, 3, 100); });
    std::printf("%dx%-6d %-14.4f %-14.6f %-10.1f %-12.3e\n", side, side,
                t_ref, t_fast, t_ref / t_fast,
                (ref - fast).cwiseAbs().maxCoeff());
  }

  std::printf("\nkernel scaling (full 3x3 block assembly)\n");
  std::printf("%-8s %-12s\n", "grid", "kernel[s]");
  for (int side = 8; side <= max_kernel; side *= 2) {
    const mgi::ObjectImage f = striped({side, side});
    const double t = seconds(
        [&] { (void)mgi::build_covariance(f, q, 100); });
    std::printf("%dx%-6d %-12.3f\n", side, side, t);
  }
  return 0;
}
