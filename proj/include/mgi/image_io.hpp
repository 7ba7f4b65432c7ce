#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "mgi/correlation.hpp"

namespace mgi {

/// Raw grayscale grid with values already mapped to [0,1].
struct GrayImage {
  GridShape grid;
  Eigen::VectorXd values;  // row-major
};

/// 8- or 16-bit PGM, "P2" (ASCII) or "P5" (binary). Values are divided by
/// the file's maxval.
GrayImage read_pgm(const std::filesystem::path& path);

/// Comma-separated grid of numbers, one image row per line.
GrayImage read_csv_grid(const std::filesystem::path& path);

/// Dispatch on extension (.pgm / .csv), check the grid when expected is
/// nonzero, and enforce the [0,1] transparency range.
ObjectImage load_object(const std::filesystem::path& path,
                        GridShape expected = {0, 0});

/// 16-bit binary PGM; values are mapped linearly from [lo, hi] to
/// 0..65535 (lo == hi writes zeros).
void write_pgm16(const std::filesystem::path& path, GridShape grid,
                 const Eigen::VectorXd& values, double lo, double hi);

/// 8-bit grayscale PNG preview with the same linear mapping.
void write_png8(const std::filesystem::path& path, GridShape grid,
                const Eigen::VectorXd& values, double lo, double hi);

}  // namespace mgi
