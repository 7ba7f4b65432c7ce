#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mgi/correlation.hpp"
#include "mgi/metrics.hpp"
#include "mgi/reduction.hpp"

namespace mgi {

/// Raised for unusable configurations (maps to CLI exit code 2, numerical
/// failures keep their own types and map to 3).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  PhysicalParams params;
  std::string object_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool noise = true;
  std::string detector_model = "ideal";  // "ideal" or "bin2"
  ReductionConfig reduction;
  CovarianceMode cov_mode = CovarianceMode::Exact;
  bool emit_ghost_images = true;
  bool emit_sum = true;
  bool emit_reduced = true;
  bool emit_report = true;
  double snr_cap = kSnrCap;

  void validate() const;  // throws ConfigError
};

/// Flat key = value file, '#' comments. Unknown keys are rejected.
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// FNV-1a hash over the canonicalised configuration; identifies the model
/// behind an acquisition or an output directory.
std::uint64_t config_fingerprint(const ExperimentConfig& config);

struct PipelineArtifacts {
  SnrReport report;
  std::filesystem::path out_dir;
  ObjectImage reduced;
  int iterations = 0;
  GridShape display_grid;
  std::array<Eigen::VectorXd, 3> ghost_displays;  // de-inverted, arms 2..4
  Eigen::VectorXd sum_display;
};

/// End-to-end run: build the model, sample one acquisition, reconstruct,
/// score, and write ghost images, their sum, the reduced estimate, the
/// report (text + JSON) and a manifest under config.out_dir.
PipelineArtifacts run_pipeline(const ExperimentConfig& config);

/// Re-print the report stored in an output directory.
void print_report_from_dir(const std::filesystem::path& dir,
                           std::ostream& out);

void print_report(const SnrReport& report, std::ostream& out);

}  // namespace mgi
