#include "mgi/pipeline.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "mgi/image_io.hpp"
#include "mgi/sampling.hpp"

namespace mgi {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_grid(GridShape g) {
  return std::to_string(g.rows) + "x" + std::to_string(g.cols);
}

std::string fmt_fingerprint(std::uint64_t fp) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fp));
  return buf;
}

GridShape parse_grid(const std::string& text) {
  const auto sep = text.find('x');
  try {
    if (sep == std::string::npos) throw std::invalid_argument(text);
    size_t used_r = 0, used_c = 0;
    const std::string rows_text = text.substr(0, sep);
    const std::string cols_text = text.substr(sep + 1);
    const int rows = std::stoi(rows_text, &used_r);
    const int cols = std::stoi(cols_text, &used_c);
    if (used_r != rows_text.size() || used_c != cols_text.size() ||
        rows <= 0 || cols <= 0)
      throw std::invalid_argument(text);
    return {rows, cols};
  } catch (const std::exception&) {
    throw ConfigError("grid must look like 64x64, got '" + text + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " expects a number, got '" + value + "'");
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " expects an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError(key + " expects on/off, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Canonical key=value dump: the fingerprint input and the manifest body.
std::vector<std::pair<std::string, std::string>> canonical_items(
    const ExperimentConfig& c) {
  return {
      {"k1", fmt(c.params.k1)},
      {"k3", fmt(c.params.k3)},
      {"beta", fmt(c.params.beta)},
      {"coupling_ratio", fmt(c.params.coupling_ratio)},
      {"zeta", fmt(c.params.zeta)},
      {"focal_length", fmt(c.params.focal_length)},
      {"grid", fmt_grid(c.params.grid)},
      {"pixel_pitch", fmt(c.params.pixel_pitch)},
      {"n_frames", std::to_string(c.params.n_frames)},
      {"object", c.object_path},
      {"seed", std::to_string(c.seed)},
      {"noise", c.noise ? "on" : "off"},
      {"detector_model", c.detector_model},
      {"cov_approx",
       c.cov_mode == CovarianceMode::Exact ? "exact" : "blockdiag"},
      {"kappa", c.reduction.kappa > 0.0 ? fmt(c.reduction.kappa) : "auto"},
      {"pinv_tol", fmt(c.reduction.pinv_tol)},
      {"max_iters", std::to_string(c.reduction.max_iters)},
      {"conv_tol", fmt(c.reduction.conv_tol)},
      {"snr_cap", fmt(c.snr_cap)},
  };
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    params.validate();
    reduction.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (object_path.empty()) throw ConfigError("object path is not set");
  if (!std::filesystem::exists(object_path))
    throw ConfigError("object file does not exist: " + object_path);
  if (out_dir.empty()) throw ConfigError("out_dir is not set");
  if (detector_model != "ideal" && detector_model != "bin2")
    throw ConfigError("detector_model must be 'ideal' or 'bin2'");
  if (detector_model == "bin2" &&
      (params.grid.rows % 2 != 0 || params.grid.cols % 2 != 0))
    throw ConfigError("detector_model bin2 needs an even grid");
  if (!(snr_cap > 0.0)) throw ConfigError("snr_cap must be positive");
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  ExperimentConfig config;

  const std::map<std::string, std::function<void(const std::string&)>>
      setters = {
          {"k1", [&](const std::string& v) { config.params.k1 = parse_double("k1", v); }},
          {"k3", [&](const std::string& v) { config.params.k3 = parse_double("k3", v); }},
          {"beta", [&](const std::string& v) { config.params.beta = parse_double("beta", v); }},
          {"coupling_ratio",
           [&](const std::string& v) {
             config.params.coupling_ratio = parse_double("coupling_ratio", v);
           }},
          {"zeta", [&](const std::string& v) { config.params.zeta = parse_double("zeta", v); }},
          {"focal_length",
           [&](const std::string& v) {
             config.params.focal_length = parse_double("focal_length", v);
           }},
          {"grid", [&](const std::string& v) { config.params.grid = parse_grid(v); }},
          {"pixel_pitch",
           [&](const std::string& v) {
             config.params.pixel_pitch = parse_double("pixel_pitch", v);
           }},
          {"n_frames",
           [&](const std::string& v) {
             config.params.n_frames = parse_long("n_frames", v);
           }},
          {"object", [&](const std::string& v) { config.object_path = v; }},
          {"out_dir", [&](const std::string& v) { config.out_dir = v; }},
          {"seed",
           [&](const std::string& v) {
             config.seed = static_cast<std::uint64_t>(
                 std::stoull(v));
           }},
          {"noise", [&](const std::string& v) { config.noise = parse_bool("noise", v); }},
          {"detector_model",
           [&](const std::string& v) { config.detector_model = v; }},
          {"cov_approx",
           [&](const std::string& v) {
             if (v == "exact") {
               config.cov_mode = CovarianceMode::Exact;
             } else if (v == "blockdiag") {
               config.cov_mode = CovarianceMode::BlockDiagonal;
             } else {
               throw ConfigError("cov_approx must be exact or blockdiag");
             }
           }},
          {"kappa",
           [&](const std::string& v) {
             config.reduction.kappa = v == "auto" ? 0.0 : parse_double("kappa", v);
           }},
          {"pinv_tol",
           [&](const std::string& v) {
             config.reduction.pinv_tol = parse_double("pinv_tol", v);
           }},
          {"max_iters",
           [&](const std::string& v) {
             config.reduction.max_iters =
                 static_cast<int>(parse_long("max_iters", v));
           }},
          {"conv_tol",
           [&](const std::string& v) {
             config.reduction.conv_tol = parse_double("conv_tol", v);
           }},
          {"emit_ghost_images",
           [&](const std::string& v) {
             config.emit_ghost_images = parse_bool("emit_ghost_images", v);
           }},
          {"emit_sum",
           [&](const std::string& v) { config.emit_sum = parse_bool("emit_sum", v); }},
          {"emit_reduced",
           [&](const std::string& v) {
             config.emit_reduced = parse_bool("emit_reduced", v);
           }},
          {"emit_report",
           [&](const std::string& v) {
             config.emit_report = parse_bool("emit_report", v);
           }},
          {"snr_cap",
           [&](const std::string& v) { config.snr_cap = parse_double("snr_cap", v); }},
      };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": bad value for '" + key + "'");
    }
  }
  return config;
}

std::uint64_t config_fingerprint(const ExperimentConfig& config) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](const std::string& s) {
    for (const unsigned char ch : s) {
      hash ^= ch;
      hash *= 0x100000001b3ull;
    }
  };
  for (const auto& [key, value] : canonical_items(config)) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  return hash;
}

namespace {

json report_to_json(const SnrReport& r) {
  auto matrix3 = [](const Eigen::Matrix3d& m) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i)
      rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return rows;
  };
  return json{{"c_coeffs", r.c_coeffs},
              {"image_cov", matrix3(r.image_cov)},
              {"image_cov_centered", matrix3(r.image_cov_centered)},
              {"snr_per_arm", r.snr_per_arm},
              {"snr_sum", r.snr_sum},
              {"snr_reduced", r.snr_reduced},
              {"best_arm", r.best_arm},
              {"ratio_reduced_best", r.ratio_reduced_best},
              {"ratio_reduced_sum", r.ratio_reduced_sum},
              {"measured_sum_ratio_sq", r.measured_sum_ratio_sq},
              {"theoretical_sum_ratio", r.theoretical_sum_ratio}};
}

double json_number(const json& v) {
  return v.is_number() ? v.get<double>()
                       : std::numeric_limits<double>::quiet_NaN();
}

SnrReport report_from_json(const json& j) {
  SnrReport r;
  for (int k = 0; k < 3; ++k) {
    r.c_coeffs[k] = json_number(j.at("c_coeffs").at(k));
    r.snr_per_arm[k] = json_number(j.at("snr_per_arm").at(k));
    for (int l = 0; l < 3; ++l) {
      r.image_cov(k, l) = json_number(j.at("image_cov").at(k).at(l));
      r.image_cov_centered(k, l) =
          json_number(j.at("image_cov_centered").at(k).at(l));
    }
  }
  r.snr_sum = json_number(j.at("snr_sum"));
  r.snr_reduced = json_number(j.at("snr_reduced"));
  r.best_arm = j.at("best_arm").get<int>();
  r.ratio_reduced_best = json_number(j.at("ratio_reduced_best"));
  r.ratio_reduced_sum = json_number(j.at("ratio_reduced_sum"));
  r.measured_sum_ratio_sq = json_number(j.at("measured_sum_ratio_sq"));
  r.theoretical_sum_ratio = json_number(j.at("theoretical_sum_ratio"));
  return r;
}

}  // namespace

void print_report(const SnrReport& r, std::ostream& out) {
  out << "c2 = " << fmt(r.c_coeffs[0]) << "\n";
  out << "c3 = " << fmt(r.c_coeffs[1]) << "\n";
  out << "c4 = " << fmt(r.c_coeffs[2]) << "\n";
  for (int i = 0; i < 3; ++i) {
    out << "image_cov_row" << i + 1 << " = " << fmt(r.image_cov(i, 0)) << " "
        << fmt(r.image_cov(i, 1)) << " " << fmt(r.image_cov(i, 2)) << "\n";
  }
  for (int i = 0; i < 3; ++i) {
    out << "image_cov_centered_row" << i + 1 << " = "
        << fmt(r.image_cov_centered(i, 0)) << " "
        << fmt(r.image_cov_centered(i, 1)) << " "
        << fmt(r.image_cov_centered(i, 2)) << "\n";
  }
  out << "snr_arm2 = " << fmt(r.snr_per_arm[0]) << "\n";
  out << "snr_arm3 = " << fmt(r.snr_per_arm[1]) << "\n";
  out << "snr_arm4 = " << fmt(r.snr_per_arm[2]) << "\n";
  out << "snr_sum = " << fmt(r.snr_sum) << "\n";
  out << "snr_reduced = " << fmt(r.snr_reduced) << "\n";
  out << "best_arm = " << r.best_arm << "\n";
  out << "ratio_reduced_best = " << fmt(r.ratio_reduced_best) << "\n";
  out << "ratio_reduced_sum = " << fmt(r.ratio_reduced_sum) << "\n";
  out << "measured_sum_ratio_sq = " << fmt(r.measured_sum_ratio_sq) << "\n";
  out << "theoretical_sum_ratio = " << fmt(r.theoretical_sum_ratio) << "\n";
}

void print_report_from_dir(const std::filesystem::path& dir,
                           std::ostream& out) {
  const auto path = dir / "report.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("no report at " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("unreadable report " + path.string() + ": " +
                             e.what());
  }
  print_report(report_from_json(j), out);
}

PipelineArtifacts run_pipeline(const ExperimentConfig& config) {
  config.validate();
  ObjectImage truth = [&] {
    try {
      return load_object(config.object_path, config.params.grid);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();

  const GridShape grid = config.params.grid;
  const int n = grid.pixel_count();
  const long n_frames = config.params.n_frames;
  const ConverterMatrix q = converter_matrix(config.params);

  std::array<Eigen::MatrixXd, 3> detectors;
  GridShape display_grid = grid;
  if (config.detector_model == "bin2") {
    detectors.fill(binning_matrix(grid, 2, BinWeights::Sum));
    display_grid = {grid.rows / 2, grid.cols / 2};
  } else {
    detectors.fill(Eigen::MatrixXd::Identity(n, n));
  }
  const std::array<double, 3> c = {gi_coefficient(q, 2), gi_coefficient(q, 3),
                                   gi_coefficient(q, 4)};
  const MeasurementModel model = build_measurement_operator(c, detectors, grid);

  const std::uint64_t fingerprint = config_fingerprint(config);
  const CovarianceBlocks sigma_true =
      build_covariance(truth, q, n_frames, &detectors, config.cov_mode);

  AcquisitionRecord record;
  if (config.noise) {
    record = sample_acquisition(model, sigma_true, truth, config.seed,
                                fingerprint);
  } else {
    record = {model.a * truth.values, config.seed, n_frames, fingerprint};
  }

  const ReductionResult reduced = iterate_reduction(
      record.xi, model,
      [&](const ObjectImage& f) {
        return build_covariance(f, q, n_frames, &detectors, config.cov_mode)
            .sigma;
      },
      config.reduction);

  // Ghost images for display: the de-inverted correlator maps.
  const PixelModeSet display_modes{display_grid};
  const int dn = display_grid.pixel_count();
  std::array<Eigen::VectorXd, 3> displays;
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd block = record.xi.segment(k * dn, dn);
    displays[k].resize(dn);
    for (int p = 0; p < dn; ++p)
      displays[k][p] = block[display_modes.inverted_pixel(p)];
  }
  const Eigen::VectorXd sum_display = displays[0] + displays[1] + displays[2];

  // The truth seen at display resolution (binned detectors average it).
  ObjectImage display_truth = truth;
  if (!(display_grid == grid)) {
    display_truth = ObjectImage{
        display_grid,
        binning_matrix(grid, grid.rows / display_grid.rows,
                       BinWeights::Average) *
            truth.values};
  }

  SnrReport report;
  report.c_coeffs = c;
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = 0; bj < 3; ++bj) {
      const auto block = sigma_true.sigma.block(bi * dn, bj * dn, dn, dn);
      const double trace = block.trace();
      const double total = block.sum();
      report.image_cov(bi, bj) = trace / dn;
      report.image_cov_centered(bi, bj) = (trace - total / dn) / dn;
    }
  }

  // Model-side best arm: largest c_j / sqrt(centered per-pixel variance).
  int best = 0;
  double best_score = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double var = report.image_cov_centered(k, k);
    const double score = var > 0.0 ? c[k] / std::sqrt(var) : c[k];
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  report.best_arm = best + 2;

  auto guarded_snr = [&](const Eigen::VectorXd& estimate,
                         const ObjectImage& ref) {
    try {
      return snr(estimate, ref, config.snr_cap);
    } catch (const std::invalid_argument&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  for (int k = 0; k < 3; ++k)
    report.snr_per_arm[k] = guarded_snr(displays[k], display_truth);
  report.snr_sum = guarded_snr(sum_display, display_truth);
  report.snr_reduced = guarded_snr(reduced.estimate.values, truth);

  const double snr_best = report.snr_per_arm[best];
  report.ratio_reduced_best =
      snr_best != 0.0 ? report.snr_reduced / snr_best : 0.0;
  report.ratio_reduced_sum =
      report.snr_sum != 0.0 ? report.snr_reduced / report.snr_sum : 0.0;
  report.measured_sum_ratio_sq =
      snr_best != 0.0 ? std::pow(report.snr_sum / snr_best, 2.0) : 0.0;
  try {
    report.theoretical_sum_ratio = summation_snr_ratio(
        Eigen::Vector3d(c[0], c[1], c[2]), report.image_cov_centered, best);
  } catch (const std::invalid_argument&) {
    report.theoretical_sum_ratio = std::numeric_limits<double>::quiet_NaN();
  }

  // Artifacts.
  const std::filesystem::path out_dir(config.out_dir);
  std::filesystem::create_directories(out_dir);
  json image_manifest = json::object();
  auto emit_image = [&](const std::string& name, GridShape g,
                        const Eigen::VectorXd& values, double lo, double hi) {
    write_pgm16(out_dir / (name + ".pgm"), g, values, lo, hi);
    write_png8(out_dir / (name + ".png"), g, values, lo, hi);
    image_manifest[name] = {{"lo", lo}, {"hi", hi}};
  };
  auto data_range = [](const Eigen::VectorXd& v) {
    return std::pair<double, double>(v.minCoeff(), v.maxCoeff());
  };

  if (config.emit_ghost_images) {
    for (int k = 0; k < 3; ++k) {
      const auto [lo, hi] = data_range(displays[k]);
      emit_image("ghost_arm" + std::to_string(k + 2), display_grid,
                 displays[k], lo, hi);
    }
  }
  if (config.emit_sum) {
    const auto [lo, hi] = data_range(sum_display);
    emit_image("ghost_sum", display_grid, sum_display, lo, hi);
  }
  if (config.emit_reduced) {
    emit_image("reduced", grid, reduced.estimate.values, 0.0, 1.0);
  }
  if (config.emit_report) {
    std::ofstream text(out_dir / "report.txt");
    if (!text) throw std::runtime_error("cannot write report.txt");
    print_report(report, text);
    std::ofstream jtext(out_dir / "report.json");
    if (!jtext) throw std::runtime_error("cannot write report.json");
    jtext << report_to_json(report).dump(2) << "\n";
  }

  json manifest{{"format_version", 1},
                {"seed", config.seed},
                {"fingerprint", fmt_fingerprint(fingerprint)},
                {"iterations", reduced.iterations},
                {"images", image_manifest},
                {"config", json::object()}};
  for (const auto& [key, value] : canonical_items(config))
    manifest["config"][key] = value;
  {
    std::ofstream m(out_dir / "manifest.json");
    if (!m) throw std::runtime_error("cannot write manifest.json");
    m << manifest.dump(2) << "\n";
  }

  return {report,   out_dir,  reduced.estimate, reduced.iterations,
          display_grid, displays, sum_display};
}

}  // namespace mgi
