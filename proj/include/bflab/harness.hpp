#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bflab/field.hpp"
#include "bflab/kernel.hpp"
#include "bflab/perco.hpp"

#include "json.hpp"

namespace bflab {

/// One JSON document per run; flags may override seed/replicates/workers/out.
struct ExperimentConfig {
  std::string experiment;
  KernelSpec kernel;
  bool kernel_r_auto = true;  // r = n^gamma per scale
  QuadSpec quad;
  std::vector<double> scales = {32};
  std::vector<double> levels = {0.0};
  std::vector<double> times;  // empty: use the t = n^-alpha rule
  double alpha = 0.25;
  NoiseKind noise = NoiseKind::Gaussian;
  int N = 4;
  int replicates = 1000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware
  std::string out;

  // revealment
  double arm_c = 2.0;
  int arm_replicates = 0;  // 0 = replicates

  // switch-count / fluctuation time grids
  double horizon = 1.0;
  int time_substeps = 10;

  // fluctuation sup-norm statistic
  std::vector<double> sup_hs = {0.1, 0.01, 0.001};
  double sup_c = 0.0;  // 0 = calibrate at the first h
  double sup_exponent = 0.4;

  // spectrum-check
  std::vector<std::string> functions = {"dictator", "majority3", "tribes9"};
  std::vector<double> spectrum_times = {0.1, 0.5, 1.0};

  // sample-field
  std::string sampler = "convolution";
  Rect region{0, 0, 8, 8};
  int degree = -1;
  bool csv_dump = false;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  std::uint64_t hash() const;

  /// Kernel for scale n (applies the r = n^gamma rule when r is auto).
  KernelSpec kernel_at(double n) const;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::uint64_t config_hash = 0;
  double wall_seconds = 0.0;
  nlohmann::json extra;
};

ExperimentResult run_crossing_probability(const ExperimentConfig& cfg);
ExperimentResult run_noise_sensitivity(const ExperimentConfig& cfg);
ExperimentResult run_near_critical(const ExperimentConfig& cfg);
ExperimentResult run_switch_count(const ExperimentConfig& cfg);
ExperimentResult run_plane_restriction(const ExperimentConfig& cfg);
ExperimentResult run_fluctuation_check(const ExperimentConfig& cfg);
ExperimentResult run_revealment(const ExperimentConfig& cfg);
ExperimentResult run_spectrum_check(const ExperimentConfig& cfg);

/// Dispatch on cfg.experiment (the CLI subcommand names).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// CSV with a `# config_hash=...` comment line; byte-stable for a fixed
/// config + seed. The JSON mirror additionally carries wall-clock metadata.
void write_csv(const ExperimentResult& result, const std::string& path);
void write_json(const ExperimentResult& result, const std::string& path);

/// Binary matrix export: magic, JSON header (region, N, kernel hash, seed),
/// then row-major float64 values. Optionally an (x, y, value) CSV next to it.
void export_field(const FieldSample& field, std::uint64_t kernel_hash,
                  const std::string& path, bool csv_dump);
FieldSample import_field(const std::string& path);

/// Samples one field per cfg (sampler = "convolution" | "series") and writes
/// it to cfg.out.
void run_sample_field(const ExperimentConfig& cfg);

std::string format_double(double v);

}  // namespace bflab
