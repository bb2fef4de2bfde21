#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liftms/lifted.hpp"
#include "liftms/optimize.hpp"
#include "liftms/sensing.hpp"

namespace liftms {

inline constexpr const char* kVersion = "0.1.0";

// Flat JSON config; every key round-trips through config_to_json and unknown
// keys are hard errors.
struct ExperimentConfig {
  std::string experiment = "pmc";  // pmc | nn | custom
  int n = 10;
  int r = 1;
  int m = 20;          // nn sample count; pmc derives its own measurement set
  double rho = 0.01;   // pmc off-support weight
  bool sqrt_weights = false;
  int l = 3;
  double epsilon = 1e-7;
  double rho_init = -1.0;  // <= 0: 1/(n r)
  OptimizerConfig algorithm;
  LiftedStrategy strategy = LiftedStrategy::auto_select;
  std::int64_t mem_budget_bytes = 0;  // 0: library default
  bool run_lifted = true;
  bool run_unlifted = true;
  int trials = 10;
  double success_threshold = 0.05;
  std::uint64_t seed = 20240917ull;
  std::int64_t checkpoint_every = 0;  // trajectory stride; 0 = final row only
  std::int64_t ratio_every = 0;       // deflation-ratio stride within logging
  std::string output_dir = ".";
  std::string label;          // free-form tag copied to the manifest
  std::string instance_file;  // experiment == custom: ensemble JSON path
  bool zero_wall_ms = false;  // write wall_ms as 0 for byte-stable reports
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& c);

struct TrialRow {
  std::string experiment;
  int n = 0, r = 0, m = 0, l = 0;
  double epsilon = 0.0;
  std::string algorithm;  // e.g. lifted_custom_gd, unlifted_adam
  std::uint64_t seed = 0;
  int trial = 0;
  bool success = false;
  double recovery_error = 0.0;
  std::int64_t iters = 0;
  double wall_ms = 0.0;
};

struct TrialResult {
  TrialRow row;
  std::vector<TrajectoryPoint> trajectory;
};

struct ExperimentReport {
  std::vector<TrialResult> results;
  double success_rate(const std::string& algorithm_tag) const;
  int trial_count(const std::string& algorithm_tag) const;
};

// Runs the configured trial batch; trials are independent and may execute on
// a small pool, outputs always come back in (trial, arm) order.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int threads = 1);

std::string report_csv(const ExperimentReport& rep, bool zero_wall_ms = false);
std::string trajectory_csv(const ExperimentReport& rep,
                           const std::string& algorithm_tag);

// report.csv, trajectory_<tag>.csv (when recorded), manifest.json. Returns
// the written paths.
std::vector<std::string> write_experiment_artifacts(const ExperimentConfig& cfg,
                                                    const ExperimentReport& rep,
                                                    const std::string& out_dir);

// Named sweeps; full=false keeps desk-scale grids.
std::vector<std::string> preset_names();
std::vector<ExperimentConfig> preset_configs(const std::string& name,
                                             bool full_grid);

}  // namespace liftms
