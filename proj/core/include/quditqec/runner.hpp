#pragma once

// Experiment orchestration: bath generation, decay, code optimisation,
// evaluation and pulse compilation, with every artifact written as text
// under one output directory and listed in manifest.json.
//
// Stages are keyed by a hash of the configuration fields they depend on plus
// the key of their upstream stage. A stage whose key matches the manifest and
// whose files still carry their recorded hashes is loaded instead of rerun.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "quditqec/persistence.hpp"

namespace quditqec {

struct TimeGridSpec {
  double t_max = 1.0;  // us, grid starts at 0
  int points = 201;

  std::vector<double> grid() const;
};

struct ExperimentConfig {
  // qudit
  std::vector<int> two_s{1, 3, 5, 7, 9};
  double D_zfs_kelvin = 0.0;
  double B_z = 1.0;
  // bath
  int n_spins = 100;
  double radius = 15.0;
  double min_distance = 3.0;
  int n_configurations = 64;
  std::uint64_t master_seed = 1;
  // decay
  std::vector<std::string> schedules{"free", "echo"};
  int cce_order = 2;
  double pair_cutoff = 0.0;
  TimeGridSpec free_grid{1.0, 201};
  TimeGridSpec echo_grid{400.0, 401};
  // codes
  std::string code_mode = "numerical";  // numerical | binomial | bare
  std::vector<double> t_opt{5.0};
  int code_depth = 2;
  int simplex_restarts = 8;
  int theta_points = 9;
  // pulses
  PulseCost cost{};
  AncillaParams ancilla{};
  // execution; neither affects results
  int workers = 1;
  std::string output_dir = "out";

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
/// Hash over every result-affecting field (excludes workers and output_dir).
std::string config_hash(const ExperimentConfig& config);

struct StageRecord {
  std::string key;
  std::map<std::string, std::string> files;  // path relative to the output dir -> content hash
  std::vector<std::string> warnings;  // guarded CCE divisions, optimiser flags, ...
  double seconds = 0.0;
  bool reused = false;
};

struct RunManifest {
  std::string config_hash;
  std::map<std::string, StageRecord> stages;

  std::vector<std::string> warnings() const;
};

using LogFn = std::function<void(const std::string&)>;

class Runner {
 public:
  explicit Runner(ExperimentConfig config, LogFn log = {});

  void gen_bath();
  void decay();
  void optimize();
  void evaluate();
  void compile();
  void all();

  const ExperimentConfig& config() const { return config_; }
  const RunManifest& manifest() const { return manifest_; }

  const std::vector<BathGeometry>& geometries() const { return geometries_; }
  /// Per-configuration decoherence for a schedule ("free" | "echo") and 2S.
  const std::vector<DecoherenceMatrix>& decoherence(const std::string& schedule, int two_s) const;
  const std::vector<CodePlan>& plans() const { return plans_; }

 private:
  bool try_reuse(const std::string& name, const std::string& key);
  void begin_stage(const std::string& name);
  void emit(const std::string& name, const std::string& rel_path, const std::string& contents);
  void finish_stage(const std::string& name, const std::string& key, double seconds);
  void warn(const std::string& stage, const std::string& message);
  void load_manifest();
  void save_manifest() const;
  std::string path(const std::string& rel) const;

  std::string bath_key() const;
  std::string decay_key() const;
  std::string optimize_key() const;
  std::string evaluate_key() const;
  std::string compile_key() const;

  ExperimentConfig config_;
  LogFn log_;
  RunManifest manifest_;
  bool have_bath_ = false;
  bool have_decay_ = false;
  bool have_plans_ = false;
  bool have_eval_ = false;
  std::vector<BathGeometry> geometries_;
  std::map<std::string, std::map<int, std::vector<DecoherenceMatrix>>> decoherence_;
  std::vector<CodePlan> plans_;
  std::map<std::string, double> windows_;  // plan file stem -> F2 > 0.99 window (us)
};

/// Output file stem for a plan, e.g. "s5_numerical_t5".
std::string plan_stem(const CodePlan& plan);

/// Last grid time before the curve first drops below `level` (0 if it starts
/// below, the final time if it never does).
double window_below(const std::vector<double>& times, const std::vector<double>& curve, double level);

}  // namespace quditqec
