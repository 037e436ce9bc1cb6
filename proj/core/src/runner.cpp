#include "quditqec/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "quditqec/parallel.hpp"
#include "quditqec/random.hpp"

namespace quditqec {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string indexed(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return prefix + buf + ".txt";
}

std::string spin_tag(int two_s) { return "s" + std::to_string(two_s); }

template <typename T>
void take(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ValidationError("config: unknown key '" + where + "." + item.key() + "'");
  }
}

json section(const json& root, const char* key) { return root.contains(key) ? root.at(key) : json::object(); }

json grid_json(const TimeGridSpec& g) { return {{"t_max", g.t_max}, {"points", g.points}}; }

TimeGridSpec grid_from(const json& obj, const std::string& where, TimeGridSpec g) {
  only_keys(obj, where, {"t_max", "points"});
  take(obj, "t_max", g.t_max);
  take(obj, "points", g.points);
  return g;
}

json result_json(const ExperimentConfig& c) {
  return {
      {"qudit", {{"two_s", c.two_s}, {"D_zfs_kelvin", c.D_zfs_kelvin}, {"B_z", c.B_z}}},
      {"bath",
       {{"n_spins", c.n_spins},
        {"radius", c.radius},
        {"min_distance", c.min_distance},
        {"n_configurations", c.n_configurations},
        {"master_seed", c.master_seed}}},
      {"decay",
       {{"schedules", c.schedules},
        {"cce_order", c.cce_order},
        {"pair_cutoff", c.pair_cutoff},
        {"free_grid", grid_json(c.free_grid)},
        {"echo_grid", grid_json(c.echo_grid)}}},
      {"codes",
       {{"mode", c.code_mode},
        {"t_opt", c.t_opt},
        {"depth", c.code_depth},
        {"simplex_restarts", c.simplex_restarts},
        {"theta_points", c.theta_points}}},
      {"pulses",
       {{"pulse_ns", c.cost.pulse_ns},
        {"measurement_ns", c.cost.measurement_ns},
        {"window_fraction", c.cost.window_fraction},
        {"g_A", c.ancilla.g_A},
        {"J_z", c.ancilla.J_z},
        {"linewidth", c.ancilla.linewidth}}},
  };
}

std::string key_of(const std::string& upstream, const json& fields) {
  return hex64(fnv1a64(upstream + "|" + fields.dump()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> theta_grid(int n) {
  if (n == 1) return {kPi / 4};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(0.5 * kPi * i / (n - 1));
  return out;
}

std::string cycle_report(const QecCycle& cycle) {
  std::string out = "# quditqec cycle-report v" + std::to_string(kFormatVersion) + "\n";
  out += "pulses " + std::to_string(cycle.duration.pulses) + "\n";
  out += "measurements " + std::to_string(cycle.duration.measurements) + "\n";
  out += "duration_ns " + format_real(cycle.duration.total_ns) + "\n";
  out += "window_us " + format_real(cycle.duration.window_us) + "\n";
  out += "flagged " + std::to_string(cycle.duration.flagged ? 1 : 0) + "\n";
  out += "verification_error " + format_real(cycle.verification.max_error) + "\n";
  for (const auto& st : cycle.verification.stages) {
    out += "stage " + st.label + " " + (st.checked ? format_real(st.error) : std::string("unchecked")) + "\n";
  }
  for (const auto& p : cycle.detection.probes) {
    out += "probe " + std::to_string(p.outcome) + " " + std::to_string(p.level_a) + " " + std::to_string(p.level_b) +
           " " + format_real(p.freq_a) + " " + format_real(p.freq_b) + "\n";
  }
  return out;
}

}  // namespace

std::vector<double> TimeGridSpec::grid() const {
  if (!(t_max > 0.0) || points < 2) throw ValidationError("time grid: need t_max > 0 and at least 2 points");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out.push_back(t_max * i / (points - 1));
  return out;
}

void ExperimentConfig::validate() const {
  if (two_s.empty()) throw ValidationError("config: qudit.two_s is empty");
  std::set<int> seen;
  for (int t : two_s) {
    if (t < 1 || t > SpinQuantum::kMaxTwoS || t % 2 == 0) {
      throw ValidationError("config: qudit.two_s entries must be odd (half-integer S) in [1, 39], got " +
                            std::to_string(t));
    }
    if (!seen.insert(t).second) throw ValidationError("config: duplicate qudit.two_s entry");
  }
  if (!(B_z > 0.0)) throw ValidationError("config: qudit.B_z must be positive");
  if (!(D_zfs_kelvin >= 0.0) && !(D_zfs_kelvin < 0.0)) throw ValidationError("config: qudit.D_zfs_kelvin is not finite");
  if (n_spins < 1) throw ValidationError("config: bath.n_spins must be >= 1");
  if (!(min_distance > 0.0) || !(radius > min_distance)) {
    throw ValidationError("config: need 0 < bath.min_distance < bath.radius");
  }
  if (n_configurations < 1) throw ValidationError("config: bath.n_configurations must be >= 1");
  if (schedules.empty()) throw ValidationError("config: decay.schedules is empty");
  std::set<std::string> sched;
  for (const auto& s : schedules) {
    EvolutionSchedule::from_name(s);
    if (!sched.insert(s).second) throw ValidationError("config: duplicate schedule '" + s + "'");
  }
  if (cce_order != 1 && cce_order != 2) throw ValidationError("config: decay.cce_order must be 1 or 2");
  if (!(pair_cutoff >= 0.0)) throw ValidationError("config: decay.pair_cutoff must be >= 0");
  free_grid.grid();
  echo_grid.grid();
  if (code_mode != "numerical" && code_mode != "binomial" && code_mode != "bare") {
    throw ValidationError("config: codes.mode must be numerical, binomial or bare");
  }
  if (code_mode == "numerical" && t_opt.empty()) throw ValidationError("config: codes.t_opt is empty");
  for (double t : t_opt) {
    if (!(t > 0.0) || t > echo_grid.t_max) throw ValidationError("config: codes.t_opt must lie in (0, echo t_max]");
  }
  if (code_depth < 1) throw ValidationError("config: codes.depth must be >= 1");
  if (simplex_restarts < 1) throw ValidationError("config: codes.simplex_restarts must be >= 1");
  if (theta_points < 1) throw ValidationError("config: codes.theta_points must be >= 1");
  if (!(cost.pulse_ns > 0.0) || !(cost.measurement_ns > 0.0)) throw ValidationError("config: pulse costs must be positive");
  if (!(cost.window_fraction > 0.0) || cost.window_fraction > 1.0) {
    throw ValidationError("config: pulses.window_fraction must be in (0, 1]");
  }
  if (!(ancilla.linewidth > 0.0)) throw ValidationError("config: pulses.linewidth must be positive");
  if (workers < 1) throw ValidationError("config: workers must be >= 1");
  if (output_dir.empty()) throw ValidationError("config: output_dir is empty");
}

ExperimentConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  only_keys(root, "", {"qudit", "bath", "decay", "codes", "pulses", "workers", "output_dir"});
  ExperimentConfig c;
  const json q = section(root, "qudit");
  only_keys(q, "qudit", {"two_s", "D_zfs_kelvin", "B_z"});
  take(q, "two_s", c.two_s);
  take(q, "D_zfs_kelvin", c.D_zfs_kelvin);
  take(q, "B_z", c.B_z);
  const json b = section(root, "bath");
  only_keys(b, "bath", {"n_spins", "radius", "min_distance", "n_configurations", "master_seed"});
  take(b, "n_spins", c.n_spins);
  take(b, "radius", c.radius);
  take(b, "min_distance", c.min_distance);
  take(b, "n_configurations", c.n_configurations);
  take(b, "master_seed", c.master_seed);
  const json d = section(root, "decay");
  only_keys(d, "decay", {"schedules", "cce_order", "pair_cutoff", "free_grid", "echo_grid"});
  take(d, "schedules", c.schedules);
  take(d, "cce_order", c.cce_order);
  take(d, "pair_cutoff", c.pair_cutoff);
  if (d.contains("free_grid")) c.free_grid = grid_from(d.at("free_grid"), "decay.free_grid", c.free_grid);
  if (d.contains("echo_grid")) c.echo_grid = grid_from(d.at("echo_grid"), "decay.echo_grid", c.echo_grid);
  const json k = section(root, "codes");
  only_keys(k, "codes", {"mode", "t_opt", "depth", "simplex_restarts", "theta_points"});
  take(k, "mode", c.code_mode);
  take(k, "t_opt", c.t_opt);
  take(k, "depth", c.code_depth);
  take(k, "simplex_restarts", c.simplex_restarts);
  take(k, "theta_points", c.theta_points);
  const json p = section(root, "pulses");
  only_keys(p, "pulses", {"pulse_ns", "measurement_ns", "window_fraction", "g_A", "J_z", "linewidth"});
  take(p, "pulse_ns", c.cost.pulse_ns);
  take(p, "measurement_ns", c.cost.measurement_ns);
  take(p, "window_fraction", c.cost.window_fraction);
  take(p, "g_A", c.ancilla.g_A);
  take(p, "J_z", c.ancilla.J_z);
  take(p, "linewidth", c.ancilla.linewidth);
  take(root, "workers", c.workers);
  take(root, "output_dir", c.output_dir);
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j = result_json(config);
  j["workers"] = config.workers;
  j["output_dir"] = config.output_dir;
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a64(result_json(config).dump())); }

std::vector<std::string> RunManifest::warnings() const {
  std::vector<std::string> out;
  for (const auto& [name, rec] : stages) {
    for (const auto& w : rec.warnings) out.push_back(name + ": " + w);
  }
  return out;
}

std::string plan_stem(const CodePlan& plan) {
  std::string stem = spin_tag(plan.words.s.two_s()) + "_" + plan.kind;
  if (plan.kind == "numerical") stem += "_t" + short_real(plan.t_opt);
  return stem;
}

double window_below(const std::vector<double>& times, const std::vector<double>& curve, double level) {
  if (times.size() != curve.size() || times.empty()) throw ValidationError("window_below: grid mismatch");
  if (!(curve.front() >= level)) return 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i] >= level)) return times[i - 1];
  }
  return times.back();
}

Runner::Runner(ExperimentConfig config, LogFn log) : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
  config_.ancilla.B_z = config_.B_z;
  config_.ancilla.measurement_ns = config_.cost.measurement_ns;
  manifest_.config_hash = config_hash(config_);
  load_manifest();
}

std::string Runner::path(const std::string& rel) const { return (std::filesystem::path(config_.output_dir) / rel).string(); }

void Runner::load_manifest() {
  const std::string file = path("manifest.json");
  if (!std::filesystem::exists(file)) return;
  json j;
  try {
    j = json::parse(read_file(file));
    for (const auto& [name, st] : j.at("stages").items()) {
      StageRecord rec;
      rec.key = st.at("key").get<std::string>();
      rec.seconds = st.at("seconds").get<double>();
      rec.files = st.at("files").get<std::map<std::string, std::string>>();
      rec.warnings = st.at("warnings").get<std::vector<std::string>>();
      manifest_.stages[name] = rec;
    }
  } catch (const json::exception&) {
    // An unreadable manifest only costs a full rerun.
    manifest_.stages.clear();
  }
}

void Runner::save_manifest() const {
  json stages = json::object();
  for (const auto& [name, rec] : manifest_.stages) {
    stages[name] = {{"key", rec.key},
                    {"seconds", rec.seconds},
                    {"reused", rec.reused},
                    {"files", rec.files},
                    {"warnings", rec.warnings}};
  }
  json j = {{"format", kFormatVersion},
            {"version", kVersion},
            {"rng_version", kRngVersion},
            {"config_hash", manifest_.config_hash},
            {"config", json::parse(config_to_json(config_))},
            {"stages", stages},
            {"warnings", manifest_.warnings()}};
  write_file(path("manifest.json"), j.dump(2) + "\n");
}

bool Runner::try_reuse(const std::string& name, const std::string& key) {
  auto it = manifest_.stages.find(name);
  if (it == manifest_.stages.end() || it->second.key != key) return false;
  for (const auto& [rel, hash] : it->second.files) {
    if (!std::filesystem::exists(path(rel))) return false;
  }
  for (const auto& [rel, hash] : it->second.files) {
    if (hex64(fnv1a64(read_file(path(rel)))) != hash) {
      throw ValidationError("artifact hash mismatch for '" + rel + "'; remove it or the manifest to recompute");
    }
  }
  it->second.reused = true;
  save_manifest();
  if (log_) log_(name + ": reusing " + std::to_string(it->second.files.size()) + " artifacts");
  return true;
}

void Runner::begin_stage(const std::string& name) {
  auto it = manifest_.stages.find(name);
  if (it != manifest_.stages.end()) {
    for (const auto& [rel, hash] : it->second.files) std::filesystem::remove(path(rel));
    manifest_.stages.erase(it);
  }
  manifest_.stages[name] = StageRecord{};
}

void Runner::emit(const std::string& name, const std::string& rel_path, const std::string& contents) {
  write_file(path(rel_path), contents);
  manifest_.stages[name].files[rel_path] = hex64(fnv1a64(contents));
}

void Runner::finish_stage(const std::string& name, const std::string& key, double seconds) {
  auto& rec = manifest_.stages[name];
  rec.key = key;
  rec.seconds = seconds;
  save_manifest();
  if (log_) log_(name + ": " + std::to_string(rec.files.size()) + " artifacts in " + short_real(seconds) + " s");
}

void Runner::warn(const std::string& stage, const std::string& message) {
  manifest_.stages[stage].warnings.push_back(message);
  if (log_) log_(stage + ": warning: " + message);
}

std::string Runner::bath_key() const {
  json f = result_json(config_).at("bath");
  f["rng_version"] = kRngVersion;
  return key_of("gen-bath", f);
}

std::string Runner::decay_key() const {
  json f = result_json(config_).at("decay");
  f["qudit"] = result_json(config_).at("qudit");
  return key_of(bath_key(), f);
}

std::string Runner::optimize_key() const {
  json f = result_json(config_).at("codes");
  f.erase("theta_points");
  return key_of(decay_key(), f);
}

std::string Runner::evaluate_key() const {
  return key_of(optimize_key(), {{"theta_points", config_.theta_points}});
}

std::string Runner::compile_key() const { return key_of(evaluate_key(), result_json(config_).at("pulses")); }

const std::vector<DecoherenceMatrix>& Runner::decoherence(const std::string& schedule, int two_s) const {
  const auto it = decoherence_.find(schedule);
  if (it == decoherence_.end() || !it->second.count(two_s)) {
    throw ValidationError("no decoherence data for schedule '" + schedule + "' and 2S = " + std::to_string(two_s));
  }
  return it->second.at(two_s);
}

void Runner::gen_bath() {
  if (have_bath_) return;
  const auto t0 = std::chrono::steady_clock::now();
  const int n = config_.n_configurations;
  geometries_.assign(static_cast<std::size_t>(n), BathGeometry{});
  const std::string key = bath_key();
  if (try_reuse("gen-bath", key)) {
    for (int i = 0; i < n; ++i) {
      geometries_[static_cast<std::size_t>(i)] = geometry_from_text(read_file(path(indexed("bath/geometry_", i))));
    }
  } else {
    begin_stage("gen-bath");
    parallel_for(static_cast<std::size_t>(n), config_.workers, [&](std::size_t i) {
      geometries_[i] = sample_bath_geometry(configuration_seed(config_.master_seed, i), config_.n_spins,
                                            config_.radius, config_.min_distance);
    });
    for (int i = 0; i < n; ++i) {
      emit("gen-bath", indexed("bath/geometry_", i), geometry_to_text(geometries_[static_cast<std::size_t>(i)]));
    }
    finish_stage("gen-bath", key, seconds_since(t0));
  }
  have_bath_ = true;
}

void Runner::decay() {
  if (have_decay_) return;
  gen_bath();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string key = decay_key();
  const int n = config_.n_configurations;
  auto file_of = [&](const std::string& sched, int two_s, int i) {
    return indexed("decay/" + sched + "/" + spin_tag(two_s) + "/config_", i);
  };

  if (try_reuse("decay", key)) {
    for (const auto& sched : config_.schedules) {
      for (int two_s : config_.two_s) {
        auto& slot = decoherence_[sched][two_s];
        slot.assign(static_cast<std::size_t>(n), DecoherenceMatrix{});
        parallel_for(static_cast<std::size_t>(n), config_.workers, [&](std::size_t i) {
          slot[i] = decoherence_from_text(read_file(path(file_of(sched, two_s, static_cast<int>(i)))));
        });
      }
    }
    have_decay_ = true;
    return;
  }

  begin_stage("decay");
  const QuditHamiltonianParams params = make_qudit_params(config_.B_z, config_.D_zfs_kelvin);
  std::vector<EffectiveCoefficients> coeffs(static_cast<std::size_t>(n));
  std::vector<char> weak(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), config_.workers, [&](std::size_t i) {
    bool w = false;
    coeffs[i] = schrieffer_wolff_coefficients(compute_dipolar_tensors(geometries_[i], params), params, &w);
    weak[i] = w ? 1 : 0;
  });
  const long n_weak = std::count(weak.begin(), weak.end(), 1);
  if (n_weak > 0) {
    warn("decay", std::to_string(n_weak) + " configurations have Omega below 100x the largest hyperfine coupling");
  }

  CceOptions options;
  options.order = config_.cce_order;
  options.pair_cutoff = config_.pair_cutoff;
  for (const auto& sched : config_.schedules) {
    const EvolutionSchedule schedule = EvolutionSchedule::from_name(sched);
    const std::vector<double> grid = (sched == "free" ? config_.free_grid : config_.echo_grid).grid();
    for (int two_s : config_.two_s) {
      const SpinQuantum s(two_s);
      CceStats stats;
      auto& slot = decoherence_[sched][two_s];
      slot = decoherence_ensemble(coeffs, schedule, s, grid, options, config_.workers, &stats);
      if (stats.guarded_pairs > 0) {
        warn("decay", sched + " " + spin_tag(two_s) + ": " + std::to_string(stats.guarded_pairs) +
                          " pair corrections guarded against near-zero singletons");
      }
      const CodeWords words = two_s == 1 ? bare_code_words(s) : spin_binomial_baseline(s);
      std::vector<std::uint64_t> seeds;
      for (const auto& g : geometries_) seeds.push_back(g.seed);
      const EnsembleResult r = ensemble_average(slot, logical_state(words, kPi / 4), nullptr, seeds);
      if (r.non_psd > 0) {
        warn("decay", sched + " " + spin_tag(two_s) + ": L o rho0 not PSD at " + std::to_string(r.non_psd) +
                          " points (min eigenvalue " + short_real(r.min_eigenvalue) + ")");
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < r.times.size(); ++i) rows.push_back({r.times[i], r.mean[i], r.std[i], double(n)});
      emit("decay", "decay/" + sched + "_" + spin_tag(two_s) + ".tsv", table_to_text({"t_us", "f2_mean", "f2_std", "n_configs"}, rows));
      for (int i = 0; i < n; ++i) {
        emit("decay", file_of(sched, two_s, i), decoherence_to_text(slot[static_cast<std::size_t>(i)], sched));
      }
      if (log_) log_("decay: " + sched + " " + spin_tag(two_s) + " done");
    }
  }
  finish_stage("decay", key, seconds_since(t0));
  have_decay_ = true;
}

void Runner::optimize() {
  if (have_plans_) return;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string key = optimize_key();

  struct Item {
    int two_s;
    std::string kind;
    double t_opt;
  };
  std::vector<Item> items;
  for (int two_s : config_.two_s) {
    if (two_s == 1) {
      items.push_back({1, "bare", 0.0});
    } else if (config_.code_mode == "numerical") {
      for (double t : config_.t_opt) items.push_back({two_s, "numerical", t});
    } else if (config_.code_mode == "binomial") {
      items.push_back({two_s, "binomial", 0.0});
    }
  }
  auto stem_of = [&](const Item& it) {
    std::string stem = spin_tag(it.two_s) + "_" + it.kind;
    if (it.kind == "numerical") stem += "_t" + short_real(it.t_opt);
    return "codes/" + stem + ".txt";
  };

  // The reuse check needs no decay data, so a complete plan set skips the CCE.
  if (try_reuse("optimize", key)) {
    plans_.clear();
    for (const auto& it : items) plans_.push_back(code_plan_from_text(read_file(path(stem_of(it)))));
    have_plans_ = true;
    return;
  }
  const bool need_decay = config_.code_mode == "numerical";
  if (need_decay) {
    if (std::find(config_.schedules.begin(), config_.schedules.end(), "echo") == config_.schedules.end()) {
      throw ValidationError("optimize: numerical codes need the echo schedule in decay.schedules");
    }
    decay();
  }
  begin_stage("optimize");
  plans_.assign(items.size(), CodePlan{});
  parallel_for(items.size(), config_.workers, [&](std::size_t i) {
    const Item& it = items[i];
    const SpinQuantum s(it.two_s);
    if (it.kind == "bare") {
      plans_[i] = bare_code_plan(s);
    } else if (it.kind == "binomial") {
      plans_[i] = binomial_code_plan(s);
    } else {
      const DecoherenceMatrix mean = mean_decoherence(decoherence("echo", it.two_s));
      CodeOptions options;
      options.depth = config_.code_depth;
      options.kl.simplex.restarts = config_.simplex_restarts;
      options.fit.restarts = config_.simplex_restarts;
      plans_[i] = optimize_numerical_code(decoherence_at(mean, it.t_opt), s, it.t_opt, options);
    }
  });
  for (std::size_t i = 0; i < items.size(); ++i) {
    const CodePlan& plan = plans_[i];
    if (plan.words.flagged) {
      warn("optimize", plan_stem(plan) + ": Knill-Laflamme residual " + format_real(plan.words.kl_residual) +
                           " above threshold");
    }
    if (!plan.errors.converged) warn("optimize", plan_stem(plan) + ": error fit did not converge");
    if (plan.plan.reduced) warn("optimize", plan_stem(plan) + ": dependent error words dropped from the recovery");
    emit("optimize", stem_of(items[i]), code_plan_to_text(plan));
  }
  finish_stage("optimize", key, seconds_since(t0));
  have_plans_ = true;
}

void Runner::evaluate() {
  if (have_eval_) return;
  optimize();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string key = evaluate_key();
  auto f2_file = [](const CodePlan& p) { return "eval/" + plan_stem(p) + "_f2.tsv"; };

  if (try_reuse("evaluate", key)) {
    for (const auto& plan : plans_) {
      const auto rows = table_from_text(read_file(path(f2_file(plan))));
      std::vector<double> t, f2;
      for (const auto& r : rows) {
        t.push_back(r[0]);
        f2.push_back(r[1]);
      }
      windows_[plan_stem(plan)] = window_below(t, f2, 0.99);
    }
    have_eval_ = true;
    return;
  }
  if (std::find(config_.two_s.begin(), config_.two_s.end(), 1) == config_.two_s.end()) {
    throw ValidationError("evaluate: the spin-1/2 reference needs 1 in qudit.two_s");
  }
  if (std::find(config_.schedules.begin(), config_.schedules.end(), "echo") == config_.schedules.end()) {
    throw ValidationError("evaluate: needs the echo schedule in decay.schedules");
  }
  decay();
  begin_stage("evaluate");

  const auto& half_ls = decoherence("echo", 1);
  const EnsembleResult half = ensemble_average(half_ls, logical_state(bare_code_words(SpinQuantum(1)), kPi / 4));
  const std::vector<double> thetas = theta_grid(config_.theta_points);

  struct Out {
    EnsembleResult rec, bare;
    GainCurve gain;
    ThetaSurface surface;
  };
  std::vector<Out> outs(plans_.size());
  parallel_for(plans_.size(), config_.workers, [&](std::size_t i) {
    const CodePlan& plan = plans_[i];
    const auto& ls = decoherence("echo", plan.words.s.two_s());
    const PureState psi = logical_state(plan.words, kPi / 4);
    outs[i].rec = ensemble_average(ls, psi, [&](const CMatrix& rho) { return apply_qec(rho, plan.plan); });
    outs[i].bare = ensemble_average(ls, psi);
    outs[i].gain = ensemble_gain(outs[i].rec.times, outs[i].rec.per_configuration, half.per_configuration);
    outs[i].surface = theta_sweep(plan.words, ls, plan.plan, thetas);
  });

  for (std::size_t i = 0; i < plans_.size(); ++i) {
    const CodePlan& plan = plans_[i];
    const Out& o = outs[i];
    const std::string stem = plan_stem(plan);
    if (o.bare.non_psd > 0) {
      warn("evaluate", stem + ": L o rho0 not PSD at " + std::to_string(o.bare.non_psd) + " points (min eigenvalue " +
                           short_real(o.bare.min_eigenvalue) + ")");
    }
    const double n = static_cast<double>(o.rec.per_configuration.size());
    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < o.rec.times.size(); ++t) {
      rows.push_back({o.rec.times[t], o.rec.mean[t], o.rec.std[t], 1.0 - o.rec.mean[t], o.bare.mean[t], n});
    }
    emit("evaluate", f2_file(plan),
         table_to_text({"t_us", "f2_mean", "f2_std", "infidelity", "f2_uncorrected", "n_configs"}, rows));
    rows.clear();
    for (std::size_t t = 0; t < o.gain.times.size(); ++t) {
      rows.push_back({o.gain.times[t], o.gain.mean[t], o.gain.std[t], double(o.gain.counts[t])});
    }
    emit("evaluate", "eval/" + stem + "_gain.tsv", table_to_text({"t_us", "gain_mean", "gain_std", "n_defined"}, rows));
    rows.clear();
    for (std::size_t a = 0; a < o.surface.thetas.size(); ++a) {
      for (std::size_t t = 0; t < o.surface.times.size(); ++t) {
        rows.push_back({o.surface.thetas[a], o.surface.times[t], o.surface.f2[a][t]});
      }
    }
    emit("evaluate", "eval/" + stem + "_theta.tsv", table_to_text({"theta", "t_us", "f2_mean"}, rows));
    windows_[stem] = window_below(o.rec.times, o.rec.mean, 0.99);
  }
  finish_stage("evaluate", key, seconds_since(t0));
  have_eval_ = true;
}

void Runner::compile() {
  evaluate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string key = compile_key();
  if (try_reuse("compile", key)) return;
  begin_stage("compile");
  for (const auto& plan : plans_) {
    const std::string stem = plan_stem(plan);
    try {
      const QecCycle cycle = compile_qec_cycle(plan, config_.ancilla, config_.cost, windows_.at(stem));
      if (cycle.verification.max_error > 1e-9) {
        throw NumericalError("verification error " + format_real(cycle.verification.max_error));
      }
      emit("compile", "pulses/" + stem + ".txt", pulse_sequence_to_text(cycle.sequence, config_.cost.measurement_ns));
      emit("compile", "pulses/" + stem + "_report.txt", cycle_report(cycle));
      if (cycle.duration.flagged) {
        warn("compile", stem + ": cycle of " + short_real(cycle.duration.total_ns) + " ns exceeds " +
                            short_real(100 * config_.cost.window_fraction) + "% of the F2 > 0.99 window");
      }
    } catch (const NumericalError& e) {
      warn("compile", stem + ": not emitted, " + e.what());
    }
  }
  finish_stage("compile", key, seconds_since(t0));
}

void Runner::all() {
  gen_bath();
  decay();
  optimize();
  evaluate();
  compile();
}

}  // namespace quditqec
