#include <doctest.h>

#include <filesystem>

#include "quditqec/persistence.hpp"
#include "quditqec/random.hpp"
#include "quditqec/runner.hpp"

using namespace quditqec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("quditqec_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.two_s = {1, 3};
  c.n_spins = 12;
  c.radius = 10.0;
  c.n_configurations = 2;
  c.free_grid = {0.5, 11};
  c.echo_grid = {20.0, 21};
  c.t_opt = {4.0};
  c.simplex_restarts = 2;
  c.theta_points = 3;
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("hashing") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  CHECK(std::stod(format_real(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("geometry round trip") {
  const BathGeometry g = sample_bath_geometry(7, 20, 15.0, 3.0);
  const BathGeometry back = geometry_from_text(geometry_to_text(g));
  CHECK(back.positions == g.positions);
  CHECK(back.seed == g.seed);
  CHECK_THROWS_AS(geometry_from_text("# quditqec bath-geometry v9\n"), ValidationError);
  CHECK_THROWS_AS(geometry_from_text("garbage"), ValidationError);
}

TEST_CASE("decoherence round trip") {
  const auto params = make_qudit_params(1.0, 0.0);
  const auto co = schrieffer_wolff_coefficients(compute_dipolar_tensors(sample_bath_geometry(3, 6, 8.0, 3.0), params), params);
  const auto L = decoherence_matrix(EvolutionSchedule::echo(), co, SpinQuantum(5), {0.0, 10.0, 20.0});
  std::string sched;
  const auto back = decoherence_from_text(decoherence_to_text(L, "echo"), &sched);
  CHECK(sched == "echo");
  CHECK(back.s == L.s);
  CHECK(back.times == L.times);
  for (std::size_t i = 0; i < L.values.size(); ++i) CHECK(back.values[i] == L.values[i]);

  std::string text = decoherence_to_text(L, "echo");
  text.resize(text.size() / 2);
  CHECK_THROWS_AS(decoherence_from_text(text), ValidationError);
}

TEST_CASE("code plan round trip") {
  const CodePlan p = binomial_code_plan(SpinQuantum(5));
  const std::string text = code_plan_to_text(p);
  const CodePlan back = code_plan_from_text(text);
  CHECK(back.kind == "binomial");
  CHECK(back.words.zero_l == p.words.zero_l);
  CHECK(back.plan.size() == p.plan.size());
  CHECK(code_plan_to_text(back) == text);
}

TEST_CASE("tables") {
  std::vector<std::string> cols;
  const auto rows = table_from_text(table_to_text({"t", "x"}, {{0.0, 1.5}, {1.0, std::nan("")}}), &cols);
  CHECK(cols == std::vector<std::string>{"t", "x"});
  CHECK(rows[0][1] == 1.5);
  CHECK(std::isnan(rows[1][1]));
  CHECK_THROWS_AS(table_from_text("# a b\n1 2 3\n"), ValidationError);
}

TEST_CASE("files are written atomically into new directories") {
  const fs::path dir = scratch("files");
  write_file((dir / "a/b/c.txt").string(), "hello\n");
  CHECK(read_file((dir / "a/b/c.txt").string()) == "hello\n");
  CHECK_FALSE(fs::exists(dir / "a/b/c.txt.tmp"));
  CHECK_THROWS(read_file((dir / "missing.txt").string()));
  fs::remove_all(dir);
}

TEST_CASE("configuration") {
  const ExperimentConfig d;
  CHECK_NOTHROW(d.validate());
  CHECK(d.n_spins == 100);
  CHECK(d.n_configurations == 64);

  const ExperimentConfig c = config_from_json(R"({"qudit": {"two_s": [1, 5]}, "bath": {"master_seed": 9}, "workers": 3})");
  CHECK(c.two_s == std::vector<int>{1, 5});
  CHECK(c.master_seed == 9);
  CHECK(c.workers == 3);
  CHECK(c.radius == 15.0);

  const ExperimentConfig again = config_from_json(config_to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  ExperimentConfig w = c;
  w.workers = 8;
  w.output_dir = "elsewhere";
  CHECK(config_hash(w) == config_hash(c));
  w.master_seed = 10;
  CHECK(config_hash(w) != config_hash(c));

  CHECK_THROWS_AS(config_from_json(R"({"qudit": {"spin": 3}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"colour": 1})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"qudit": {"two_s": [2]}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"bath": {"n_spins": "many"}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"decay": {"cce_order": 3}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"decay": {"schedules": ["cpmg"]}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json(R"({"codes": {"mode": "surface"}})"), ValidationError);
  CHECK_THROWS_AS(config_from_json("{not json"), ValidationError);
}

TEST_CASE("window below a level") {
  CHECK(window_below({0, 1, 2, 3}, {1.0, 0.995, 0.98, 0.9}, 0.99) == 1.0);
  CHECK(window_below({0, 1, 2}, {1.0, 1.0, 1.0}, 0.99) == 2.0);
  CHECK(window_below({0, 1}, {0.5, 0.4}, 0.99) == 0.0);
}

TEST_CASE("runner stages, reuse and tamper detection") {
  const fs::path dir = scratch("runner");
  const ExperimentConfig cfg = tiny(dir);
  {
    Runner r(cfg);
    r.all();
    CHECK(r.plans().size() == 2);
    CHECK(r.geometries().size() == 2);
    CHECK(r.decoherence("echo", 3).size() == 2);
    CHECK_THROWS_AS(r.decoherence("echo", 5), ValidationError);
    for (const auto& [name, rec] : r.manifest().stages) {
      CHECK_FALSE(rec.reused);
      for (const auto& [rel, hash] : rec.files) CHECK(fs::exists(dir / rel));
    }
  }
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "decay/echo_s3.tsv"));
  CHECK(fs::exists(dir / "codes/s3_numerical_t4.txt"));
  CHECK(fs::exists(dir / "eval/s3_numerical_t4_gain.tsv"));
  CHECK(fs::exists(dir / "pulses/s3_numerical_t4.txt"));
  const std::string plan_text = read_file((dir / "codes/s3_numerical_t4.txt").string());

  {
    Runner r(cfg);
    r.all();
    for (const auto& [name, rec] : r.manifest().stages) CHECK(rec.reused);
    CHECK(read_file((dir / "codes/s3_numerical_t4.txt").string()) == plan_text);
  }

  // Changing a code option reruns optimize and everything after it.
  ExperimentConfig more = cfg;
  more.t_opt = {4.0, 8.0};
  {
    Runner r(more);
    r.all();
    CHECK(r.manifest().stages.at("decay").reused);
    CHECK_FALSE(r.manifest().stages.at("optimize").reused);
    CHECK(fs::exists(dir / "codes/s3_numerical_t8.txt"));
  }
  {
    Runner r(cfg);
    r.optimize();
    CHECK_FALSE(fs::exists(dir / "codes/s3_numerical_t8.txt"));
  }

  write_file((dir / "bath/geometry_001.txt").string(), "tampered\n");
  {
    Runner r(cfg);
    CHECK_THROWS_AS(r.gen_bath(), ValidationError);
  }
  fs::remove(dir / "bath/geometry_001.txt");
  {
    Runner r(cfg);
    CHECK_NOTHROW(r.gen_bath());
    CHECK_FALSE(r.manifest().stages.at("gen-bath").reused);
  }
  fs::remove_all(dir);
}

TEST_CASE("binomial and bare modes") {
  const fs::path dir = scratch("modes");
  ExperimentConfig cfg = tiny(dir);
  cfg.code_mode = "binomial";
  cfg.schedules = {"echo"};
  {
    Runner r(cfg);
    r.optimize();
    REQUIRE(r.plans().size() == 2);
    CHECK(r.plans()[1].kind == "binomial");
    // binomial plans need no decoherence data
    CHECK_THROWS_AS(r.decoherence("echo", 3), ValidationError);
    r.evaluate();
  }
  const auto gain = table_from_text(read_file((dir / "eval/s1_bare_gain.tsv").string()));
  for (const auto& row : gain) {
    if (!std::isnan(row[1])) CHECK(row[1] == doctest::Approx(1.0));
  }
  fs::remove_all(dir);

  cfg.two_s = {3};
  cfg.output_dir = scratch("nohalf").string();
  Runner r(cfg);
  CHECK_THROWS_AS(r.evaluate(), ValidationError);
  fs::remove_all(cfg.output_dir);
}
