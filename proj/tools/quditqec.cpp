// quditqec: command-line front end for the staged experiment runner.
//
//   quditqec <gen-bath|decay|optimize|evaluate|compile|all> [--config f.json]
//            [--out dir] [--seed n] [--workers n] [--order 1|2]
//
// Exit codes: 0 ok, 1 invalid input, 2 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "quditqec/runner.hpp"

int main(int argc, char** argv) {
  using namespace quditqec;

  CLI::App app{"Molecular spin-qudit decoherence, QEC code synthesis and pulse compilation"};
  app.require_subcommand(0, 1);
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, order;
  bool quiet = false;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--workers", workers, "worker threads (results do not depend on it)");
  app.add_option("--order", order, "CCE order, 1 or 2");
  app.add_flag("-q,--quiet", quiet, "suppress progress lines");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");

  const char* names[] = {"gen-bath", "decay", "optimize", "evaluate", "compile", "all"};
  const char* help[] = {"sample bath geometries", "compute decoherence for every S and schedule",
                        "build QEC codes", "ensemble fidelity, gain and theta sweep",
                        "compile pulse sequences for every code", "run every stage"};
  for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], help[i])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : config_from_json(read_file(config_path));
    if (out) config.output_dir = *out;
    if (seed) config.master_seed = *seed;
    if (workers) config.workers = *workers;
    if (order) config.cce_order = *order;
    config.validate();
    if (print_config) {
      std::cout << config_to_json(config);
      return 0;
    }

    if (app.get_subcommands().empty()) {
      std::fprintf(stderr, "error: a subcommand is required; run with --help\n");
      return 1;
    }

    LogFn log;
    if (!quiet) log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
    Runner runner(config, log);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-bath") runner.gen_bath();
    else if (cmd == "decay") runner.decay();
    else if (cmd == "optimize") runner.optimize();
    else if (cmd == "evaluate") runner.evaluate();
    else if (cmd == "compile") runner.compile();
    else runner.all();

    const auto warnings = runner.manifest().warnings();
    if (!quiet && !warnings.empty()) std::fprintf(stderr, "%zu warning(s) recorded in manifest.json\n", warnings.size());
    return 0;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    // I/O failures land here; treat them as bad input.
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
