#include <iostream>

#include "CLI11.hpp"
#include "mra/cli.hpp"
#include "mra/sparse.hpp"

namespace mra::cli {

int exit_code(std::exception_ptr error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (...) {
    std::cerr << "unknown failure\n";
    return 3;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-resolution approximation of Gaussian processes"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "write data.csv from the configured model"},
      {"fit", "maximum-likelihood fit, writes fit.json and trace.csv"},
      {"predict", "kriging at training and held-out locations"},
      {"score", "log score, RMSPE and CRPS on the areal/random split"},
      {"benchmark", "log-score gaps over a grid of configurations"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override data.seed");
    sub->add_option("--out", out, "override output.dir");
    sub->add_option("--threads", threads, "worker threads for benchmark rows")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Overrides ov;
    ov.seed = seed;
    if (out) ov.out_dir = *out;
    const auto cfg = load_config(config, ov);
    const auto& name = app.get_subcommands().front()->get_name();
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "fit") return cmd_fit(cfg);
    if (name == "predict") return cmd_predict(cfg);
    if (name == "score") return cmd_score(cfg);
    return cmd_benchmark(cfg, threads);
  } catch (...) {
    return exit_code(std::current_exception());
  }
}

}  // namespace mra::cli
