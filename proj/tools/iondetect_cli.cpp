// iondetect run|validate --config PATH [--seed U64] [--workers N] [--output DIR]
//
// Exit codes: 0 ok, 1 usage, 2 config parse error, 3 invariant violation,
// 4 I/O failure, 5 numerical failure during a run.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iondetect/errors.hpp"
#include "iondetect/experiments.hpp"
#include "iondetect/export.hpp"
#include "iondetect/run_config.hpp"

namespace {

enum Exit { ok = 0, usage = 1, parse_error = 2, invariant = 3, io = 4, numeric = 5 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::optional<std::string> output;
};

void add_common(CLI::App* cmd, Options& opt, bool runtime) {
  cmd->add_option("config_path", opt.config, "Experiment config (JSON)");
  cmd->add_option("--config", opt.config, "Experiment config (JSON)");
  cmd->add_option("--seed", opt.seed, "Override the config seed");
  if (runtime) {
    cmd->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--output", opt.output, "Override the output directory");
  }
}

iondetect::RunConfig load(const Options& opt) {
  auto cfg = iondetect::load_run_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

int cmd_validate(const Options& opt) {
  const auto cfg = load(opt);
  const auto problems = cfg.violations();
  nlohmann::json report{{"config", opt.config}, {"experiment", iondetect::to_string(cfg.experiment)},
                        {"violations", problems}};
  std::cout << report.dump(2) << "\n";
  return problems.empty() ? ok : invariant;
}

int cmd_run(const Options& opt) {
  const auto cfg = load(opt);
  const auto problems = cfg.violations();
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "invariant violation: " << p << "\n";
    return invariant;
  }
  std::optional<std::filesystem::path> out;
  if (opt.output) out = *opt.output;
  const auto result = iondetect::run_experiment(cfg, opt.workers, out);
  std::cout << iondetect::to_string(cfg.experiment) << ": wrote " << result.data_files.size() << " files + manifest.json to "
            << result.output_dir.string() << " in " << result.manifest["wall_time_s"].get<double>() << " s\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of motion-mediated ion state detection"};
  app.set_version_flag("--version", IONDETECT_VERSION);
  app.require_subcommand(1);
  Options opt;
  auto* run = app.add_subcommand("run", "Run an experiment and write its datasets");
  auto* validate = app.add_subcommand("validate", "Report every invariant violation of a config");
  add_common(run, opt, true);
  add_common(validate, opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }
  if (opt.config.empty()) {
    std::cerr << "error: a config path is required (--config PATH)\n";
    return usage;
  }

  try {
    return run->parsed() ? cmd_run(opt) : cmd_validate(opt);
  } catch (const iondetect::ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return parse_error;
  } catch (const iondetect::ConfigError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return invariant;
  } catch (const iondetect::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return io;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numeric;
  }
}
