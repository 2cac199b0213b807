#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eaps/harness/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> settings;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value config file; unset keys keep their defaults");
  sub->add_option("--seed", c.seed, "overrides the config seed");
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--set", c.settings, "extra key=value setting, applied after the config file");
}

eaps::ScenarioConfig resolve(const Common& c) {
  eaps::ScenarioConfig cfg = c.config.empty() ? eaps::ScenarioConfig{} : eaps::load_config(c.config);
  for (const std::string& s : c.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw eaps::ConfigError("--set expects key=value, got '" + s + "'");
    eaps::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware power-save scheduling simulator"};
  app.require_subcommand(1);

  Common common;
  std::string dataset, test, model;
  std::vector<std::string> traces;
  eaps::SweepRequest sweep;
  bool list_keys = false;

  auto* gen = app.add_subcommand("generate", "simulate a CAM run and write the telemetry dataset and traffic trace");
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "fit the delay model on a dataset");
  add_common(train, common);
  train->add_option("--dataset", dataset, "dataset CSV")->required();

  auto* eval = app.add_subcommand("evaluate", "score a trained model on a test dataset");
  add_common(eval, common);
  eval->add_option("--model", model, "directory written by train")->required();
  eval->add_option("--test", test, "test dataset CSV")->required();

  auto* sw = app.add_subcommand("sweep", "MAE against training-set size and history depth");
  add_common(sw, common);
  sw->add_option("--dataset", dataset, "training dataset CSV")->required();
  sw->add_option("--test", test, "test dataset CSV")->required();
  sw->add_option("--sizes", sweep.sizes, "training sizes")->delimiter(',')->capture_default_str();
  sw->add_option("--history", sweep.history, "history depths")->delimiter(',')->capture_default_str();

  auto* cmp = app.add_subcommand("compare", "run every configured discipline and tabulate energy and duration");
  add_common(cmp, common);
  cmp->add_option("--model", model, "directory written by train; EAPS runs as PSM without it");

  auto* met = app.add_subcommand("metrics", "burstiness and dynamicity of trace CSV files");
  add_common(met, common);
  met->add_option("traces", traces, "trace CSV files")->required();

  auto* keys = app.add_subcommand("config", "print every config key with its default");
  keys->add_flag("--describe", list_keys, "print descriptions instead of values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(eaps::ExitCode::config);
  }

  try {
    if (keys->parsed()) {
      if (list_keys) {
        for (const auto& k : eaps::config_schema()) std::cout << k.key << ": " << k.description << '\n';
      } else {
        eaps::write_config(std::cout, eaps::ScenarioConfig{});
      }
      return 0;
    }
    const eaps::ScenarioConfig cfg = resolve(common);
    const fs::path out = common.out;
    eaps::ExitCode code = eaps::ExitCode::ok;
    if (gen->parsed()) {
      code = eaps::cmd_generate(cfg, out, std::cout);
    } else if (train->parsed()) {
      code = eaps::cmd_train(cfg, dataset, out, std::cout);
    } else if (eval->parsed()) {
      code = eaps::cmd_evaluate(cfg, model, test, out, std::cout);
    } else if (sw->parsed()) {
      code = eaps::cmd_sweep(cfg, dataset, test, sweep, out, std::cout);
    } else if (cmp->parsed()) {
      code = eaps::cmd_compare(cfg, model.empty() ? std::nullopt : std::optional<fs::path>(model), out, std::cout);
    } else if (met->parsed()) {
      std::vector<fs::path> paths(traces.begin(), traces.end());
      code = eaps::cmd_metrics(cfg, paths, out, std::cout);
    }
    return static_cast<int>(code);
  } catch (...) {
    return static_cast<int>(eaps::exit_code_for_current_exception(std::cerr));
  }
}
