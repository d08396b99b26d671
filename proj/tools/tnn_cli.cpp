#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tnn/bench.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> runs;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment configuration file (key = value)");
  cmd->add_option("--seed", c.seed, "first seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--runs", c.runs, "number of seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--set", c.overrides, "override a configuration key, key=value (repeatable)");
}

tnn::bench::ExperimentConfig resolve(const Common& c, tnn::bench::ExperimentKind kind) {
  using tnn::bench::ConfigError;
  tnn::bench::ExperimentConfig cfg = c.config.empty() ? tnn::bench::ExperimentConfig{}
                                                       : tnn::bench::ExperimentConfig::load(c.config);
  const std::string name(tnn::bench::kind_name(kind));
  if (cfg.entries.count("kind") && cfg.kind != kind)
    throw ConfigError("config kind '" + std::string(tnn::bench::kind_name(cfg.kind)) + "' does not match subcommand '" +
                      name + "'");
  cfg.set("kind", name);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (c.runs) cfg.set("runs", std::to_string(*c.runs));
  if (c.out) cfg.set("out", *c.out);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heston deep-BSDE pricer with tensor-network layers"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    tnn::bench::ExperimentKind kind;
  };
  const std::vector<Entry> entries = {
      {"analytic", "semi-analytic Heston European price", tnn::bench::ExperimentKind::Analytic},
      {"simulate", "dump simulated Heston paths", tnn::bench::ExperimentKind::Simulate},
      {"train", "train one architecture over the configured seeds", tnn::bench::ExperimentKind::European},
      {"sweep", "train several architectures over the configured seeds", tnn::bench::ExperimentKind::Sweep},
      {"bermudan", "price a Bermudan max-call with a neural regressor", tnn::bench::ExperimentKind::Bermudan},
  };
  std::vector<Common> common(entries.size());
  std::vector<CLI::App*> cmds;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    cmds.push_back(app.add_subcommand(entries[k].name, entries[k].help));
    add_common(cmds.back(), common[k]);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t k = 0; k < entries.size(); ++k)
      if (cmds[k]->parsed()) return tnn::bench::run(resolve(common[k], entries[k].kind));
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 1;
}
