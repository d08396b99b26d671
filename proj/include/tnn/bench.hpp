#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tnn/bermudan.hpp"
#include "tnn/bsde.hpp"

namespace tnn::bench {

enum class ExperimentKind { European, Bermudan, Analytic, Sweep, Simulate };

std::string_view kind_name(ExperimentKind kind);

/// Thrown for unreadable or invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment description loaded from a flat `key = value` file.
///
/// Lines are `key = value`; `#` starts a comment. The first significant key
/// must be `schema = 1`. Unknown keys are rejected with their line number.
/// Recognized keys (defaults in brackets):
///
///   kind            european | bermudan | analytic | sweep | simulate [european]
///   runs            number of seeds, seed, seed+1, ...               [1]
///   seed            first seed                                        [1]
///   out             output directory                                  [results]
///   threshold       convergence threshold, 0 = pilot rule             [0]
///   window          trailing window for convergence                   [50]
///   jobs            concurrent runs                                   [1]
///   architecture    network of a single european run                  [TNN(16)]
///   architectures   comma-separated list for sweeps   [TNN(16), DNN(4,24), DNN(16,16)]
///   bond_dim, activation, steps, batch, iterations, learning_rate,
///   loss (logcosh | squared), option (call | put), strike, paths
///   heston.{rate,kappa,theta,eta,rho,spot,v0,maturity}
///   bermudan.{assets,spot,vol,rate,dividend,maturity,dates,strike,regressor,
///             epochs,batch,learning_rate,train_paths,price_paths,itm_only}
struct ExperimentConfig {
  ExperimentConfig();

  ExperimentKind kind = ExperimentKind::European;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::filesystem::path out = "results";
  double threshold = 0.0;
  std::size_t window = 50;
  std::size_t jobs = 1;
  std::size_t paths = 100;  // simulate only
  bsde::TrainConfig train;
  std::vector<nn::NetworkSpec> architectures;
  bermudan::BermudanSpec bermudan;
  /// Normalized key/value pairs that were read, used for hashing.
  std::map<std::string, std::string> entries;

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Sets one key as if it had appeared in a file; throws ConfigError.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  /// FNV-1a 64 over the normalized entries plus seed and run count, as 16 hex digits.
  std::string hash() const;
  /// Seeds seed .. seed + runs − 1.
  std::vector<std::uint64_t> seeds() const;
};

struct ConvergenceTime {
  bool converged = false;
  std::size_t iteration = 0;  // first iteration whose trailing-window mean is below the threshold
  double wall_ms = 0.0;
  double cpu_ms = 0.0;
};

/// First iteration k ≥ window − 1 with mean(loss[k − window + 1 .. k]) < threshold.
ConvergenceTime time_to_converge(const bsde::TrainHistory& history, double threshold, std::size_t window = 50);

/// Mean loss over the last `window` iterations (all of them if fewer).
double final_window_loss(const bsde::TrainHistory& history, std::size_t window = 50);

/// All (a, b) with in·a + a + a·b + b + b·out + out == target, ascending in a.
std::vector<std::pair<std::size_t, std::size_t>> enumerate_equal_param_dnns(std::size_t target,
                                                                            std::size_t input_dim = 3,
                                                                            std::size_t output_dim = 1);

struct RunRecord {
  nn::NetworkSpec network;
  std::uint64_t seed = 0;
  bsde::TrainHistory history;
  ConvergenceTime convergence;
  double final_loss = 0.0;
};

struct SweepRow {
  std::string architecture;
  std::size_t param_count = 0;
  double mean_price = 0.0, std_price = 0.0;
  double mean_loss = 0.0, std_loss = 0.0;
  std::size_t converged = 0;
  double mean_epochs = 0.0, mean_wall_ms = 0.0;  // over converged seeds
};

struct SweepResult {
  double analytic_price = 0.0;
  double threshold = 0.0;
  std::vector<RunRecord> runs;  // architecture-major, then seed order
  std::vector<SweepRow> rows;

  const RunRecord& run(std::size_t arch, std::size_t seed_index) const;
};

/// Trains every (architecture, seed) pair, resolves the convergence threshold
/// (config value, or twice the best first-seed final loss) and aggregates.
SweepResult sweep(const ExperimentConfig& config, std::span<const nn::NetworkSpec> architectures);

/// Run CSV file name for one (architecture, seed).
std::string run_file_name(const nn::NetworkSpec& network, std::uint64_t seed);

nlohmann::json summary_json(const ExperimentConfig& config, const SweepResult& result);

/// Executes a configuration and writes its artifacts under config.out.
/// Returns 0 on success and 1 if any run aborted; aborted runs are reported on stderr.
int run(const ExperimentConfig& config);
/// Loads and runs a configuration file.
int run_experiment(const std::filesystem::path& config_path);

}  // namespace tnn::bench
