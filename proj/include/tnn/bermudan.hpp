#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tnn/nn.hpp"
#include "tnn/sde.hpp"

namespace tnn::bermudan {

struct BermudanSpec {
  sde::GbmBasketParams basket = sde::GbmBasketParams::symmetric(5);
  double strike = 100.0;
  /// Continuation-value regressor; input_dim must equal the asset count.
  nn::NetworkSpec regressor = default_regressor(5);
  std::size_t epochs_per_date = 1000;
  /// Minibatch size; 0 trains full-batch (one Adam step per epoch).
  std::size_t batch_size = 0;
  double learning_rate = 1e-3;
  std::size_t train_paths = 20000;
  std::size_t price_paths = 100000;
  /// Regress only on paths that are in the money at the date.
  bool itm_only = true;
  std::uint64_t seed = 1;

  /// TNN(16), leaky ReLU, for a d-asset basket.
  static nn::NetworkSpec default_regressor(std::size_t assets);
  /// Symmetric d-asset problem with the given regressor architecture.
  static BermudanSpec symmetric(std::size_t assets, const nn::NetworkSpec& regressor);

  void validate() const;
  /// Exercise times t_1 .. t_N, uniform on (0, T].
  std::vector<double> exercise_times() const;
};

/// (max_i S_i − K)⁺.
double max_call_payoff(std::span<const double> spot, double strike);

struct PathSets {
  sde::BasketPaths train;
  sde::BasketPaths price;
};
/// Disjoint training and pricing path sets, one step per exercise date.
PathSets simulate_paths(const BermudanSpec& spec);

/// Trained stopping rule plus its outcome on the pricing paths.
struct ExercisePolicy {
  /// regressors[n] estimates the discounted continuation value / K at date n,
  /// n = 0 .. N−1; states enter as S / K.
  std::vector<nn::Network> regressors;
  /// Exercise date (1..N) of each pricing path; paths that never pay are marked N.
  std::vector<std::uint8_t> stop_index;
};

struct LossSegment {
  std::size_t date = 0;
  std::vector<double> mse;  // one entry per epoch
};

struct BermudanResult {
  double price = 0.0;            // lower-bound estimate on the pricing paths
  double std_err = 0.0;
  double upper_bound = 0.0;      // perfect-foresight mean on the same paths
  double upper_std_err = 0.0;
  double regression_price = 0.0; // in-sample value from the date-0 regressor
  std::size_t param_count = 0;
  ExercisePolicy policy;
  std::vector<LossSegment> trace;  // backward order: date N−1 first, date 0 last
};

/// Longstaff-Schwartz backward induction with a neural continuation regressor.
/// Throws std::runtime_error on a non-finite training loss.
BermudanResult ls_nn_price(const BermudanSpec& spec);

/// Concatenated per-date MSE curves, N segments of epochs_per_date each.
std::vector<LossSegment> per_date_loss_trace(const BermudanSpec& spec);

/// CSV with header date_index,epoch,mse.
void write_trace_csv(std::ostream& out, std::span<const LossSegment> trace);
/// {d, price, std_err, regressor, param_count, ...}.
nlohmann::json result_json(const BermudanSpec& spec, const BermudanResult& result);

}  // namespace tnn::bermudan
