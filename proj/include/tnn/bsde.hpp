#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tnn/autodiff.hpp"
#include "tnn/nn.hpp"
#include "tnn/pricing.hpp"
#include "tnn/sde.hpp"

namespace tnn::bsde {

using pricing::OptionKind;

enum class LossKind { LogCosh, Squared };

struct TrainConfig {
  nn::NetworkSpec network = nn::NetworkSpec::tensor(16, 2);
  sde::HestonParams heston;
  std::size_t steps = 50;
  std::size_t batch = 100;
  std::size_t iterations = 2000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  OptionKind kind = OptionKind::Call;
  double strike = 1.0;
  LossKind loss = LossKind::LogCosh;

  void validate() const;
};

/// Per-iteration record of one training run. Loss and price come from the
/// forward pass of that iteration, i.e. before its Adam update.
struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> price_t0;
  std::vector<double> wall_ms;  // cumulative monotonic time
  std::vector<double> cpu_ms;   // cumulative process CPU time
  double initial_price = 0.0;
  double final_price = 0.0;
  std::uint64_t seed = 0;
  std::optional<nn::Network> network;

  std::size_t iterations() const noexcept { return loss.size(); }
};

/// Terminal condition on the log-spot: max(e^x − K, 0) or max(K − e^x, 0).
double payoff(double x_terminal, double strike, OptionKind kind);

/// One-step BSDE estimator ũ along each path (all inputs M × (N+1)):
///   ũ_0 = û_0,
///   ũ_{i+1} = (1 + rΔt) û_i + ∂_X û_i √v_i⁺ ΔW^X_i + ∂_v û_i η √v_i⁺ (ρ ΔW^X_i + √(1−ρ²) ΔZ_i).
Matrix utilde_rollforward(const Matrix& u_hat, const Matrix& du_dx, const Matrix& du_dv, const sde::PathSet& paths,
                          const sde::HestonParams& params);

/// (1/M) Σ_j [Σ_{i=1..N} ℓ(û_i − ũ_i) + ℓ(û_N − φ(X_N))] with ℓ = ln cosh or the square.
/// The step residuals are summed, not averaged, so the path term keeps its weight as N grows.
double bsde_loss(const Matrix& u_hat, const Matrix& u_tilde, std::span<const double> x_terminal, double strike,
                 OptionKind kind, LossKind loss = LossKind::LogCosh);

/// Graph of the BSDE loss for a fixed (network architecture, batch, steps).
///
/// The graph is recorded once; evaluate() rebinds parameters and a fresh
/// PathSet and returns the scalar loss, gradient() then differentiates it,
/// including the input-gradient terms inside ũ.
class BsdeObjective {
 public:
  BsdeObjective(const nn::Network& network, const sde::HestonParams& params, std::size_t batch, std::size_t steps,
                double strike, OptionKind kind, LossKind loss);

  double evaluate(const nn::Network& network, const sde::PathSet& paths);
  /// Gradients aligned with network.parameters(); call after evaluate().
  std::vector<Matrix> gradient();

  /// Network outputs û from the last evaluate(), M × (N+1).
  Matrix u_hat() const;
  /// ∂û/∂X and ∂û/∂v from the last evaluate(), M × (N+1).
  Matrix du_dx() const;
  Matrix du_dv() const;
  /// ũ from the last evaluate(), M × (N+1).
  Matrix u_tilde() const;

 private:
  Matrix reshape_rows(ad::NodeId node) const;

  sde::HestonParams params_;
  std::size_t batch_, steps_;
  double strike_;
  OptionKind kind_;
  ad::Graph graph_;
  ad::Bindings bindings_;
  nn::Network::GraphHandles net_;
  ad::LeafId inputs_, diffusion_x_, diffusion_v_, terminal_;
  ad::NodeId u_hat_, du_dx_, du_dv_, u_tilde_, loss_;
};

/// Trains per the FBSDE procedure: every iteration draws a fresh batch (paths
/// [k·M, (k+1)·M) of the seed's path stream), evaluates the loss and takes one
/// Adam step. Throws std::runtime_error if the loss becomes non-finite.
TrainHistory train(const TrainConfig& config);

/// û(0, log S₀, v₀) of a network.
double price_t0(const nn::Network& network, const sde::HestonParams& params);

struct PriceStats {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t runs = 0;
};

/// Cross-run mean and population std of final û₀.
PriceStats price_at_t0(std::span<const TrainHistory> runs);

/// CSV with header iteration,loss,price_t0. Timing is kept out so the file is a pure function of (config, seed).
void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace tnn::bsde
