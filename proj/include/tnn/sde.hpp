#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tnn/tensor.hpp"

namespace tnn::sde {

/// Heston model in log-spot form, dX = √v dW^X + (r − v/2) dt,
/// dv = κ(θ − v) dt + η √v dW^v, with d⟨W^X, W^v⟩ = ρ dt.
struct HestonParams {
  double rate = 0.0;       // r, per year
  double kappa = 3.0;      // κ, mean reversion per year
  double theta = 0.16;     // θ, long-run variance
  double eta = 1.0;        // η, vol of vol
  double rho = -0.5;       // ρ
  double spot = 1.0;       // S₀
  double v0 = 0.04;        // initial variance
  double maturity = 1.0;   // T, years

  void validate() const;
};

/// Brownian increments for M paths over N steps, each M × N.
struct Increments {
  Matrix dWx;
  Matrix dWv;
  Matrix dZ;
};

/// ΔW^X, ΔZ ~ N(0, Δt) independent; ΔW^v = ρ ΔW^X + √(1−ρ²) ΔZ.
/// Path j draws from counter index first_path + j, so any window of paths
/// of a seed can be generated on its own.
Increments correlated_increments(double rho, double dt, std::size_t paths, std::size_t steps,
                                 std::uint64_t seed, std::uint64_t first_path = 0);

/// Simulated (X, v) paths on a uniform grid plus the increments that drove them.
struct PathSet {
  std::size_t steps = 0;
  std::size_t paths = 0;
  double dt = 0.0;
  std::vector<double> times;  // t_0 .. t_N
  Matrix x;                   // M × (N+1)
  Matrix v;                   // M × (N+1), raw (possibly negative) variance state
  Matrix dWx;                 // M × N
  Matrix dZ;                  // M × N
  std::uint64_t seed = 0;
  std::uint64_t first_path = 0;
};

/// Full-truncation Euler scheme with v⁺ = max(v, 0):
///   X ← X + √v⁺ ΔW^X + (r − v⁺/2) Δt
///   v ← v + κ(θ − v⁺) Δt + η √v⁺ ΔW^v
PathSet simulate_heston(const HestonParams& params, std::size_t steps, std::size_t paths,
                        std::uint64_t seed, std::uint64_t first_path = 0);

/// Re-runs the recursion of simulate_heston from stored increments.
void replay_heston(const HestonParams& params, const Matrix& dWx, const Matrix& dZ, double dt,
                   Matrix& x, Matrix& v);

/// Terminal log-spots X_T of the same scheme without storing paths.
std::vector<double> simulate_heston_terminal(const HestonParams& params, std::size_t steps,
                                             std::size_t paths, std::uint64_t seed);

/// CSV with header path_id,step,t,X,v.
void write_paths_csv(std::ostream& out, const PathSet& paths);

/// Independent geometric Brownian motions with a common rate and dividend yield.
struct GbmBasketParams {
  std::size_t assets = 1;
  std::vector<double> spot{100.0};
  double rate = 0.05;
  double dividend = 0.10;
  std::vector<double> vol{0.2};
  double maturity = 3.0;
  std::size_t exercise_dates = 9;

  /// d symmetric assets with the same spot and volatility.
  static GbmBasketParams symmetric(std::size_t d, double spot = 100.0, double vol = 0.2);
  void validate() const;
};

/// Asset prices at t_0 .. t_N for every path; layout [path][step][asset].
struct BasketPaths {
  std::size_t paths = 0;
  std::size_t steps = 0;
  std::size_t assets = 0;
  std::vector<double> times;
  std::vector<double> prices;

  double at(std::size_t path, std::size_t step, std::size_t asset) const {
    return prices[(path * (steps + 1) + step) * assets + asset];
  }
  std::span<const double> state(std::size_t path, std::size_t step) const {
    return {prices.data() + (path * (steps + 1) + step) * assets, assets};
  }
};

/// Exact log-Euler GBM: S_n = S₀ exp((r − q − σ²/2) t_n + σ W_n).
BasketPaths simulate_gbm_basket(const GbmBasketParams& params, std::size_t steps, std::size_t paths,
                                std::uint64_t seed);

}  // namespace tnn::sde
