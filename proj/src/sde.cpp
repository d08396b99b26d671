#include "tnn/sde.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <ostream>
#include <string>

#include "tnn/random.hpp"

namespace tnn::sde {

namespace {

constexpr std::uint32_t kBasketSubStride = 64;  // normal pairs reserved per step: d ≤ 128

struct EulerStep {
  double rate, kappa, theta, eta, dt;

  void operator()(double& x, double& v, double dwx, double dwv) const {
    const double vp = std::max(v, 0.0);
    assert(vp >= 0.0);
    const double root = std::sqrt(vp);
    x += root * dwx + (rate - 0.5 * vp) * dt;
    v += kappa * (theta - vp) * dt + eta * root * dwv;
  }
};

std::vector<double> uniform_grid(double maturity, std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) t[n] = maturity * static_cast<double>(n) / static_cast<double>(steps);
  return t;
}

}  // namespace

void HestonParams::validate() const {
  if (!(kappa > 0.0) || !(theta > 0.0) || !(eta > 0.0))
    throw InvalidArgument("HestonParams: kappa, theta and eta must be positive");
  if (!(std::abs(rho) <= 1.0)) throw InvalidArgument("HestonParams: |rho| must be at most 1");
  if (!(spot > 0.0)) throw InvalidArgument("HestonParams: spot must be positive");
  if (!(v0 >= 0.0)) throw InvalidArgument("HestonParams: v0 must be non-negative");
  if (!(maturity > 0.0)) throw InvalidArgument("HestonParams: maturity must be positive");
  if (!std::isfinite(rate)) throw InvalidArgument("HestonParams: rate must be finite");
}

Increments correlated_increments(double rho, double dt, std::size_t paths, std::size_t steps,
                                 std::uint64_t seed, std::uint64_t first_path) {
  if (!(std::abs(rho) <= 1.0)) throw InvalidArgument("correlated_increments: |rho| > 1");
  if (!(dt > 0.0)) throw InvalidArgument("correlated_increments: dt must be positive");
  const double sdt = std::sqrt(dt);
  const double rho_bar = std::sqrt(1.0 - rho * rho);
  Increments inc{Matrix(paths, steps), Matrix(paths, steps), Matrix(paths, steps)};
  for (std::size_t j = 0; j < paths; ++j) {
    for (std::size_t n = 0; n < steps; ++n) {
      const auto z = rng::normal_pair(seed, rng::Stream::Heston, first_path + j, static_cast<std::uint32_t>(n));
      const double dwx = sdt * z[0];
      const double dz = sdt * z[1];
      inc.dWx(j, n) = dwx;
      inc.dZ(j, n) = dz;
      inc.dWv(j, n) = rho * dwx + rho_bar * dz;
    }
  }
  return inc;
}

void replay_heston(const HestonParams& params, const Matrix& dWx, const Matrix& dZ, double dt,
                   Matrix& x, Matrix& v) {
  if (!dWx.same_shape(dZ)) throw InvalidArgument("replay_heston: increment shapes differ");
  const std::size_t paths = dWx.rows();
  const std::size_t steps = dWx.cols();
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const EulerStep step{params.rate, params.kappa, params.theta, params.eta, dt};
  const double x0 = std::log(params.spot);
  x.reset(paths, steps + 1);
  v.reset(paths, steps + 1);
  for (std::size_t j = 0; j < paths; ++j) {
    double xs = x0;
    double vs = params.v0;
    x(j, 0) = xs;
    v(j, 0) = vs;
    for (std::size_t n = 0; n < steps; ++n) {
      step(xs, vs, dWx(j, n), params.rho * dWx(j, n) + rho_bar * dZ(j, n));
      x(j, n + 1) = xs;
      v(j, n + 1) = vs;
    }
  }
}

PathSet simulate_heston(const HestonParams& params, std::size_t steps, std::size_t paths,
                        std::uint64_t seed, std::uint64_t first_path) {
  params.validate();
  if (steps == 0 || paths == 0) throw InvalidArgument("simulate_heston: steps and paths must be positive");
  PathSet ps;
  ps.steps = steps;
  ps.paths = paths;
  ps.dt = params.maturity / static_cast<double>(steps);
  ps.times = uniform_grid(params.maturity, steps);
  ps.seed = seed;
  ps.first_path = first_path;
  Increments inc = correlated_increments(params.rho, ps.dt, paths, steps, seed, first_path);
  ps.dWx = std::move(inc.dWx);
  ps.dZ = std::move(inc.dZ);
  replay_heston(params, ps.dWx, ps.dZ, ps.dt, ps.x, ps.v);
  return ps;
}

std::vector<double> simulate_heston_terminal(const HestonParams& params, std::size_t steps,
                                             std::size_t paths, std::uint64_t seed) {
  params.validate();
  const double dt = params.maturity / static_cast<double>(steps);
  const double sdt = std::sqrt(dt);
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const EulerStep step{params.rate, params.kappa, params.theta, params.eta, dt};
  const double x0 = std::log(params.spot);
  std::vector<double> out(paths);
  for (std::size_t j = 0; j < paths; ++j) {
    double x = x0;
    double v = params.v0;
    for (std::size_t n = 0; n < steps; ++n) {
      const auto z = rng::normal_pair(seed, rng::Stream::Heston, j, static_cast<std::uint32_t>(n));
      const double dwx = sdt * z[0];
      const double dz = sdt * z[1];
      step(x, v, dwx, params.rho * dwx + rho_bar * dz);
    }
    out[j] = x;
  }
  return out;
}

void write_paths_csv(std::ostream& out, const PathSet& ps) {
  out << "path_id,step,t,X,v\n";
  out.precision(17);
  for (std::size_t j = 0; j < ps.paths; ++j)
    for (std::size_t n = 0; n <= ps.steps; ++n)
      out << (ps.first_path + j) << ',' << n << ',' << ps.times[n] << ',' << ps.x(j, n) << ',' << ps.v(j, n) << '\n';
}

GbmBasketParams GbmBasketParams::symmetric(std::size_t d, double spot, double vol) {
  GbmBasketParams p;
  p.assets = d;
  p.spot.assign(d, spot);
  p.vol.assign(d, vol);
  return p;
}

void GbmBasketParams::validate() const {
  if (assets == 0) throw InvalidArgument("GbmBasketParams: need at least one asset");
  if (assets > 2 * kBasketSubStride) throw InvalidArgument("GbmBasketParams: at most 128 assets");
  if (spot.size() != assets || vol.size() != assets)
    throw InvalidArgument("GbmBasketParams: spot/vol length must equal the asset count");
  for (std::size_t k = 0; k < assets; ++k) {
    if (!(spot[k] > 0.0)) throw InvalidArgument("GbmBasketParams: spots must be positive");
    if (!(vol[k] >= 0.0)) throw InvalidArgument("GbmBasketParams: volatilities must be non-negative");
  }
  if (!(maturity > 0.0)) throw InvalidArgument("GbmBasketParams: maturity must be positive");
  if (exercise_dates == 0) throw InvalidArgument("GbmBasketParams: need at least one exercise date");
}

BasketPaths simulate_gbm_basket(const GbmBasketParams& params, std::size_t steps, std::size_t paths,
                                std::uint64_t seed) {
  params.validate();
  if (steps == 0) throw InvalidArgument("simulate_gbm_basket: steps must be positive");
  BasketPaths bp;
  bp.paths = paths;
  bp.steps = steps;
  bp.assets = params.assets;
  bp.times = uniform_grid(params.maturity, steps);
  bp.prices.resize(paths * (steps + 1) * params.assets);
  const double dt = params.maturity / static_cast<double>(steps);
  const double sdt = std::sqrt(dt);
  const std::size_t d = params.assets;
  std::vector<double> drift(d), brownian(d);
  for (std::size_t k = 0; k < d; ++k) drift[k] = params.rate - params.dividend - 0.5 * params.vol[k] * params.vol[k];

  for (std::size_t j = 0; j < paths; ++j) {
    std::fill(brownian.begin(), brownian.end(), 0.0);
    double* row = &bp.prices[j * (steps + 1) * d];
    for (std::size_t k = 0; k < d; ++k) row[k] = params.spot[k];
    for (std::size_t n = 0; n < steps; ++n) {
      std::array<double, 2> z{};
      for (std::size_t k = 0; k < d; ++k) {
        if (k % 2 == 0)
          z = rng::normal_pair(seed, rng::Stream::Basket, j,
                               static_cast<std::uint32_t>(n * kBasketSubStride + k / 2));
        brownian[k] += sdt * z[k % 2];
        const double t = bp.times[n + 1];
        row[(n + 1) * d + k] = params.spot[k] * std::exp(drift[k] * t + params.vol[k] * brownian[k]);
      }
    }
  }
  return bp;
}

}  // namespace tnn::sde
