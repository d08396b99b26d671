#include "tnn/bermudan.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "tnn/autodiff.hpp"
#include "tnn/random.hpp"

namespace tnn::bermudan {

namespace {

constexpr std::uint64_t kTrainSalt = 1;
constexpr std::uint64_t kPriceSalt = 2;

// MSE regression graph for a fixed row count.
struct MseGraph {
  ad::Graph graph;
  ad::Bindings bindings;
  ad::LeafId input, target;
  nn::Network::GraphHandles net;
  ad::NodeId loss;

  MseGraph(const nn::Network& network, std::size_t rows) {
    input = graph.input("state", rows, network.spec().input_dim);
    target = graph.input("target", rows, 1);
    net = network.build(graph, graph.leaf(input));
    loss = graph.mean(graph.square(graph.sub(net.output, graph.leaf(target))));
  }

  double step(nn::Network& network, nn::Adam& adam, const Matrix& x, const Matrix& y) {
    bindings.slot(input) = x;
    bindings.slot(target) = y;
    network.bind(net, bindings);
    graph.evaluate(bindings);
    const double value = graph.value(loss)(0, 0);
    if (!std::isfinite(value)) throw std::runtime_error("bermudan: non-finite regression loss");
    const ad::GradientMap g = graph.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(net.params.size());
    for (ad::LeafId id : net.params) grads.push_back(g.at(id));
    adam.step(network.parameters(), grads);
    return value;
  }
};

class Regression {
 public:
  explicit Regression(const BermudanSpec& spec) : spec_(spec) {}

  // Trains `network` on (x, y) for epochs_per_date epochs; returns the per-epoch MSE.
  std::vector<double> fit(nn::Network& network, const Matrix& x, const Matrix& y, std::size_t date) {
    std::vector<double> trace;
    trace.reserve(spec_.epochs_per_date);
    const std::size_t n = x.rows();
    nn::Adam adam({.learning_rate = spec_.learning_rate}, network.parameters());
    const std::size_t batch = spec_.batch_size == 0 ? n : std::min(spec_.batch_size, n);
    if (batch == n) {
      MseGraph g(network, n);
      for (std::size_t e = 0; e < spec_.epochs_per_date; ++e) trace.push_back(g.step(network, adam, x, y));
      return trace;
    }

    std::vector<std::size_t> order(n);
    rng::UniformSequence rng(spec_.seed, rng::Stream::Shuffle, static_cast<std::uint32_t>(date));
    Matrix xb, yb;
    for (std::size_t e = 0; e < spec_.epochs_per_date; ++e) {
      for (std::size_t k = 0; k < n; ++k) order[k] = k;
      for (std::size_t k = n; k-- > 1;) {
        const auto pick = static_cast<std::size_t>(rng.next() * static_cast<double>(k + 1));
        std::swap(order[k], order[std::min(pick, k)]);
      }
      double total = 0.0;
      for (std::size_t lo = 0; lo < n; lo += batch) {
        const std::size_t rows = std::min(batch, n - lo);
        xb.reset(rows, x.cols());
        yb.reset(rows, 1);
        for (std::size_t r = 0; r < rows; ++r) {
          const auto src = x.row(order[lo + r]);
          std::copy(src.begin(), src.end(), xb.row(r).begin());
          yb(r, 0) = y(order[lo + r], 0);
        }
        total += static_cast<double>(rows) * graph_for(network, rows).step(network, adam, xb, yb);
      }
      trace.push_back(total / static_cast<double>(n));
    }
    graphs_.clear();
    return trace;
  }

 private:
  MseGraph& graph_for(const nn::Network& network, std::size_t rows) {
    auto& slot = graphs_[rows];
    if (!slot) slot = std::make_unique<MseGraph>(network, rows);
    return *slot;
  }

  const BermudanSpec& spec_;
  std::map<std::size_t, std::unique_ptr<MseGraph>> graphs_;
};

Matrix scaled_states(const sde::BasketPaths& paths, std::span<const std::size_t> rows, std::size_t date,
                     double strike) {
  Matrix x(rows.size(), paths.assets);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto s = paths.state(rows[r], date);
    for (std::size_t k = 0; k < paths.assets; ++k) x(r, k) = s[k] / strike;
  }
  return x;
}

double mean_and_stderr(std::span<const double> v, double& stderr_out) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(v.size());
  stderr_out = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return mean;
}

}  // namespace

nn::NetworkSpec BermudanSpec::default_regressor(std::size_t assets) {
  nn::NetworkSpec s = nn::NetworkSpec::tensor(16, 2);
  s.input_dim = assets;
  s.activation = ad::Activation::LeakyRelu;
  return s;
}

BermudanSpec BermudanSpec::symmetric(std::size_t assets, const nn::NetworkSpec& regressor) {
  BermudanSpec spec;
  spec.basket = sde::GbmBasketParams::symmetric(assets);
  spec.regressor = regressor;
  spec.regressor.input_dim = assets;
  return spec;
}

void BermudanSpec::validate() const {
  basket.validate();
  regressor.validate();
  if (regressor.input_dim != basket.assets)
    throw InvalidArgument("BermudanSpec: regressor input width must equal the asset count");
  if (regressor.output_dim != 1) throw InvalidArgument("BermudanSpec: regressor must be scalar-valued");
  if (!(strike > 0.0)) throw InvalidArgument("BermudanSpec: strike must be positive");
  if (basket.exercise_dates > 255) throw InvalidArgument("BermudanSpec: at most 255 exercise dates");
  if (train_paths == 0 || price_paths == 0) throw InvalidArgument("BermudanSpec: path counts must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("BermudanSpec: learning rate must be positive");
}

std::vector<double> BermudanSpec::exercise_times() const {
  std::vector<double> t(basket.exercise_dates);
  for (std::size_t n = 0; n < t.size(); ++n)
    t[n] = basket.maturity * static_cast<double>(n + 1) / static_cast<double>(basket.exercise_dates);
  return t;
}

double max_call_payoff(std::span<const double> spot, double strike) {
  if (spot.empty()) throw InvalidArgument("max_call_payoff: empty asset vector");
  return std::max(*std::max_element(spot.begin(), spot.end()) - strike, 0.0);
}

PathSets simulate_paths(const BermudanSpec& spec) {
  spec.validate();
  const std::size_t steps = spec.basket.exercise_dates;
  return {sde::simulate_gbm_basket(spec.basket, steps, spec.train_paths, rng::mix_seed(spec.seed, kTrainSalt)),
          sde::simulate_gbm_basket(spec.basket, steps, spec.price_paths, rng::mix_seed(spec.seed, kPriceSalt))};
}

BermudanResult ls_nn_price(const BermudanSpec& spec) {
  const PathSets paths = simulate_paths(spec);
  const std::size_t dates = spec.basket.exercise_dates;
  const double k = spec.strike;
  const double r = spec.basket.rate;
  const double dt = spec.basket.maturity / static_cast<double>(dates);
  const sde::BasketPaths& train = paths.train;

  // realized cash flow of every training path under the policy found so far
  std::vector<double> cash(train.paths);
  std::vector<std::size_t> cash_date(train.paths, dates);
  for (std::size_t j = 0; j < train.paths; ++j) cash[j] = max_call_payoff(train.state(j, dates), k);

  BermudanResult result;
  std::vector<nn::Network> regressors(dates, nn::Network::initialize(spec.regressor, spec.seed));
  nn::Network net = nn::Network::initialize(spec.regressor, spec.seed);
  result.param_count = net.param_count();
  Regression regression(spec);

  for (std::size_t n = dates; n-- > 0;) {
    std::vector<std::size_t> rows;
    std::vector<double> exercise;
    for (std::size_t j = 0; j < train.paths; ++j) {
      const double pay = max_call_payoff(train.state(j, n), k);
      if (n == 0 || !spec.itm_only || pay > 0.0) {
        rows.push_back(j);
        exercise.push_back(pay);
      }
    }
    LossSegment seg{n, {}};
    if (!rows.empty()) {
      const Matrix x = scaled_states(train, rows, n, k);
      Matrix y(rows.size(), 1);
      for (std::size_t q = 0; q < rows.size(); ++q) {
        const std::size_t j = rows[q];
        y(q, 0) = cash[j] * std::exp(-r * dt * static_cast<double>(cash_date[j] - n)) / k;
      }
      seg.mse = regression.fit(net, x, y, n);
      const Matrix pred = net.forward(x);
      if (n == 0) {
        result.regression_price = std::max(exercise.front(), k * pred(0, 0));
      } else {
        for (std::size_t q = 0; q < rows.size(); ++q) {
          if (exercise[q] > 0.0 && exercise[q] > k * pred(q, 0)) {
            cash[rows[q]] = exercise[q];
            cash_date[rows[q]] = n;
          }
        }
      }
    } else {
      seg.mse.assign(spec.epochs_per_date, 0.0);
    }
    regressors[n] = net;
    result.trace.push_back(std::move(seg));
  }

  // independent pricing paths under the trained stopping rule
  const sde::BasketPaths& price = paths.price;
  std::vector<double> value(price.paths, 0.0), upper(price.paths, 0.0);
  std::vector<std::uint8_t> stop(price.paths, static_cast<std::uint8_t>(dates));
  std::vector<bool> alive(price.paths, true);
  for (std::size_t n = 1; n <= dates; ++n) {
    const double disc = std::exp(-r * dt * static_cast<double>(n));
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < price.paths; ++j) {
      const double pay = max_call_payoff(price.state(j, n), k);
      upper[j] = std::max(upper[j], disc * pay);
      if (alive[j] && pay > 0.0) rows.push_back(j);
    }
    if (rows.empty()) continue;
    std::vector<bool> exercise(rows.size(), true);
    if (n < dates) {
      const Matrix pred = regressors[n].forward(scaled_states(price, rows, n, k));
      for (std::size_t q = 0; q < rows.size(); ++q)
        exercise[q] = max_call_payoff(price.state(rows[q], n), k) > k * pred(q, 0);
    }
    for (std::size_t q = 0; q < rows.size(); ++q) {
      if (!exercise[q]) continue;
      const std::size_t j = rows[q];
      value[j] = disc * max_call_payoff(price.state(j, n), k);
      stop[j] = static_cast<std::uint8_t>(n);
      alive[j] = false;
    }
  }

  const double immediate = max_call_payoff(price.state(0, 0), k);
  result.price = mean_and_stderr(value, result.std_err);
  result.upper_bound = mean_and_stderr(upper, result.upper_std_err);
  if (immediate > 0.0 && immediate >= k * regressors[0].forward(scaled_states(price, std::vector<std::size_t>{0}, 0, k))(0, 0)) {
    result.price = immediate;
    result.std_err = 0.0;
    std::fill(stop.begin(), stop.end(), std::uint8_t{0});
  }
  result.policy.regressors = std::move(regressors);
  result.policy.stop_index = std::move(stop);
  return result;
}

std::vector<LossSegment> per_date_loss_trace(const BermudanSpec& spec) { return ls_nn_price(spec).trace; }

void write_trace_csv(std::ostream& out, std::span<const LossSegment> trace) {
  out << "date_index,epoch,mse\n";
  out.precision(17);
  for (const LossSegment& seg : trace)
    for (std::size_t e = 0; e < seg.mse.size(); ++e) out << seg.date << ',' << e << ',' << seg.mse[e] << '\n';
}

nlohmann::json result_json(const BermudanSpec& spec, const BermudanResult& result) {
  return {{"schema", "v1"},
          {"d", spec.basket.assets},
          {"price", result.price},
          {"std_err", result.std_err},
          {"upper_bound", result.upper_bound},
          {"upper_std_err", result.upper_std_err},
          {"regression_price", result.regression_price},
          {"regressor", spec.regressor.name()},
          {"param_count", result.param_count},
          {"seed", spec.seed},
          {"train_paths", spec.train_paths},
          {"price_paths", spec.price_paths},
          {"epochs_per_date", spec.epochs_per_date}};
}

}  // namespace tnn::bermudan
