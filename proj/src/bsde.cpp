#include "tnn/bsde.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tnn::bsde {

namespace {

double residual_loss(double y, LossKind kind) { return kind == LossKind::LogCosh ? nn::log_cosh(y) : y * y; }

double cpu_now_ms() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return 1e3 * static_cast<double>(ts.tv_sec) + 1e-6 * static_cast<double>(ts.tv_nsec);
}

}  // namespace

void TrainConfig::validate() const {
  network.validate();
  heston.validate();
  if (network.input_dim != 3 || network.output_dim != 1)
    throw InvalidArgument("TrainConfig: network must map (t, X, v) to a scalar");
  if (steps == 0) throw InvalidArgument("TrainConfig: steps must be at least 1");
  if (batch == 0) throw InvalidArgument("TrainConfig: batch must be at least 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning rate must be positive");
  if (!(strike > 0.0)) throw InvalidArgument("TrainConfig: strike must be positive");
}

double payoff(double x_terminal, double strike, OptionKind kind) {
  const double s = std::exp(x_terminal);
  return kind == OptionKind::Call ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
}

Matrix utilde_rollforward(const Matrix& u_hat, const Matrix& du_dx, const Matrix& du_dv, const sde::PathSet& paths,
                          const sde::HestonParams& params) {
  const std::size_t m = paths.paths, n = paths.steps;
  for (const Matrix* a : {&u_hat, &du_dx, &du_dv, &paths.v})
    if (a->rows() != m || a->cols() != n + 1) throw InvalidArgument("utilde_rollforward: expected M x (N+1) inputs");
  if (paths.dWx.rows() != m || paths.dWx.cols() != n || !paths.dWx.same_shape(paths.dZ))
    throw InvalidArgument("utilde_rollforward: increment shapes do not match the path set");

  const double growth = 1.0 + params.rate * paths.dt;
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  Matrix out(m, n + 1);
  for (std::size_t j = 0; j < m; ++j) {
    out(j, 0) = u_hat(j, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double root = std::sqrt(std::max(paths.v(j, i), 0.0));
      const double dx = root * paths.dWx(j, i);
      const double dv = params.eta * root * (params.rho * paths.dWx(j, i) + rho_bar * paths.dZ(j, i));
      out(j, i + 1) = growth * u_hat(j, i) + du_dx(j, i) * dx + du_dv(j, i) * dv;
    }
  }
  return out;
}

double bsde_loss(const Matrix& u_hat, const Matrix& u_tilde, std::span<const double> x_terminal, double strike,
                 OptionKind kind, LossKind loss) {
  if (!u_hat.same_shape(u_tilde)) throw InvalidArgument("bsde_loss: u_hat and u_tilde shapes differ");
  if (u_hat.cols() < 2) throw InvalidArgument("bsde_loss: need at least one time step");
  if (x_terminal.size() != u_hat.rows()) throw InvalidArgument("bsde_loss: one terminal state per path required");
  const std::size_t m = u_hat.rows(), n = u_hat.cols() - 1;
  double path_term = 0.0, terminal_term = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 1; i <= n; ++i) path_term += residual_loss(u_hat(j, i) - u_tilde(j, i), loss);
    terminal_term += residual_loss(u_hat(j, n) - payoff(x_terminal[j], strike, kind), loss);
  }
  return (path_term + terminal_term) / static_cast<double>(m);
}

BsdeObjective::BsdeObjective(const nn::Network& network, const sde::HestonParams& params, std::size_t batch,
                             std::size_t steps, double strike, OptionKind kind, LossKind loss)
    : params_(params), batch_(batch), steps_(steps), strike_(strike), kind_(kind) {
  if (batch == 0 || steps == 0) throw InvalidArgument("BsdeObjective: batch and steps must be positive");
  const std::size_t cols = steps + 1;
  const std::size_t rows = batch * cols;

  inputs_ = graph_.input("state", rows, 3);
  diffusion_x_ = graph_.input("diffusion_x", rows, 1);
  diffusion_v_ = graph_.input("diffusion_v", rows, 1);
  terminal_ = graph_.input("terminal", batch, 1);
  net_ = network.build(graph_, graph_.leaf(inputs_));
  u_hat_ = net_.output;
  const ad::NodeId grad = ad::input_gradient(graph_, net_.layers);
  du_dx_ = graph_.column(grad, 1);
  du_dv_ = graph_.column(grad, 2);

  std::vector<std::size_t> prev, cur, last;
  prev.reserve(batch * steps);
  cur.reserve(batch * steps);
  for (std::size_t j = 0; j < batch; ++j) {
    for (std::size_t i = 0; i < steps; ++i) {
      prev.push_back(j * cols + i);
      cur.push_back(j * cols + i + 1);
    }
    last.push_back(j * cols + steps);
  }

  const double growth = 1.0 + params.rate * (params.maturity / static_cast<double>(steps));
  ad::NodeId step = graph_.scale(u_hat_, growth);
  step = graph_.add(step, graph_.hadamard(du_dx_, graph_.leaf(diffusion_x_)));
  step = graph_.add(step, graph_.hadamard(du_dv_, graph_.leaf(diffusion_v_)));
  u_tilde_ = graph_.gather_rows(step, prev);

  const auto residual = [&](ad::NodeId r) {
    return graph_.mean(loss == LossKind::LogCosh ? graph_.log_cosh(r) : graph_.square(r));
  };
  // summed over steps, averaged over paths
  const ad::NodeId path_term =
      graph_.scale(residual(graph_.sub(graph_.gather_rows(u_hat_, cur), u_tilde_)), static_cast<double>(steps));
  const ad::NodeId terminal_term = residual(graph_.sub(graph_.gather_rows(u_hat_, last), graph_.leaf(terminal_)));
  loss_ = graph_.add(path_term, terminal_term);
}

double BsdeObjective::evaluate(const nn::Network& network, const sde::PathSet& paths) {
  if (paths.paths != batch_ || paths.steps != steps_)
    throw InvalidArgument("BsdeObjective: path set does not match the recorded batch shape");
  const std::size_t cols = steps_ + 1;
  const double rho_bar = std::sqrt(1.0 - params_.rho * params_.rho);

  Matrix& state = bindings_.slot(inputs_);
  Matrix& cx = bindings_.slot(diffusion_x_);
  Matrix& cv = bindings_.slot(diffusion_v_);
  Matrix& term = bindings_.slot(terminal_);
  state.reset(batch_ * cols, 3);
  cx.reset(batch_ * cols, 1);
  cv.reset(batch_ * cols, 1);
  term.reset(batch_, 1);
  for (std::size_t j = 0; j < batch_; ++j) {
    for (std::size_t i = 0; i <= steps_; ++i) {
      const std::size_t r = j * cols + i;
      state(r, 0) = paths.times[i];
      state(r, 1) = paths.x(j, i);
      state(r, 2) = paths.v(j, i);
      if (i == steps_) continue;
      const double root = std::sqrt(std::max(paths.v(j, i), 0.0));
      cx(r, 0) = root * paths.dWx(j, i);
      cv(r, 0) = params_.eta * root * (params_.rho * paths.dWx(j, i) + rho_bar * paths.dZ(j, i));
    }
    term(j, 0) = payoff(paths.x(j, steps_), strike_, kind_);
  }
  network.bind(net_, bindings_);
  graph_.evaluate(bindings_);
  return graph_.value(loss_)(0, 0);
}

std::vector<Matrix> BsdeObjective::gradient() {
  ad::GradientMap g = graph_.backward(loss_);
  std::vector<Matrix> out;
  out.reserve(net_.params.size());
  for (ad::LeafId id : net_.params) out.push_back(g.at(id));
  return out;
}

Matrix BsdeObjective::reshape_rows(ad::NodeId node) const {
  const Matrix& v = graph_.value(node);
  Matrix out(batch_, steps_ + 1);
  for (std::size_t r = 0; r < v.rows(); ++r) out[r] = v(r, 0);
  return out;
}

Matrix BsdeObjective::u_hat() const { return reshape_rows(u_hat_); }
Matrix BsdeObjective::du_dx() const { return reshape_rows(du_dx_); }
Matrix BsdeObjective::du_dv() const { return reshape_rows(du_dv_); }

Matrix BsdeObjective::u_tilde() const {
  const Matrix& u = graph_.value(u_hat_);
  const Matrix& t = graph_.value(u_tilde_);
  Matrix out(batch_, steps_ + 1);
  for (std::size_t j = 0; j < batch_; ++j) {
    out(j, 0) = u(j * (steps_ + 1), 0);
    for (std::size_t i = 0; i < steps_; ++i) out(j, i + 1) = t(j * steps_ + i, 0);
  }
  return out;
}

double price_t0(const nn::Network& network, const sde::HestonParams& params) {
  const Matrix x0 = Matrix::from_rows({{0.0, std::log(params.spot), params.v0}});
  return network.forward(x0)(0, 0);
}

TrainHistory train(const TrainConfig& config) {
  config.validate();
  nn::Network net = nn::Network::initialize(config.network, config.seed);
  TrainHistory h;
  h.seed = config.seed;
  h.initial_price = price_t0(net, config.heston);
  h.loss.reserve(config.iterations);
  h.price_t0.reserve(config.iterations);
  h.wall_ms.reserve(config.iterations);
  h.cpu_ms.reserve(config.iterations);

  BsdeObjective objective(net, config.heston, config.batch, config.steps, config.strike, config.kind, config.loss);
  nn::Adam adam({.learning_rate = config.learning_rate}, net.parameters());
  const auto wall0 = std::chrono::steady_clock::now();
  const double cpu0 = cpu_now_ms();

  for (std::size_t k = 0; k < config.iterations; ++k) {
    const sde::PathSet paths =
        sde::simulate_heston(config.heston, config.steps, config.batch, config.seed, k * config.batch);
    const double loss = objective.evaluate(net, paths);
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(k) + " for " +
                               config.network.name() + " seed " + std::to_string(config.seed));
    h.loss.push_back(loss);
    h.price_t0.push_back(objective.u_hat()(0, 0));
    adam.step(net.parameters(), objective.gradient());
    h.wall_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count());
    h.cpu_ms.push_back(cpu_now_ms() - cpu0);
  }
  h.final_price = price_t0(net, config.heston);
  h.network = std::move(net);
  return h;
}

PriceStats price_at_t0(std::span<const TrainHistory> runs) {
  if (runs.empty()) throw InvalidArgument("price_at_t0: no runs");
  PriceStats s;
  s.runs = runs.size();
  for (const auto& r : runs) s.mean += r.final_price;
  s.mean /= static_cast<double>(runs.size());
  double ss = 0.0;
  for (const auto& r : runs) ss += (r.final_price - s.mean) * (r.final_price - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(runs.size()));
  return s;
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "iteration,loss,price_t0\n";
  out.precision(17);
  for (std::size_t k = 0; k < history.iterations(); ++k)
    out << k << ',' << history.loss[k] << ',' << history.price_t0[k] << '\n';
}

}  // namespace tnn::bsde
