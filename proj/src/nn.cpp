#include "tnn/nn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "eigen_view.hpp"

namespace tnn::nn {

using detail::flat;
using detail::view;

namespace {

std::size_t isqrt_exact(std::size_t x) {
  auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(x))));
  return r * r == x ? r : 0;
}

void apply_activation(ad::Activation act, Matrix& m) {
  auto a = flat(m);
  switch (act) {
    case ad::Activation::Identity:
      break;
    case ad::Activation::Tanh:
      a = a.tanh();
      break;
    case ad::Activation::LeakyRelu:
      a = (a > 0.0).select(a, ad::kLeakySlope * a);
      break;
    case ad::Activation::Square:
      a = a.square();
      break;
  }
}

ad::NodeId graph_activation(ad::Graph& g, ad::Activation act, ad::NodeId pre) {
  switch (act) {
    case ad::Activation::Identity:
      return pre;
    case ad::Activation::Tanh:
      return g.tanh(pre);
    case ad::Activation::LeakyRelu:
      return g.leaky_relu(pre);
    case ad::Activation::Square:
      return g.square(pre);
  }
  return pre;
}

constexpr int kFormatVersion = 1;

}  // namespace

NetworkSpec NetworkSpec::dense(std::size_t a, std::size_t b) {
  NetworkSpec s;
  s.kind = Arch::Dense;
  s.width1 = a;
  s.width2 = b;
  return s;
}

NetworkSpec NetworkSpec::tensor(std::size_t width, std::size_t chi) {
  NetworkSpec s;
  s.kind = Arch::Tensor;
  s.width1 = s.width2 = width;
  s.bond_dim = chi;
  return s;
}

NetworkSpec NetworkSpec::tensor_init(std::size_t width, std::size_t chi) {
  NetworkSpec s = tensor(width, chi);
  s.kind = Arch::TensorInit;
  return s;
}

NetworkSpec NetworkSpec::parse(std::string_view name, std::size_t chi) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  upper.erase(std::remove_if(upper.begin(), upper.end(), [](unsigned char c) { return std::isspace(c); }),
              upper.end());
  static const std::regex dnn(R"(DNN\((\d+),(\d+)\))");
  static const std::regex tnn(R"((TNN|TNN_INIT)\((\d+)\))");
  std::smatch m;
  NetworkSpec s;
  if (std::regex_match(upper, m, dnn)) {
    s = dense(std::stoul(m[1]), std::stoul(m[2]));
  } else if (std::regex_match(upper, m, tnn)) {
    const std::size_t w = std::stoul(m[2]);
    s = m[1] == "TNN" ? tensor(w, chi) : tensor_init(w, chi);
  } else {
    throw InvalidArgument("NetworkSpec::parse: unrecognized architecture '" + std::string(name) + "'");
  }
  s.validate();
  return s;
}

void NetworkSpec::validate() const {
  if (width1 == 0 || width2 == 0 || input_dim == 0 || output_dim == 0)
    throw InvalidArgument("NetworkSpec: widths must be positive");
  if (kind == Arch::Dense) return;
  if (width1 != width2) throw InvalidArgument("NetworkSpec: " + name() + " needs equal layer widths");
  if (bond_dim == 0) throw InvalidArgument("NetworkSpec: bond dimension must be positive");
  if (kind == Arch::Tensor && isqrt_exact(width1) == 0)
    throw InvalidArgument("NetworkSpec: TN layer width " + std::to_string(width1) + " is not a perfect square");
}

std::string NetworkSpec::name() const {
  switch (kind) {
    case Arch::Dense:
      return "DNN(" + std::to_string(width1) + "," + std::to_string(width2) + ")";
    case Arch::Tensor:
      return "TNN(" + std::to_string(width1) + ")";
    case Arch::TensorInit:
      return "TNN_INIT(" + std::to_string(width1) + ")";
  }
  return "?";
}

std::pair<std::size_t, std::size_t> NetworkSpec::mpo_dims() const {
  if (kind == Arch::Dense) throw InvalidArgument("NetworkSpec::mpo_dims: dense network has no MPO");
  for (std::size_t d = static_cast<std::size_t>(std::sqrt(static_cast<double>(width1))) + 1; d >= 1; --d) {
    if (d * d <= width1 && width1 % d == 0) return {d, width1 / d};
  }
  return {1, width1};
}

std::string_view activation_name(ad::Activation a) {
  switch (a) {
    case ad::Activation::Identity:
      return "identity";
    case ad::Activation::Tanh:
      return "tanh";
    case ad::Activation::LeakyRelu:
      return "leaky_relu";
    case ad::Activation::Square:
      return "square";
  }
  return "?";
}

ad::Activation parse_activation(std::string_view name) {
  for (auto a : {ad::Activation::Identity, ad::Activation::Tanh, ad::Activation::LeakyRelu, ad::Activation::Square})
    if (activation_name(a) == name) return a;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

std::size_t param_count(const NetworkSpec& spec) {
  spec.validate();
  const std::size_t first = spec.input_dim * spec.width1 + spec.width1;
  std::size_t second = spec.width2;
  if (spec.kind == Arch::Tensor) {
    const auto [d1, d2] = spec.mpo_dims();
    second += spec.bond_dim * (d1 * d1 + d2 * d2);
  } else {
    second += spec.width1 * spec.width2;
  }
  const std::size_t head = spec.width2 * spec.output_dim + spec.output_dim;
  return first + second + head;
}

Matrix init_glorot(std::size_t rows, std::size_t cols, rng::UniformSequence& rng) {
  if (rows == 0 || cols == 0) throw InvalidArgument("init_glorot: dimensions must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& x : m.data()) x = (2.0 * rng.next() - 1.0) * bound;
  return m;
}

MpoPair init_mpo(std::size_t d1, std::size_t d2, std::size_t chi, rng::UniformSequence& rng) {
  if (d1 == 0 || d2 == 0 || chi == 0) throw InvalidArgument("init_mpo: dimensions must be positive");
  Matrix a = init_glorot(d1 * chi, d1, rng);
  Matrix b = init_glorot(chi * d2, d2, rng);
  return MpoPair(Rank3Tensor(d1, chi, d1, {a.data().begin(), a.data().end()}),
                 Rank3Tensor(chi, d2, d2, {b.data().begin(), b.data().end()}));
}

MpoPair init_mpo(std::size_t d, std::size_t chi, rng::UniformSequence& rng) { return init_mpo(d, d, chi, rng); }

Matrix tnn_init_weights(std::size_t d, std::size_t chi, rng::UniformSequence& rng) {
  return contract_mpo(init_mpo(d, chi, rng));
}

Network::Network(NetworkSpec spec, std::vector<Matrix> params) : spec_(spec), params_(std::move(params)) {
  spec_.validate();
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> layout;
  layout.push_back({"l1.w", {spec_.input_dim, spec_.width1}});
  layout.push_back({"l1.b", {1, spec_.width1}});
  if (spec_.kind == Arch::Tensor) {
    const auto [d1, d2] = spec_.mpo_dims();
    layout.push_back({"l2.w1", {d1 * spec_.bond_dim, d1}});
    layout.push_back({"l2.w2", {spec_.bond_dim * d2, d2}});
  } else {
    layout.push_back({"l2.w", {spec_.width1, spec_.width2}});
  }
  layout.push_back({"l2.b", {1, spec_.width2}});
  layout.push_back({"out.w", {spec_.width2, spec_.output_dim}});
  layout.push_back({"out.b", {1, spec_.output_dim}});

  if (params_.size() != layout.size())
    throw InvalidArgument("Network: expected " + std::to_string(layout.size()) + " parameter blocks");
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& [name, shape] = layout[k];
    if (params_[k].rows() != shape.first || params_[k].cols() != shape.second)
      throw InvalidArgument("Network: parameter " + name + " has wrong shape");
    if (!params_[k].all_finite()) throw InvalidArgument("Network: parameter " + name + " is not finite");
    names_.push_back(name);
  }
}

Network Network::initialize(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  rng::UniformSequence rng(seed, rng::Stream::Weights);
  std::vector<Matrix> p;
  p.push_back(init_glorot(spec.input_dim, spec.width1, rng));
  p.emplace_back(1, spec.width1);
  switch (spec.kind) {
    case Arch::Dense:
      p.push_back(init_glorot(spec.width1, spec.width2, rng));
      break;
    case Arch::Tensor: {
      const auto [d1, d2] = spec.mpo_dims();
      MpoPair mpo = init_mpo(d1, d2, spec.bond_dim, rng);
      p.push_back(mpo.w1().unfold());
      p.push_back(mpo.w2().unfold());
      break;
    }
    case Arch::TensorInit: {
      const auto [d1, d2] = spec.mpo_dims();
      p.push_back(contract_mpo(init_mpo(d1, d2, spec.bond_dim, rng)));
      break;
    }
  }
  p.emplace_back(1, spec.width2);
  p.push_back(init_glorot(spec.width2, spec.output_dim, rng));
  p.emplace_back(1, spec.output_dim);
  return Network(spec, std::move(p));
}

std::size_t Network::param_count() const noexcept {
  std::size_t n = 0;
  for (const auto& m : params_) n += m.size();
  return n;
}

Matrix Network::layer2_weight() const {
  if (spec_.kind != Arch::Tensor) return params_[2];
  const auto [d1, d2] = spec_.mpo_dims();
  Matrix w;
  contract_mpo_into(params_[2], params_[3], d1, d2, spec_.bond_dim, w);
  return w;
}

void Network::forward_into(const Matrix& batch, Matrix& out, Workspace& ws) const {
  if (batch.cols() != spec_.input_dim)
    throw InvalidArgument("Network::forward: input has " + std::to_string(batch.cols()) + " columns, expected " +
                          std::to_string(spec_.input_dim));
  if (!batch.all_finite()) throw InvalidArgument("Network::forward: non-finite input");
  const bool tn = spec_.kind == Arch::Tensor;
  const Matrix& b1 = params_[1];
  const Matrix& b2 = params_[tn ? 4 : 3];
  const Matrix& w3 = params_[tn ? 5 : 4];
  const Matrix& b3 = params_[tn ? 6 : 5];

  matmul_into(batch, params_[0], ws.h1);
  view(ws.h1).rowwise() += view(b1).row(0);
  apply_activation(spec_.activation, ws.h1);
  if (tn) {
    const auto [d1, d2] = spec_.mpo_dims();
    contract_mpo_into(params_[2], params_[3], d1, d2, spec_.bond_dim, ws.w2);
    matmul_into(ws.h1, ws.w2, ws.h2);
  } else {
    matmul_into(ws.h1, params_[2], ws.h2);
  }
  view(ws.h2).rowwise() += view(b2).row(0);
  apply_activation(spec_.activation, ws.h2);
  matmul_into(ws.h2, w3, out);
  view(out).rowwise() += view(b3).row(0);
}

Matrix Network::forward(const Matrix& batch) const {
  Matrix out;
  Workspace ws;
  forward_into(batch, out, ws);
  return out;
}

Network::GraphHandles Network::build(ad::Graph& g, ad::NodeId input) const {
  GraphHandles h;
  for (std::size_t k = 0; k < params_.size(); ++k)
    h.params.push_back(g.parameter(names_[k], params_[k].rows(), params_[k].cols()));
  const auto node = [&](std::size_t k) { return g.leaf(h.params[k]); };
  const bool tn = spec_.kind == Arch::Tensor;

  ad::NodeId w1 = node(0);
  ad::NodeId pre1 = g.add_row(g.matmul(input, w1), node(1));
  ad::NodeId post1 = graph_activation(g, spec_.activation, pre1);

  ad::NodeId w2 = node(2);
  if (tn) {
    const auto [d1, d2] = spec_.mpo_dims();
    w2 = g.contract_mpo(node(2), node(3), d1, d2, spec_.bond_dim);
  }
  ad::NodeId pre2 = g.add_row(g.matmul(post1, w2), node(tn ? 4 : 3));
  ad::NodeId post2 = graph_activation(g, spec_.activation, pre2);

  ad::NodeId w3 = node(tn ? 5 : 4);
  ad::NodeId out = g.add_row(g.matmul(post2, w3), node(tn ? 6 : 5));

  h.output = out;
  h.layers = {{w1, pre1, post1, spec_.activation},
              {w2, pre2, post2, spec_.activation},
              {w3, out, out, ad::Activation::Identity}};
  return h;
}

void Network::bind(const GraphHandles& handles, ad::Bindings& bindings) const {
  for (std::size_t k = 0; k < params_.size(); ++k) bindings.slot(handles.params[k]) = params_[k];
}

nlohmann::json Network::to_json() const {
  nlohmann::json j;
  j["format"] = "tnn-network";
  j["version"] = kFormatVersion;
  j["spec"] = {{"architecture", spec_.name()},
               {"bond_dim", spec_.bond_dim},
               {"input_dim", spec_.input_dim},
               {"output_dim", spec_.output_dim},
               {"activation", activation_name(spec_.activation)}};
  auto& arr = j["parameters"] = nlohmann::json::array();
  for (std::size_t k = 0; k < params_.size(); ++k) {
    arr.push_back({{"name", names_[k]},
                   {"rows", params_[k].rows()},
                   {"cols", params_[k].cols()},
                   {"data", std::vector<double>(params_[k].data().begin(), params_[k].data().end())}});
  }
  return j;
}

Network Network::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tnn-network") throw InvalidArgument("Network::from_json: not a tnn-network document");
  if (j.value("version", 0) != kFormatVersion)
    throw InvalidArgument("Network::from_json: unsupported version " + std::to_string(j.value("version", 0)));
  const auto& s = j.at("spec");
  NetworkSpec spec = NetworkSpec::parse(s.at("architecture").get<std::string>(), s.at("bond_dim").get<std::size_t>());
  spec.input_dim = s.at("input_dim").get<std::size_t>();
  spec.output_dim = s.at("output_dim").get<std::size_t>();
  spec.activation = parse_activation(s.at("activation").get<std::string>());
  std::vector<Matrix> params;
  for (const auto& p : j.at("parameters")) {
    params.emplace_back(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>(),
                        p.at("data").get<std::vector<double>>());
  }
  return Network(spec, std::move(params));
}

void Network::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

Network Network::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return from_json(nlohmann::json::parse(in));
}

double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double logcosh_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw InvalidArgument("logcosh_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(targets.size()) + " targets");
  if (predictions.empty()) throw InvalidArgument("logcosh_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += log_cosh(predictions[i] - targets[i]);
  return s / static_cast<double>(predictions.size());
}

Adam::Adam(AdamConfig config, std::span<const Matrix> params) : config_(config) {
  for (const auto& p : params) {
    first_.emplace_back(p.rows(), p.cols());
    second_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(std::span<Matrix> params, std::span<const Matrix> grads) {
  if (params.size() != first_.size() || grads.size() != first_.size())
    throw InvalidArgument("Adam::step: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(first_[k]) || !grads[k].same_shape(first_[k]))
      throw InvalidArgument("Adam::step: shape mismatch for block " + std::to_string(k));
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto m = flat(first_[k]);
    auto v = flat(second_[k]);
    const auto g = flat(grads[k]);
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.square();
    flat(params[k]) -= config_.learning_rate * (m / c1) / ((v / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace tnn::nn
