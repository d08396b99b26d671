#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "support/oracles.hpp"
#include "tnn/autodiff.hpp"
#include "tnn/nn.hpp"

namespace oracle {

inline tnn::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& gen, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  tnn::Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = u(gen);
  return m;
}

/// Glorot-initialized network with non-zero biases, so every parameter gets a gradient.
inline tnn::nn::Network randomized_network(const tnn::nn::NetworkSpec& spec, std::uint64_t seed) {
  tnn::nn::Network net = tnn::nn::Network::initialize(spec, seed);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (tnn::Matrix& p : net.parameters())
    if (p.rows() == 1)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(gen);
  return net;
}

/// Worst entrywise relative error between backward() and central differences over all
/// parameters. The scalar is mean(û²) (first order) or Σ weights ⊙ ∂û/∂x (second order).
inline double network_gradient_error(const tnn::nn::Network& net, const tnn::Matrix& x, const tnn::Matrix& weights,
                                     bool second_order, double h = 1e-5) {
  using namespace tnn;
  ad::Graph g;
  const auto in = g.input("x", x.rows(), x.cols());
  const auto handles = net.build(g, g.leaf(in));
  ad::NodeId out;
  if (second_order) {
    const ad::NodeId grad = ad::input_gradient(g, handles.layers);
    out = g.sum(g.hadamard(grad, g.constant(weights)));
  } else {
    out = g.mean(g.square(handles.output));
  }
  ad::Bindings b;
  b.bind(in, x);
  const auto eval = [&](const nn::Network& n) {
    n.bind(handles, b);
    g.evaluate(b);
    return g.value(out)(0, 0);
  };
  eval(net);
  const ad::GradientMap grads = g.backward(out);
  double worst = 0.0;
  for (std::size_t k = 0; k < handles.params.size(); ++k) {
    for (std::size_t e = 0; e < net.parameters()[k].size(); ++e) {
      nn::Network up = net, down = net;
      up.parameters()[k][e] += h;
      down.parameters()[k][e] -= h;
      const double fd = (eval(up) - eval(down)) / (2 * h);
      worst = std::max(worst, rel_error(grads.at(handles.params[k])[e], fd, 1e-6));
    }
  }
  return worst;
}

}  // namespace oracle
