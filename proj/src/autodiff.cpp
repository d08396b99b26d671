#include "tnn/autodiff.hpp"

#include <cmath>
#include <string>

#include "eigen_view.hpp"

namespace tnn::ad {

using detail::flat;
using detail::view;

namespace {

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

double log_cosh_value(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

const Matrix& GradientMap::at(LeafId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw InvalidArgument("GradientMap: no gradient for leaf " + std::to_string(id.index));
  return it->second;
}

void Bindings::bind(LeafId id, Matrix value) { slot(id) = std::move(value); }

const Matrix* Bindings::find(LeafId id) const {
  if (id.index >= values_.size() || !values_[id.index]) return nullptr;
  return &*values_[id.index];
}

Matrix& Bindings::slot(LeafId id) {
  if (id.index >= values_.size()) values_.resize(id.index + 1);
  if (!values_[id.index]) values_[id.index].emplace();
  return *values_[id.index];
}

NodeId Graph::push(Node node) {
  nodes_.push_back(node);
  evaluated_ = false;
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

LeafId Graph::parameter(std::string name, std::size_t rows, std::size_t cols) {
  const LeafId id{static_cast<std::uint32_t>(leaves_.size())};
  leaves_.push_back({std::move(name), rows, cols, true});
  Node n{.op = Op::Leaf, .rows = rows, .cols = cols, .leaf = id.index, .needs_grad = true};
  leaf_nodes_.push_back(push(n));
  return id;
}

LeafId Graph::input(std::string name, std::size_t rows, std::size_t cols) {
  const LeafId id{static_cast<std::uint32_t>(leaves_.size())};
  leaves_.push_back({std::move(name), rows, cols, false});
  Node n{.op = Op::Leaf, .rows = rows, .cols = cols, .leaf = id.index, .needs_grad = false};
  leaf_nodes_.push_back(push(n));
  return id;
}

NodeId Graph::constant(Matrix value) {
  Node n{.op = Op::Constant, .rows = value.rows(), .cols = value.cols(),
         .leaf = static_cast<std::uint32_t>(constants_.size())};
  constants_.push_back(std::move(value));
  return push(n);
}

NodeId Graph::unary(Op op, NodeId a, std::size_t rows, std::size_t cols, double scalar) {
  Node n{.op = op, .a = a.index, .rows = rows, .cols = cols, .scalar = scalar,
         .needs_grad = nodes_[a.index].needs_grad};
  return push(n);
}

NodeId Graph::binary(Op op, NodeId a, NodeId b, std::size_t rows, std::size_t cols) {
  Node n{.op = op, .a = a.index, .b = b.index, .rows = rows, .cols = cols,
         .needs_grad = nodes_[a.index].needs_grad || nodes_[b.index].needs_grad};
  return push(n);
}

#define TNN_REQUIRE_SAME(opname, a, b)                                                       \
  if (rows(a) != rows(b) || cols(a) != cols(b))                                              \
    throw InvalidArgument(std::string(opname) + ": shape " + dims(rows(a), cols(a)) + " vs " + \
                          dims(rows(b), cols(b)))

NodeId Graph::add(NodeId a, NodeId b) {
  TNN_REQUIRE_SAME("add", a, b);
  return binary(Op::Add, a, b, rows(a), cols(a));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  TNN_REQUIRE_SAME("sub", a, b);
  return binary(Op::Sub, a, b, rows(a), cols(a));
}

NodeId Graph::hadamard(NodeId a, NodeId b) {
  TNN_REQUIRE_SAME("hadamard", a, b);
  return binary(Op::Hadamard, a, b, rows(a), cols(a));
}

#undef TNN_REQUIRE_SAME

NodeId Graph::scale(NodeId a, double s) { return unary(Op::Scale, a, rows(a), cols(a), s); }

NodeId Graph::add_row(NodeId a, NodeId row) {
  if (rows(row) != 1 || cols(row) != cols(a))
    throw InvalidArgument("add_row: row " + dims(rows(row), cols(row)) + " for " + dims(rows(a), cols(a)));
  return binary(Op::AddRow, a, row, rows(a), cols(a));
}

NodeId Graph::mul_row(NodeId a, NodeId row) {
  if (rows(row) != 1 || cols(row) != cols(a))
    throw InvalidArgument("mul_row: row " + dims(rows(row), cols(row)) + " for " + dims(rows(a), cols(a)));
  return binary(Op::MulRow, a, row, rows(a), cols(a));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  if (cols(a) != rows(b))
    throw InvalidArgument("matmul: " + dims(rows(a), cols(a)) + " * " + dims(rows(b), cols(b)));
  return binary(Op::MatMul, a, b, rows(a), cols(b));
}

NodeId Graph::matmul_bt(NodeId a, NodeId b) {
  if (cols(a) != cols(b))
    throw InvalidArgument("matmul_bt: " + dims(rows(a), cols(a)) + " * " + dims(rows(b), cols(b)) + "^T");
  return binary(Op::MatMulBT, a, b, rows(a), rows(b));
}

NodeId Graph::tanh(NodeId a) { return unary(Op::Tanh, a, rows(a), cols(a)); }
NodeId Graph::tanh_grad(NodeId y) { return unary(Op::TanhGrad, y, rows(y), cols(y)); }
NodeId Graph::leaky_relu(NodeId a, double slope) { return unary(Op::LeakyRelu, a, rows(a), cols(a), slope); }

NodeId Graph::leaky_relu_grad(NodeId pre, double slope) {
  NodeId id = unary(Op::LeakyReluGrad, pre, rows(pre), cols(pre), slope);
  nodes_[id.index].needs_grad = false;
  return id;
}

NodeId Graph::square(NodeId a) { return unary(Op::Square, a, rows(a), cols(a)); }
NodeId Graph::sqrt(NodeId a) { return unary(Op::Sqrt, a, rows(a), cols(a)); }
NodeId Graph::log_cosh(NodeId a) { return unary(Op::LogCosh, a, rows(a), cols(a)); }
NodeId Graph::sum(NodeId a) { return unary(Op::Sum, a, 1, 1); }
NodeId Graph::mean(NodeId a) { return unary(Op::Mean, a, 1, 1); }

NodeId Graph::gather_rows(NodeId a, std::vector<std::size_t> row_index) {
  for (std::size_t r : row_index)
    if (r >= rows(a)) throw InvalidArgument("gather_rows: row " + std::to_string(r) + " out of range");
  NodeId id = unary(Op::GatherRows, a, row_index.size(), cols(a));
  nodes_[id.index].leaf = static_cast<std::uint32_t>(gathers_.size());
  gathers_.push_back(std::move(row_index));
  return id;
}

NodeId Graph::column(NodeId a, std::size_t col) {
  if (col >= cols(a)) throw InvalidArgument("column: index " + std::to_string(col) + " out of range");
  NodeId id = unary(Op::Column, a, rows(a), 1);
  nodes_[id.index].dim1 = col;
  return id;
}

NodeId Graph::contract_mpo(NodeId w1, NodeId w2, std::size_t d1, std::size_t d2, std::size_t chi) {
  if (rows(w1) != d1 * chi || cols(w1) != d1 || rows(w2) != chi * d2 || cols(w2) != d2)
    throw InvalidArgument("contract_mpo: node shapes do not match (d1, d2, chi)");
  NodeId id = binary(Op::ContractMpo, w1, w2, d1 * d2, d1 * d2);
  auto& n = nodes_[id.index];
  n.dim1 = d1;
  n.dim2 = d2;
  n.dim3 = chi;
  return id;
}

void Graph::evaluate(const Bindings& bindings) {
  values_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) forward_node(i, bindings);
  evaluated_ = true;
}

const Matrix& Graph::value(NodeId n) const {
  if (!evaluated_) throw InvalidArgument("Graph::value: graph has not been evaluated");
  return values_[n.index];
}

void Graph::forward_node(std::size_t i, const Bindings& bindings) {
  const Node& n = nodes_[i];
  Matrix& out = values_[i];
  const auto in_a = [&]() -> const Matrix& { return values_[n.a]; };
  const auto in_b = [&]() -> const Matrix& { return values_[n.b]; };

  switch (n.op) {
    case Op::Constant:
      out = constants_[n.leaf];
      return;
    case Op::Leaf: {
      const Matrix* bound = bindings.find(LeafId{n.leaf});
      const auto& info = leaves_[n.leaf];
      if (bound == nullptr) throw InvalidArgument("Graph::evaluate: leaf '" + info.name + "' is unbound");
      if (bound->rows() != info.rows || bound->cols() != info.cols)
        throw InvalidArgument("Graph::evaluate: leaf '" + info.name + "' bound with shape " +
                              dims(bound->rows(), bound->cols()) + ", expected " + dims(info.rows, info.cols));
      out = *bound;
      return;
    }
    case Op::MatMul:
      matmul_into(in_a(), in_b(), out);
      return;
    case Op::MatMulBT:
      matmul_bt_into(in_a(), in_b(), out);
      return;
    case Op::ContractMpo:
      contract_mpo_into(in_a(), in_b(), n.dim1, n.dim2, n.dim3, out);
      return;
    default:
      break;
  }

  out.reset(n.rows, n.cols);
  auto o = flat(out);
  switch (n.op) {
    case Op::Add:
      o = flat(in_a()) + flat(in_b());
      break;
    case Op::Sub:
      o = flat(in_a()) - flat(in_b());
      break;
    case Op::Hadamard:
      o = flat(in_a()) * flat(in_b());
      break;
    case Op::Scale:
      o = n.scalar * flat(in_a());
      break;
    case Op::AddRow:
      view(out) = view(in_a()).rowwise() + view(in_b()).row(0);
      break;
    case Op::MulRow:
      view(out) = (view(in_a()).array().rowwise() * view(in_b()).row(0).array()).matrix();
      break;
    case Op::Tanh:
      o = flat(in_a()).tanh();
      break;
    case Op::TanhGrad:
      o = 1.0 - flat(in_a()).square();
      break;
    case Op::LeakyRelu: {
      const auto a = flat(in_a());
      o = (a > 0.0).select(a, n.scalar * a);
      break;
    }
    case Op::LeakyReluGrad: {
      const auto a = flat(in_a());
      for (Eigen::Index k = 0; k < a.size(); ++k) o[k] = a[k] > 0.0 ? 1.0 : n.scalar;
      break;
    }
    case Op::Square:
      o = flat(in_a()).square();
      break;
    case Op::Sqrt: {
      const auto a = flat(in_a());
      if ((a < 0.0).any()) throw InvalidArgument("Graph::evaluate: sqrt of a negative value");
      o = a.sqrt();
      break;
    }
    case Op::LogCosh: {
      const auto a = flat(in_a());
      for (Eigen::Index k = 0; k < a.size(); ++k) o[k] = log_cosh_value(a[k]);
      break;
    }
    case Op::Sum:
      out[0] = flat(in_a()).sum();
      break;
    case Op::Mean:
      out[0] = flat(in_a()).sum() / static_cast<double>(in_a().size());
      break;
    case Op::GatherRows: {
      const Matrix& a = in_a();
      const auto& idx = gathers_[n.leaf];
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < n.cols; ++c) out(r, c) = a(idx[r], c);
      break;
    }
    case Op::Column: {
      const Matrix& a = in_a();
      for (std::size_t r = 0; r < n.rows; ++r) out(r, 0) = a(r, n.dim1);
      break;
    }
    default:
      throw InvalidArgument("Graph::evaluate: unhandled op");
  }
}

GradientMap Graph::backward(NodeId output) {
  if (!evaluated_) throw InvalidArgument("Graph::backward: graph has not been evaluated");
  if (rows(output) != 1 || cols(output) != 1)
    throw InvalidArgument("Graph::backward: output must be 1x1, got " + dims(rows(output), cols(output)));

  grads_.resize(nodes_.size());
  for (std::size_t i = 0; i <= output.index; ++i) {
    if (nodes_[i].needs_grad) grads_[i].reset(nodes_[i].rows, nodes_[i].cols);
  }
  GradientMap result;
  if (!nodes_[output.index].needs_grad) return result;
  grads_[output.index][0] = 1.0;

  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (nodes_[i].needs_grad) backward_node(i);
  }
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    if (!leaves_[k].is_parameter) continue;
    const std::uint32_t node = leaf_nodes_[k].index;
    if (node <= output.index) result.set(LeafId{static_cast<std::uint32_t>(k)}, grads_[node]);
    else result.set(LeafId{static_cast<std::uint32_t>(k)}, Matrix(leaves_[k].rows, leaves_[k].cols));
  }
  return result;
}

void Graph::backward_node(std::size_t i) {
  const Node& n = nodes_[i];
  const Matrix& g = grads_[i];
  if (n.op == Op::Leaf || n.op == Op::Constant) return;
  // Only binary ops read want_b.
  const bool want_a = nodes_[n.a].needs_grad;
  const bool want_b = nodes_[n.b].needs_grad;
  const auto ga = [&]() -> Matrix& { return grads_[n.a]; };
  const auto gb = [&]() -> Matrix& { return grads_[n.b]; };
  const auto va = [&]() -> const Matrix& { return values_[n.a]; };
  const auto vb = [&]() -> const Matrix& { return values_[n.b]; };

  switch (n.op) {
    case Op::Constant:
    case Op::Leaf:
    case Op::LeakyReluGrad:
      return;
    case Op::Add:
      if (want_a) flat(ga()) += flat(g);
      if (want_b) flat(gb()) += flat(g);
      return;
    case Op::Sub:
      if (want_a) flat(ga()) += flat(g);
      if (want_b) flat(gb()) -= flat(g);
      return;
    case Op::Hadamard:
      if (want_a) flat(ga()) += flat(g) * flat(vb());
      if (want_b) flat(gb()) += flat(g) * flat(va());
      return;
    case Op::Scale:
      if (want_a) flat(ga()) += n.scalar * flat(g);
      return;
    case Op::AddRow:
      if (want_a) flat(ga()) += flat(g);
      if (want_b) view(gb()).row(0) += view(g).colwise().sum();
      return;
    case Op::MulRow:
      if (want_a) view(ga()).array() += view(g).array().rowwise() * view(vb()).row(0).array();
      if (want_b) view(gb()).row(0) += (view(g).array() * view(va()).array()).matrix().colwise().sum();
      return;
    case Op::MatMul:
      if (want_a) view(ga()).noalias() += view(g) * view(vb()).transpose();
      if (want_b) view(gb()).noalias() += view(va()).transpose() * view(g);
      return;
    case Op::MatMulBT:
      if (want_a) view(ga()).noalias() += view(g) * view(vb());
      if (want_b) view(gb()).noalias() += view(g).transpose() * view(va());
      return;
    case Op::Tanh:
      if (want_a) flat(ga()) += flat(g) * (1.0 - flat(values_[i]).square());
      return;
    case Op::TanhGrad:
      if (want_a) flat(ga()) += -2.0 * flat(g) * flat(va());
      return;
    case Op::LeakyRelu:
      if (want_a) {
        const auto a = flat(va());
        flat(ga()) += flat(g) * (a > 0.0).select(Eigen::ArrayXd::Ones(a.size()),
                                                 Eigen::ArrayXd::Constant(a.size(), n.scalar));
      }
      return;
    case Op::Square:
      if (want_a) flat(ga()) += 2.0 * flat(g) * flat(va());
      return;
    case Op::Sqrt:
      if (want_a) flat(ga()) += flat(g) / (2.0 * flat(values_[i]));
      return;
    case Op::LogCosh:
      if (want_a) flat(ga()) += flat(g) * flat(va()).tanh();
      return;
    case Op::Sum:
      if (want_a) flat(ga()) += g[0];
      return;
    case Op::Mean:
      if (want_a) flat(ga()) += g[0] / static_cast<double>(va().size());
      return;
    case Op::GatherRows:
      if (want_a) {
        Matrix& target = ga();
        const auto& idx = gathers_[n.leaf];
        for (std::size_t r = 0; r < idx.size(); ++r)
          for (std::size_t c = 0; c < n.cols; ++c) target(idx[r], c) += g(r, c);
      }
      return;
    case Op::Column:
      if (want_a) {
        Matrix& target = ga();
        for (std::size_t r = 0; r < n.rows; ++r) target(r, n.dim1) += g(r, 0);
      }
      return;
    case Op::ContractMpo: {
      Matrix scratch_a(va().rows(), va().cols());
      Matrix scratch_b(vb().rows(), vb().cols());
      contract_mpo_adjoint(g, va(), vb(), n.dim1, n.dim2, n.dim3, scratch_a, scratch_b);
      if (want_a) ga() += scratch_a;
      if (want_b) gb() += scratch_b;
      return;
    }
  }
}

NodeId input_gradient(Graph& graph, std::span<const LayerTrace> layers) {
  if (layers.empty()) throw InvalidArgument("input_gradient: no layers");
  const LayerTrace& last = layers.back();
  if (graph.cols(last.post) != 1) throw InvalidArgument("input_gradient: network output must have width 1");
  const std::size_t batch = graph.rows(last.post);

  std::optional<NodeId> g;  // empty means "all ones"
  for (std::size_t k = layers.size(); k-- > 0;) {
    const LayerTrace& layer = layers[k];
    std::optional<NodeId> local;
    switch (layer.activation) {
      case Activation::Identity:
        break;
      case Activation::Tanh:
        local = graph.tanh_grad(layer.post);
        break;
      case Activation::LeakyRelu:
        local = graph.leaky_relu_grad(layer.pre);
        break;
      case Activation::Square:
        local = graph.scale(layer.pre, 2.0);
        break;
    }
    if (local) g = g ? graph.hadamard(*g, *local) : *local;
    if (!g) g = graph.constant(Matrix(batch, graph.cols(layer.post), 1.0));
    g = graph.matmul_bt(*g, layer.weight);
  }
  return *g;
}

}  // namespace tnn::ad
