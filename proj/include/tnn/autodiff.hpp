#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnn/tensor.hpp"

namespace tnn::ad {

/// Handle to a node of a Graph.
struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

/// Handle to a leaf (parameter or input) of a Graph.
struct LeafId {
  std::uint32_t index = 0;
  friend auto operator<=>(LeafId, LeafId) = default;
};

enum class Op : std::uint8_t {
  Constant,
  Leaf,
  Add,
  Sub,
  Hadamard,
  Scale,
  AddRow,      // a + broadcast of a 1×n row over every row of a
  MulRow,      // a ⊙ broadcast row
  MatMul,
  MatMulBT,    // a · bᵀ
  Tanh,
  TanhGrad,    // 1 − y², applied to a tanh output y
  LeakyRelu,
  LeakyReluGrad,  // piecewise-constant slope of the pre-activation; zero derivative
  Square,
  Sqrt,
  LogCosh,
  Sum,         // → 1×1
  Mean,        // → 1×1
  GatherRows,
  Column,
  ContractMpo,
};

enum class Activation : std::uint8_t { Identity, Tanh, LeakyRelu, Square };

inline constexpr double kLeakySlope = 0.01;

/// Gradients of a scalar output with respect to the parameter leaves.
class GradientMap {
 public:
  void set(LeafId id, Matrix g) { grads_[id] = std::move(g); }
  bool contains(LeafId id) const { return grads_.count(id) != 0; }
  const Matrix& at(LeafId id) const;
  std::size_t size() const noexcept { return grads_.size(); }
  auto begin() const { return grads_.begin(); }
  auto end() const { return grads_.end(); }

 private:
  std::map<LeafId, Matrix> grads_;
};

/// Values for the leaves of a Graph.
class Bindings {
 public:
  void bind(LeafId id, Matrix value);
  const Matrix* find(LeafId id) const;
  Matrix& slot(LeafId id);

 private:
  std::deque<std::optional<Matrix>> values_;  // deque: slot() references survive growth
};

/// Reverse-mode expression graph over matrices.
///
/// Nodes are appended in topological order and carry static shapes. A graph is
/// built once, then evaluated against Bindings as many times as needed; every
/// node's value is cached until the next evaluate(). Backward support is first
/// order per node, which is enough to differentiate gradient expressions that
/// were themselves written as graph nodes (see input_gradient below).
class Graph {
 public:
  LeafId parameter(std::string name, std::size_t rows, std::size_t cols);
  LeafId input(std::string name, std::size_t rows, std::size_t cols);
  NodeId leaf(LeafId id) const { return leaf_nodes_[id.index]; }
  NodeId constant(Matrix value);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId add_row(NodeId a, NodeId row);
  NodeId mul_row(NodeId a, NodeId row);
  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_bt(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId tanh_grad(NodeId tanh_out);
  NodeId leaky_relu(NodeId a, double slope = kLeakySlope);
  NodeId leaky_relu_grad(NodeId pre, double slope = kLeakySlope);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);
  /// ln cosh, evaluated as |y| + log((1 + e^{-2|y|}) / 2).
  NodeId log_cosh(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId gather_rows(NodeId a, std::vector<std::size_t> rows);
  NodeId column(NodeId a, std::size_t col);
  /// Contracted MPO operator from unfolded nodes w1 ((d1·χ)×d1) and w2 ((χ·d2)×d2).
  NodeId contract_mpo(NodeId w1, NodeId w2, std::size_t d1, std::size_t d2, std::size_t chi);

  std::size_t rows(NodeId n) const { return nodes_[n.index].rows; }
  std::size_t cols(NodeId n) const { return nodes_[n.index].cols; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  const std::string& leaf_name(LeafId id) const { return leaves_[id.index].name; }
  bool is_parameter(LeafId id) const { return leaves_[id.index].is_parameter; }

  /// Computes every node. Throws if a leaf is unbound or has the wrong shape.
  void evaluate(const Bindings& bindings);
  /// Value of a node from the last evaluate().
  const Matrix& value(NodeId n) const;
  /// Gradient of a 1×1 node with respect to every parameter leaf.
  GradientMap backward(NodeId output);

 private:
  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double scalar = 0.0;
    std::size_t dim1 = 0, dim2 = 0, dim3 = 0;
    std::uint32_t leaf = 0;
    bool needs_grad = false;
  };
  struct LeafInfo {
    std::string name;
    std::size_t rows, cols;
    bool is_parameter;
  };

  NodeId push(Node node);
  NodeId unary(Op op, NodeId a, std::size_t rows, std::size_t cols, double scalar = 0.0);
  NodeId binary(Op op, NodeId a, NodeId b, std::size_t rows, std::size_t cols);
  void forward_node(std::size_t i, const Bindings& bindings);
  void backward_node(std::size_t i);

  std::vector<Node> nodes_;
  std::vector<LeafInfo> leaves_;
  std::vector<NodeId> leaf_nodes_;
  std::vector<Matrix> constants_;  // indexed by Node::leaf for Constant nodes
  std::vector<std::vector<std::size_t>> gathers_;  // indexed by Node::leaf for GatherRows
  std::vector<Matrix> values_;
  std::vector<Matrix> grads_;
  bool evaluated_ = false;
};

/// One layer of a feed-forward network as recorded in a Graph:
/// pre = input · weight + bias, post = activation(pre).
struct LayerTrace {
  NodeId weight;
  NodeId pre;
  NodeId post;
  Activation activation;
};

/// Gradient of a width-1 network output with respect to the network input,
/// built as graph nodes so that it can itself be differentiated with respect
/// to the weights. Returns a B × input_dim node.
///
/// The derivative is propagated layer by layer from the output back to the
/// input: g ← g ⊙ σ'(pre), then g ← g · Wᵀ. For leaky ReLU the slope at a
/// pre-activation of exactly 0 is taken to be the left slope.
NodeId input_gradient(Graph& graph, std::span<const LayerTrace> layers);

}  // namespace tnn::ad
