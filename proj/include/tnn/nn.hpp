#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tnn/autodiff.hpp"
#include "tnn/random.hpp"
#include "tnn/tensor.hpp"

namespace tnn::nn {

enum class Arch : std::uint8_t {
  Dense,       // DNN(a, b)
  Tensor,      // TNN(x): dense x, then a TN layer of width x
  TensorInit,  // TNN_INIT(x): DNN(x, x) whose second weight starts as a contracted MPO
};

/// Two-hidden-layer architecture descriptor.
struct NetworkSpec {
  Arch kind = Arch::Dense;
  std::size_t width1 = 16;
  std::size_t width2 = 16;
  std::size_t bond_dim = 2;
  std::size_t input_dim = 3;
  std::size_t output_dim = 1;
  ad::Activation activation = ad::Activation::Tanh;

  static NetworkSpec dense(std::size_t a, std::size_t b);
  static NetworkSpec tensor(std::size_t width, std::size_t chi = 2);
  static NetworkSpec tensor_init(std::size_t width, std::size_t chi = 2);

  /// Parses "DNN(a,b)", "TNN(x)" or "TNN_INIT(x)" (case-insensitive).
  static NetworkSpec parse(std::string_view name, std::size_t chi = 2);

  /// Throws InvalidArgument on inconsistent widths.
  void validate() const;
  std::string name() const;
  /// Physical dims (d1, d2) of the MPO behind layer 2; d1·d2 == width1.
  /// TNN widths must be perfect squares (d1 == d2). TNN_INIT widths use the
  /// most balanced factorization, e.g. 10 → (2, 5).
  std::pair<std::size_t, std::size_t> mpo_dims() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

std::string_view activation_name(ad::Activation a);
ad::Activation parse_activation(std::string_view name);

/// Exact trainable-parameter total including biases.
std::size_t param_count(const NetworkSpec& spec);

/// rows × cols matrix uniform on ±√(6 / (rows + cols)).
Matrix init_glorot(std::size_t rows, std::size_t cols, rng::UniformSequence& rng);

/// Random MPO, each node Glorot-uniform over its (d·χ) × d unfolding.
MpoPair init_mpo(std::size_t d, std::size_t chi, rng::UniformSequence& rng);
MpoPair init_mpo(std::size_t d1, std::size_t d2, std::size_t chi, rng::UniformSequence& rng);

/// Dense d² × d² matrix from a freshly initialized, contracted MPO.
Matrix tnn_init_weights(std::size_t d, std::size_t chi, rng::UniformSequence& rng);

/// A network plus its trainable parameters.
///
/// Parameters are stored flat, in order: l1.w, l1.b, then either l2.w (dense)
/// or l2.w1, l2.w2 (TN layer, unfolded MPO nodes), then l2.b, out.w, out.b.
/// Weights are (in × out); biases are 1 × out rows and start at zero.
class Network {
 public:
  Network(NetworkSpec spec, std::vector<Matrix> params);

  static Network initialize(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }
  std::span<Matrix> parameters() noexcept { return params_; }
  std::span<const Matrix> parameters() const noexcept { return params_; }
  const std::vector<std::string>& parameter_names() const noexcept { return names_; }
  std::size_t param_count() const noexcept;

  /// Effective layer-2 weight; for TNN this contracts the MPO.
  Matrix layer2_weight() const;

  /// B × input_dim → B × output_dim.
  Matrix forward(const Matrix& batch) const;
  /// In-place variant, reusing the buffers held by `scratch`.
  struct Workspace {
    Matrix w2, h1, h2;
  };
  void forward_into(const Matrix& batch, Matrix& out, Workspace& scratch) const;

  struct GraphHandles {
    std::vector<ad::LeafId> params;
    ad::NodeId output;
    std::vector<ad::LayerTrace> layers;
  };
  /// Records the forward pass on `input` (a B × input_dim node) into `graph`.
  GraphHandles build(ad::Graph& graph, ad::NodeId input) const;
  void bind(const GraphHandles& handles, ad::Bindings& bindings) const;

  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Network load(const std::filesystem::path& path);

 private:
  NetworkSpec spec_;
  std::vector<Matrix> params_;
  std::vector<std::string> names_;
};

/// ln cosh y, overflow-safe.
double log_cosh(double y);
/// (1/N) Σ ln cosh(pred_i − target_i).
double logcosh_loss(std::span<const double> predictions, std::span<const double> targets);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig config, std::span<const Matrix> params);

  /// One bias-corrected Adam update; grads align with params.
  void step(std::span<Matrix> params, std::span<const Matrix> grads);
  std::uint64_t steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  std::uint64_t steps_ = 0;
};

}  // namespace tnn::nn
