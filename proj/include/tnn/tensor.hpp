#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace tnn {

/// Thrown on any shape or domain violation of a public contract.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// Reshape in place to (rows, cols), zero-filled. Keeps capacity.
  void reset(std::size_t rows, std::size_t cols);
  void fill(double value);

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * bᵀ
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// aᵀ * b
Matrix matmul_at(const Matrix& a, const Matrix& b);

/// out = a * b, reusing out's storage.
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_bt_into(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at_into(const Matrix& a, const Matrix& b, Matrix& out);

double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

/// Rank-3 tensor with row-major index order: element (i, j, k) lives at (i*d2 + j)*d3 + k.
class Rank3Tensor {
 public:
  Rank3Tensor() = default;
  Rank3Tensor(std::size_t d1, std::size_t d2, std::size_t d3, double fill = 0.0);
  Rank3Tensor(std::size_t d1, std::size_t d2, std::size_t d3, std::vector<double> data);

  const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// The (d1·d2) × d3 matrix that shares this tensor's flat layout.
  Matrix unfold() const { return Matrix(dims_[0] * dims_[1], dims_[2], data_); }

 private:
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::vector<double> data_;
};

/// Two-node matrix product operator.
///
/// Layout: w1 has dims (d1, χ, d1) with the bond index in the middle, so
/// A_α[i, j] = w1(i, α, j). w2 has dims (χ, d2, d2) with the bond index first,
/// B_α[i, j] = w2(α, i, j). The contracted operator is Σ_α A_α ⊗ B_α, a
/// (d1·d2) × (d1·d2) matrix. The symmetric case d1 == d2 == d is the TN layer;
/// unequal node dimensions only appear when initializing widths that are not
/// perfect squares.
class MpoPair {
 public:
  MpoPair(Rank3Tensor w1, Rank3Tensor w2);

  const Rank3Tensor& w1() const noexcept { return w1_; }
  const Rank3Tensor& w2() const noexcept { return w2_; }
  Rank3Tensor& w1() noexcept { return w1_; }
  Rank3Tensor& w2() noexcept { return w2_; }

  std::size_t bond_dim() const noexcept { return w1_.dims()[1]; }
  std::size_t first_dim() const noexcept { return w1_.dims()[0]; }
  std::size_t second_dim() const noexcept { return w2_.dims()[1]; }
  bool symmetric() const noexcept { return first_dim() == second_dim(); }
  /// Physical dimension d; throws unless both nodes share it.
  std::size_t phys_dim() const;
  /// Output/input width d1·d2 of the contracted operator.
  std::size_t width() const noexcept { return first_dim() * second_dim(); }
  /// χ(d1² + d2²), i.e. 2χd² in the symmetric case.
  std::size_t param_count() const noexcept { return w1_.size() + w2_.size(); }

  Matrix slice_first(std::size_t alpha) const;
  Matrix slice_second(std::size_t alpha) const;

 private:
  Rank3Tensor w1_;
  Rank3Tensor w2_;
};

/// Kronecker product of two square matrices of equal dimension d.
/// result[(i1·d + j1), (i2·d + j2)] = a[i1, i2] · b[j1, j2]
Matrix kron(const Matrix& a, const Matrix& b);

/// Σ_α A_α ⊗ B_α.
Matrix contract_mpo(const MpoPair& mpo);

/// Contraction on the unfolded node matrices: w1 is (d1·χ) × d1, w2 is (χ·d2) × d2.
void contract_mpo_into(const Matrix& w1, const Matrix& w2, std::size_t d1, std::size_t d2,
                       std::size_t chi, Matrix& out);

/// Pulls a gradient on the contracted matrix back onto both unfolded nodes.
/// Accumulates into g1/g2, which must already have the node shapes.
void contract_mpo_adjoint(const Matrix& grad_w, const Matrix& w1, const Matrix& w2,
                          std::size_t d1, std::size_t d2, std::size_t chi, Matrix& g1,
                          Matrix& g2);

/// Kronecker-rank rearrangement: maps the (d1·d2)² operator to a d1² × d2²
/// matrix R with R[(i1·d1 + i2), (j1·d2 + j2)] = w[(i1·d2 + j1), (i2·d2 + j2)].
/// A sum of χ Kronecker products rearranges to a matrix of rank ≤ χ.
Matrix rearrangement(const Matrix& w, std::size_t d1, std::size_t d2);
/// Symmetric case; d is inferred from the side length, which must be a perfect square.
Matrix rearrangement(const Matrix& w);

}  // namespace tnn
