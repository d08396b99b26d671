#include "tnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_view.hpp"

namespace tnn {

namespace {

using detail::view;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidArgument("Matrix: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw InvalidArgument("Matrix::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::reset(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, 0.0);
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) throw InvalidArgument("Matrix +=: " + shape(*this) + " vs " + shape(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other)) throw InvalidArgument("Matrix -=: " + shape(*this) + " vs " + shape(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: " + shape(a) + " * " + shape(b));
  out.reset(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
}

void matmul_bt_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) throw InvalidArgument("matmul_bt: " + shape(a) + " * " + shape(b) + "^T");
  out.reset(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
}

void matmul_at_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) throw InvalidArgument("matmul_at: " + shape(a) + "^T * " + shape(b));
  out.reset(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul_into(a, b, out);
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul_bt_into(a, b, out);
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul_at_into(a, b, out);
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw InvalidArgument("max_abs_diff: " + shape(a) + " vs " + shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

Rank3Tensor::Rank3Tensor(std::size_t d1, std::size_t d2, std::size_t d3, double fill)
    : dims_{d1, d2, d3}, data_(d1 * d2 * d3, fill) {}

Rank3Tensor::Rank3Tensor(std::size_t d1, std::size_t d2, std::size_t d3, std::vector<double> data)
    : dims_{d1, d2, d3}, data_(std::move(data)) {
  if (data_.size() != d1 * d2 * d3) throw InvalidArgument("Rank3Tensor: data length mismatch");
}

MpoPair::MpoPair(Rank3Tensor w1, Rank3Tensor w2) : w1_(std::move(w1)), w2_(std::move(w2)) {
  const auto& a = w1_.dims();
  const auto& b = w2_.dims();
  if (a[0] == 0 || a[1] == 0 || b[1] == 0) throw InvalidArgument("MpoPair: zero dimension");
  if (a[0] != a[2]) throw InvalidArgument("MpoPair: w1 must have dims (d1, chi, d1)");
  if (b[1] != b[2]) throw InvalidArgument("MpoPair: w2 must have dims (chi, d2, d2)");
  if (a[1] != b[0]) throw InvalidArgument("MpoPair: bond dimensions of w1 and w2 differ");
}

std::size_t MpoPair::phys_dim() const {
  if (!symmetric()) throw InvalidArgument("MpoPair::phys_dim: nodes have different physical dims");
  return first_dim();
}

Matrix MpoPair::slice_first(std::size_t alpha) const {
  const std::size_t d = first_dim();
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = w1_(i, alpha, j);
  return a;
}

Matrix MpoPair::slice_second(std::size_t alpha) const {
  const std::size_t d = second_dim();
  Matrix b(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) b(i, j) = w2_(alpha, i, j);
  return b;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw InvalidArgument("kron: expected two square matrices of equal dimension, got " + shape(a) +
                          " and " + shape(b));
  }
  const std::size_t d = a.rows();
  Matrix out(d * d, d * d);
  for (std::size_t i1 = 0; i1 < d; ++i1)
    for (std::size_t i2 = 0; i2 < d; ++i2) {
      const double s = a(i1, i2);
      for (std::size_t j1 = 0; j1 < d; ++j1)
        for (std::size_t j2 = 0; j2 < d; ++j2) out(i1 * d + j1, i2 * d + j2) = s * b(j1, j2);
    }
  return out;
}

void contract_mpo_into(const Matrix& w1, const Matrix& w2, std::size_t d1, std::size_t d2,
                       std::size_t chi, Matrix& out) {
  if (w1.rows() != d1 * chi || w1.cols() != d1 || w2.rows() != chi * d2 || w2.cols() != d2) {
    throw InvalidArgument("contract_mpo: node shapes " + shape(w1) + ", " + shape(w2) +
                          " inconsistent with d1=" + std::to_string(d1) + " d2=" +
                          std::to_string(d2) + " chi=" + std::to_string(chi));
  }
  const std::size_t n = d1 * d2;
  out.reset(n, n);
  for (std::size_t i1 = 0; i1 < d1; ++i1)
    for (std::size_t i2 = 0; i2 < d1; ++i2)
      for (std::size_t alpha = 0; alpha < chi; ++alpha) {
        const double s = w1(i1 * chi + alpha, i2);
        if (s == 0.0) continue;
        for (std::size_t j1 = 0; j1 < d2; ++j1) {
          const double* brow = &w2.data()[(alpha * d2 + j1) * d2];
          double* orow = &out.data()[(i1 * d2 + j1) * n + i2 * d2];
          for (std::size_t j2 = 0; j2 < d2; ++j2) orow[j2] += s * brow[j2];
        }
      }
}

void contract_mpo_adjoint(const Matrix& grad_w, const Matrix& w1, const Matrix& w2,
                          std::size_t d1, std::size_t d2, std::size_t chi, Matrix& g1,
                          Matrix& g2) {
  const std::size_t n = d1 * d2;
  if (grad_w.rows() != n || grad_w.cols() != n || !g1.same_shape(w1) || !g2.same_shape(w2)) {
    throw InvalidArgument("contract_mpo_adjoint: shape mismatch");
  }
  for (std::size_t i1 = 0; i1 < d1; ++i1)
    for (std::size_t i2 = 0; i2 < d1; ++i2)
      for (std::size_t alpha = 0; alpha < chi; ++alpha) {
        const double a = w1(i1 * chi + alpha, i2);
        double acc = 0.0;
        for (std::size_t j1 = 0; j1 < d2; ++j1) {
          const double* grow = &grad_w.data()[(i1 * d2 + j1) * n + i2 * d2];
          const double* brow = &w2.data()[(alpha * d2 + j1) * d2];
          double* gbrow = &g2.data()[(alpha * d2 + j1) * d2];
          for (std::size_t j2 = 0; j2 < d2; ++j2) {
            acc += grow[j2] * brow[j2];
            gbrow[j2] += grow[j2] * a;
          }
        }
        g1(i1 * chi + alpha, i2) += acc;
      }
}

Matrix contract_mpo(const MpoPair& mpo) {
  Matrix out;
  contract_mpo_into(mpo.w1().unfold(), mpo.w2().unfold(), mpo.first_dim(), mpo.second_dim(),
                    mpo.bond_dim(), out);
  return out;
}

Matrix rearrangement(const Matrix& w, std::size_t d1, std::size_t d2) {
  const std::size_t n = d1 * d2;
  if (n == 0 || w.rows() != n || w.cols() != n) {
    throw InvalidArgument("rearrangement: expected a " + std::to_string(n) + "x" +
                          std::to_string(n) + " matrix, got " + shape(w));
  }
  Matrix r(d1 * d1, d2 * d2);
  for (std::size_t i1 = 0; i1 < d1; ++i1)
    for (std::size_t j1 = 0; j1 < d2; ++j1)
      for (std::size_t i2 = 0; i2 < d1; ++i2)
        for (std::size_t j2 = 0; j2 < d2; ++j2)
          r(i1 * d1 + i2, j1 * d2 + j2) = w(i1 * d2 + j1, i2 * d2 + j2);
  return r;
}

Matrix rearrangement(const Matrix& w) {
  if (w.rows() != w.cols()) throw InvalidArgument("rearrangement: matrix is not square");
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(w.rows()))));
  if (d * d != w.rows()) {
    throw InvalidArgument("rearrangement: side " + std::to_string(w.rows()) +
                          " is not a perfect square");
  }
  return rearrangement(w, d, d);
}

}  // namespace tnn
