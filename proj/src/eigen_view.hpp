#pragma once

#include <Eigen/Core>

#include "tnn/tensor.hpp"

namespace tnn::detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajor> view(const Matrix& m) {
  return {m.data().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())};
}
inline Eigen::Map<RowMajor> view(Matrix& m) {
  return {m.data().data(), Eigen::Index(m.rows()), Eigen::Index(m.cols())};
}
inline Eigen::Map<const Eigen::ArrayXd> flat(const Matrix& m) {
  return {m.data().data(), Eigen::Index(m.size())};
}
inline Eigen::Map<Eigen::ArrayXd> flat(Matrix& m) {
  return {m.data().data(), Eigen::Index(m.size())};
}

}  // namespace tnn::detail
