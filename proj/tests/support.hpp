#pragma once

#include <functional>
#include <initializer_list>

#include "blockqn/matcore.hpp"
#include "doctest.h"

namespace blockqn::test {

inline Matrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> vals) {
  Matrix m(rows, cols);
  auto it = vals.begin();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

inline Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Random SPD matrix B·Bᵀ + I.
inline SymMatrix random_spd(Eigen::Index d, Rng& rng) {
  Matrix b(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) b(i, j) = rng.normal();
  return SymMatrix(b * b.transpose() + Matrix::Identity(d, d));
}

inline ErrorKind error_kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a blockqn::Error");
  return ErrorKind::Io;
}

}  // namespace blockqn::test
