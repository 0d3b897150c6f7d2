#pragma once

#include "mvak/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace mvak::testing {

inline Matrix randn(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Matrix centered(const Matrix& m) { return m.rowwise() - m.colwise().mean(); }

/// Largest column-wise deviation after choosing the better sign per column.
inline double signed_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    const double plus = (a.col(j) - b.col(j)).cwiseAbs().maxCoeff();
    const double minus = (a.col(j) + b.col(j)).cwiseAbs().maxCoeff();
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Matrix spd(Index n, std::uint64_t seed, double shift = 1.0) {
  const Matrix a = randn(n, n, seed);
  return a * a.transpose() + shift * Matrix::Identity(n, n);
}

/// 1-of-c indicator of integer classes.
inline Matrix one_hot(const std::vector<int>& cls, int c) {
  Matrix y = Matrix::Zero(static_cast<Index>(cls.size()), c);
  for (std::size_t i = 0; i < cls.size(); ++i) y(static_cast<Index>(i), cls[i]) = 1.0;
  return y;
}

}  // namespace mvak::testing
