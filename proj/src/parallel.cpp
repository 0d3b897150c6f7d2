#include "mvak/parallel.hpp"

#include "mvak/error.hpp"

#include <cmath>

namespace mvak::par {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_rbf_args(const Matrix& a, const Matrix& b, double sigma) {
  if (a.cols() != b.cols()) throw UsageError("gram: column counts differ");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw UsageError("gram: RBF sigma must be a positive finite number");
}

inline double row_sqdist(const double* x, const double* y, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) {
    const double diff = x[k] - y[k];
    s += diff * diff;
  }
  return s;
}

}  // namespace

Matrix rbf_gram(const Matrix& a, const Matrix& b, double sigma) {
  check_rbf_args(a, b, sigma);
  const RowMajor ar = a;
  const RowMajor br = b;
  const Index n = a.rows();
  const Index m = b.rows();
  const Index d = a.cols();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Matrix out(n, m);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < m; ++j) {
    const double* y = br.data() + j * d;
    double* o = out.data() + j * n;
    for (Index i = 0; i < n; ++i) o[i] = std::exp(-row_sqdist(ar.data() + i * d, y, d) * inv);
  }
  return out;
}

Matrix rbf_gram_serial(const Matrix& a, const Matrix& b, double sigma) {
  check_rbf_args(a, b, sigma);
  const RowMajor ar = a;
  const RowMajor br = b;
  const Index d = a.cols();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j)
      out(i, j) = std::exp(
          -row_sqdist(ar.data() + i * d, br.data() + j * d, d) * inv);
  return out;
}

std::vector<double> pairwise_distances(const Matrix& a) {
  const RowMajor ar = a;
  const Index n = a.rows();
  const Index d = a.cols();
  std::vector<double> out(static_cast<std::size_t>(n * (n - 1) / 2));
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i) {
    // offset of row i's block in the packed upper triangle
    const Index base = i * (2 * n - i - 1) / 2;
    for (Index j = i + 1; j < n; ++j)
      out[static_cast<std::size_t>(base + j - i - 1)] =
          std::sqrt(row_sqdist(ar.data() + i * d, ar.data() + j * d, d));
  }
  return out;
}

std::vector<double> pairwise_distances_serial(const Matrix& a) {
  const RowMajor ar = a;
  const Index n = a.rows();
  const Index d = a.cols();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      out.push_back(std::sqrt(row_sqdist(ar.data() + i * d, ar.data() + j * d, d)));
  return out;
}

}  // namespace mvak::par
