#include "mvak/dependence.hpp"
#include "mvak/error.hpp"
#include "mvak/mva_kernel.hpp"
#include "mvak/mva_linear.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mvak;
using namespace mvak::testing;

namespace {

Matrix rbf_c(const Matrix& x, double s) { return center_train(Kernel::rbf(s).gram(x, x)).k; }

}  // namespace

TEST(Hsic, Examples) {
  Matrix x(2, 1);
  x << -1, 1;
  const Matrix k = center_train(x * x.transpose()).k;
  EXPECT_NEAR(hsic(k, k).value, 4.0, 1e-14);
  EXPECT_NEAR(hsic(x * x.transpose(), x * x.transpose(), false).value, 4.0, 1e-14);
  const Matrix c = Matrix::Constant(2, 1, 3.0);
  EXPECT_NEAR(hsic(x * x.transpose(), c * c.transpose(), false).value, 0.0, 1e-14);
  EXPECT_THROW(hsic(k, Matrix::Ones(3, 3)), UsageError);
}

TEST(Hsic, DoubleSumOracleAndInvariances) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = randn(30, 2, seed);
    const Matrix y = x.array().square().matrix() + randn(30, 2, seed + 50);
    const Matrix kx = Kernel::rbf(1.0).gram(x, x);
    const Matrix ky = Kernel::rbf(1.5).gram(y, y);
    const double h = hsic(kx, ky, false).value;
    EXPECT_NEAR(h, hsic_double_sum(kx, ky), 1e-12);
    EXPECT_GE(h, -1e-12);
    EXPECT_NEAR(h, hsic(ky, kx, false).value, 1e-14);
    EXPECT_NEAR(hsic(kx, 3.0 * ky, false).value, 3.0 * h, 1e-13);
    const auto perm = seeded_permutation(30, seed);
    Matrix px(30, 30), py(30, 30);
    for (Index i = 0; i < 30; ++i)
      for (Index j = 0; j < 30; ++j) {
        px(i, j) = kx(perm[i], perm[j]);
        py(i, j) = ky(perm[i], perm[j]);
      }
    EXPECT_NEAR(hsic(px, py, false).value, h, 1e-12);
  }
}

TEST(Hsic, PermutationNull) {
  const Matrix x = randn(40, 1, 3);
  const Matrix y = randn(40, 1, 4);
  const Matrix kx = rbf_c(x, 1.0);
  const Matrix ky = rbf_c(y, 1.0);
  std::vector<double> null;
  for (int p = 0; p < 200; ++p) {
    const auto perm = seeded_permutation(40, 1000 + static_cast<std::uint64_t>(p));
    Matrix py(40, 40);
    for (Index i = 0; i < 40; ++i)
      for (Index j = 0; j < 40; ++j) py(i, j) = ky(perm[i], perm[j]);
    null.push_back(hsic(kx, py).value);
  }
  double mean = 0, var = 0;
  for (double v : null) mean += v;
  mean /= 200.0;
  for (double v : null) var += (v - mean) * (v - mean);
  var /= 199.0;
  // exact permutation mean for centered Grams: tr(Kx) tr(Ky) / (l-1)^3
  const double l = 40.0;
  const double expected = kx.trace() * ky.trace() / std::pow(l - 1.0, 3);
  EXPECT_LT(std::abs(mean - expected), 3.0 * std::sqrt(var / 200.0));
  EXPECT_LT(std::abs(hsic(kx, ky).value - mean), 4.0 * std::sqrt(var));
  const double pv = hsic_permutation_pvalue(kx, ky, 200, 7);
  EXPECT_GT(pv, 0.01);
  const Matrix dep = rbf_c(x.array().square().matrix(), 1.0);
  EXPECT_NEAR(hsic_permutation_pvalue(kx, dep, 99, 7), 0.01, 1e-12);
}

TEST(Hsca, FirstDirectionIsKopls) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = randn(40, 3, seed);
    const Matrix y = centered(x * randn(3, 2, seed + 10) + randn(40, 2, seed + 20));
    const Matrix k = rbf_c(x, 1.5);
    const KernelModel h = fit_hsca(k, y * y.transpose(), 1);
    const KernelModel o = fit_kopls(k, y, 1);
    EXPECT_NEAR(h.eigenvalues(0), o.eigenvalues(0), 1e-8 * std::max(1.0, o.eigenvalues(0)));
    EXPECT_LT(signed_diff(k * h.a, k * o.a), 1e-8);
  }
}

TEST(Hsca, LaterFeaturesIndependentOfEarlier) {
  const Matrix x = randn(50, 3, 8);
  const Matrix y = centered(randn(50, 3, 9) + x);
  const Matrix k = rbf_c(x, 1.2);
  const KernelModel h = fit_hsca(k, rbf_c(y, 1.0), 3);
  ASSERT_EQ(h.features(), 3);
  const Matrix f = k * h.a;
  for (Index j = 1; j < 3; ++j) {
    const Matrix fj = f.col(j) * f.col(j).transpose();
    for (Index i = 0; i < j; ++i)
      EXPECT_LT(hsic(fj, f.col(i) * f.col(i).transpose()).value, 1e-6);
  }
  EXPECT_THROW(fit_hsca(k, Matrix::Zero(50, 50), 1), NumericalError);
}

TEST(Kgv, ThetaOneMatchesKcca) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix x = centered(randn(60, 4, seed));
    const Matrix y = centered(x * randn(4, 2, seed + 5) + 2.0 * randn(60, 2, seed + 6));
    const Matrix kx = x * x.transpose();
    const DependenceReport r = kgv(kx, y * y.transpose(), 1.0, 0.0);
    const KernelModel c = fit_kcca(kx, y, 2);
    ASSERT_GE(r.eigenvalues.size(), 2);
    EXPECT_LT(max_abs(r.eigenvalues.head(2) - c.eigenvalues), 1e-6);
    EXPECT_LT(max_abs(r.eigenvalues.head(2) - fit_cca(x, y, 2).eigenvalues), 1e-6);
    for (Index i = 2; i < r.eigenvalues.size(); ++i) EXPECT_LT(r.eigenvalues(i), 1e-6);
  }
}

TEST(Kgv, ZeroTargetsEndpointAndClipping) {
  const Matrix x = randn(25, 2, 12);
  const Matrix kx = rbf_c(x, 1.0);
  const DependenceReport z = kgv(kx, Matrix::Zero(25, 25), 0.5, 0.1);
  EXPECT_NEAR(z.value, 0.0, 1e-12);
  const DependenceReport s = kgv(kx, kx, 0.0, 1e-12);
  EXPECT_GT(s.value, 5.0);
  EXPECT_FALSE(s.warnings.empty());
  EXPECT_LE(s.eigenvalues.maxCoeff(), 1.0 - 1e-9 + 1e-15);
  EXPECT_THROW(kgv(kx, kx, 0.5, 0.0), UsageError);
  EXPECT_THROW(kgv(kx, kx, 1.5, 1.0), UsageError);
}

TEST(Kgv, MonotoneInEta) {
  const Matrix x = randn(30, 2, 14);
  const Matrix y = x.array().sin().matrix() + 0.3 * randn(30, 2, 15);
  const Matrix kx = rbf_c(x, 1.0), ky = rbf_c(y, 1.0);
  for (double theta : {0.0, 0.5}) {
    double prev = INFINITY;
    for (double eta : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const double v = kgv(kx, ky, theta, eta).value;
      EXPECT_LE(v, prev + 1e-10);
      EXPECT_GE(v, -1e-10);
      prev = v;
    }
  }
}
