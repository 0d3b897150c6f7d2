#include "mvak/error.hpp"
#include "mvak/extensions.hpp"
#include "mvak/mva_kernel.hpp"
#include "mvak/predict.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mvak;
using namespace mvak::testing;

namespace {

struct Problem {
  Matrix x;
  Matrix y;
};

Problem random_problem(Index l, Index d, Index m, std::uint64_t seed) {
  Problem p;
  p.x = randn(l, d, seed);
  p.y = p.x * randn(d, m, seed + 1) + 0.5 * randn(l, m, seed + 2);
  p.y = p.y.array().tanh();
  return p;
}

Matrix centered_gram(const Kernel& k, const Matrix& x) {
  return center_train(k.gram(x, x)).k;
}

Matrix two_moons(Index n, double noise, std::uint64_t seed, std::vector<int>& cls) {
  const Matrix u = randn(n, 3, seed);
  Matrix x(n, 2);
  cls.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    const double t = std::numbers::pi * (0.5 + 0.5 * std::tanh(u(i, 0)));
    if (i % 2 == 0) {
      x(i, 0) = std::cos(t);
      x(i, 1) = std::sin(t);
    } else {
      x(i, 0) = 1.0 - std::cos(t);
      x(i, 1) = 0.5 - std::sin(t);
      cls[static_cast<std::size_t>(i)] = 1;
    }
    x(i, 0) += noise * u(i, 1);
    x(i, 1) += noise * u(i, 2);
  }
  return x;
}

double corr(const Vector& a, const Vector& b) {
  const Vector ac = a.array() - a.mean();
  const Vector bc = b.array() - b.mean();
  return ac.dot(bc) / (ac.norm() * bc.norm());
}

}  // namespace

TEST(Reduced, FullBasisMatchesDense) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Problem p = random_problem(40, 3, 2, seed * 5);
    // well-conditioned Gram so both problems keep the same range
    const Kernel kern = Kernel::rbf(0.7);
    RkOptions o;
    o.r = 40;
    o.chunk = 7;
    const Matrix xs = center_fit_apply(p.x, true).first;
    const Matrix yc = centered(p.y);
    const Matrix k = centered_gram(kern, xs);
    const auto rk_opls = fit_rk(ReducedMethod::RKOPLS, kern, p.x, p.y, 2, true, o);
    EXPECT_LT(max_abs(rk_opls.eigenvalues - fit_kopls(k, yc, 2).eigenvalues), 1e-6);
    const auto rk_cca = fit_rk(ReducedMethod::RKCCA, kern, p.x, p.y, 2, true, o);
    EXPECT_LT(max_abs(rk_cca.eigenvalues - fit_kcca(k, yc, 2).eigenvalues), 1e-6);
    const auto rk_pca = fit_rk(ReducedMethod::RKPCA, kern, p.x, p.y, 4, true, o);
    EXPECT_LT(max_abs(rk_pca.eigenvalues - fit_kpca(k, 4).eigenvalues), 1e-6);
    EXPECT_LT(signed_diff(rk_opls.transform(p.x), k * fit_kopls(k, yc, 2).a), 1e-5);
  }
}

TEST(Reduced, Constraints) {
  const Problem p = random_problem(120, 3, 2, 77);
  const Kernel kern = Kernel::rbf(1.0);
  const Matrix xs = center_fit_apply(p.x, true).first;
  for (double eta : {0.0, 0.05}) {
    RkOptions o;
    o.r = 25;
    o.seed = 3;
    o.eta = eta;
    for (ReducedMethod meth : {ReducedMethod::RKOPLS, ReducedMethod::RKCCA}) {
      const auto m = fit_rk(meth, kern, p.x, p.y, 2, true, o);
      Matrix klr = kern.gram(xs, m.basis);
      klr.rowwise() -= m.col_means.transpose();
      const Matrix krr = kern.gram(m.basis, m.basis);
      const Matrix b = (klr.transpose() * klr + eta * krr) / 120.0;
      EXPECT_LT(max_abs(m.beta.transpose() * b * m.beta - Matrix::Identity(2, 2)), 1e-5);
    }
    const auto pc = fit_rk(ReducedMethod::RKPCA, kern, p.x, p.y, 3, true, o);
    const Matrix krr = kern.gram(pc.basis, pc.basis);
    EXPECT_LT(max_abs(pc.beta.transpose() * krr * pc.beta - Matrix::Identity(3, 3)), 1e-5);
    EXPECT_EQ(pc.kernel_evaluations, 120 * 25);
  }
}

TEST(Reduced, SingleBasisSample) {
  const Problem p = random_problem(30, 2, 1, 9);
  const Kernel kern = Kernel::rbf(1.0);
  RkOptions o;
  o.r = 1;
  const auto m = fit_rk(ReducedMethod::RKOPLS, kern, p.x, p.y, 1, true, o);
  ASSERT_EQ(m.basis_indices.size(), 1u);
  const Matrix xs = center_fit_apply(p.x, true).first;
  Vector kc = kern.gram(xs, m.basis).col(0);
  kc.array() -= kc.mean();
  const Vector f = m.transform(p.x).col(0);
  EXPECT_NEAR(std::abs(corr(f, kc)), 1.0, 1e-12);
  const Vector yc = centered(p.y).col(0);
  const double want = std::pow(kc.dot(yc) / 30.0, 2) / (kc.squaredNorm() / 30.0);
  EXPECT_NEAR(m.eigenvalues(0), want, 1e-10 * want);
}

TEST(Reduced, Errors) {
  const Problem p = random_problem(10, 2, 1, 10);
  RkOptions o;
  o.r = 11;
  EXPECT_THROW(fit_rk(ReducedMethod::RKPCA, Kernel::rbf(1.0), p.x, p.y, 1, true, o), UsageError);
  o.r = 0;
  EXPECT_THROW(fit_rk(ReducedMethod::RKPCA, Kernel::rbf(1.0), p.x, p.y, 1, true, o), UsageError);
  o.r = 5;
  EXPECT_THROW(fit_rk(ReducedMethod::RKOPLS, Kernel::rbf(1.0), p.x, Matrix(), 1, true, o), UsageError);
}

TEST(Sparse, MatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Index l = 6 + static_cast<Index>(seed % 7);
    const Problem p = random_problem(l, 2, 2, seed * 3);
    const Matrix k = centered_gram(Kernel::rbf(1.0), p.x);
    const Matrix yc = centered(p.y);
    for (SparseVariant v : {SparseVariant::SMA, SparseVariant::SMC}) {
      const Index n_f = 3;
      const SparsePLSModel m = fit_sparse_pls(v, k, yc, n_f, l, seed);
      const auto want = brute_force_selection(v, k, yc, static_cast<Index>(m.selected.size()));
      EXPECT_EQ(m.selected, want);
      EXPECT_EQ(static_cast<Index>(m.selected.size()), n_f);
    }
  }
}

TEST(Sparse, ThreeByThreeHandInstance) {
  Matrix k(3, 3);
  k << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  Matrix y(3, 1);
  y << 1, 0, -1;
  // K y = (3, 0, -3); column norms equal, so indices 0 and 2 tie and the lowest wins
  const SparsePLSModel m = fit_sparse_pls(SparseVariant::SMA, k, y, 1, 3, 0);
  EXPECT_EQ(m.selected, (std::vector<Index>{0}));
  EXPECT_NEAR(m.objectives(0), 3.0 / std::sqrt(6.0), 1e-14);
  const SparsePLSModel c = fit_sparse_pls(SparseVariant::SMC, k, y, 1, 3, 0);
  EXPECT_NEAR(c.objectives(0), 3.0 / std::sqrt(2.0), 1e-14);
}

TEST(Sparse, ForcedChoiceAndDegenerate) {
  const Problem p = random_problem(15, 2, 1, 31);
  const Matrix k = centered_gram(Kernel::rbf(1.0), p.x);
  const Matrix yc = centered(p.y);
  const SparsePLSModel m = fit_sparse_pls(SparseVariant::SMC, k, yc, 2, 1, 42);
  EXPECT_EQ(m.selected[0], seeded_permutation(15, 42)[0]);
  EXPECT_EQ(m.selected[1], seeded_permutation(15, 43)[0]);
  EXPECT_THROW(fit_sparse_pls(SparseVariant::SMA, k, Matrix::Zero(15, 1), 1, 15, 0), NumericalError);
  EXPECT_THROW(fit_sparse_pls(SparseVariant::SMA, k, yc, 1, 0, 0), UsageError);
  EXPECT_THROW(fit_sparse_pls(SparseVariant::SMA, k, yc, 16, 15, 0), UsageError);
}

TEST(Sparse, ScoresOrthogonal) {
  const Problem p = random_problem(25, 3, 2, 33);
  const Matrix k = centered_gram(Kernel::rbf(1.3), p.x);
  const SparsePLSModel m = fit_sparse_pls(SparseVariant::SMA, k, centered(p.y), 4, 25, 1);
  const Matrix f = k * m.model.a;
  const Matrix g = f.transpose() * f;
  EXPECT_LT(max_abs(g - Matrix(g.diagonal().asDiagonal())), 1e-8 * g.diagonal().maxCoeff());
}

TEST(SsKcca, NoUnlabeledNoRegularisationIsKcca) {
  const Problem p = random_problem(40, 3, 2, 41);
  SsKccaParams s;
  s.alpha_x = s.alpha_y = s.gamma_x = s.gamma_y = 0.0;
  const Kernel kern = Kernel::rbf(2.0);
  const KernelModel ss = fit_sskcca(kern, p.x, p.y, Matrix(0, 3), 2, true, s);
  const KernelModel kc = fit_kernel(KernelMethod::KCCA, kern, p.x, p.y, 2, true);
  EXPECT_LT(max_abs(ss.eigenvalues - kc.eigenvalues), 1e-6);
  EXPECT_LT(signed_diff(ss.transform(p.x), kc.transform(p.x)), 1e-5);
}

TEST(SsKcca, TikhonovPathAndBounds) {
  const Problem p = random_problem(20, 2, 1, 43);
  const Matrix xu = randn(30, 2, 44);
  SsKccaParams s;
  s.gamma_x = s.gamma_y = 0.0;
  s.alpha_x = 0.1;
  const KernelModel m = fit_sskcca(Kernel::rbf(1.0), p.x, p.y, xu, 1, true, s);
  EXPECT_EQ(m.a.rows(), 50);
  EXPECT_GE(m.eigenvalues(0), 0.0);
  EXPECT_LE(m.eigenvalues(0), 1.0 + 1e-6);
  const KernelModel g = fit_sskcca(Kernel::rbf(1.0), p.x, p.y, xu, 1, true, {});
  EXPECT_LE(g.eigenvalues(0), 1.0 + 1e-6);
  EXPECT_EQ(g.transform(xu).rows(), 30);
}

TEST(SsKcca, TwoMoonsSemisupervisionHelps) {
  std::vector<int> cls_u, cls_t;
  const Matrix xu = two_moons(200, 0.05, 51, cls_u);
  const Matrix xt = two_moons(200, 0.05, 52, cls_t);
  // two labelled points per moon
  Matrix xl(4, 2);
  xl << -1.0, 0.0, 0.0, 1.0, 1.0, 0.5, 2.0, -0.5;
  const std::vector<int> cls_l{0, 0, 1, 1};
  const Matrix yl = one_hot(cls_l, 2);
  const Kernel kern = Kernel::rbf(0.3);
  SsKccaParams on;
  on.gamma_x = 10.0;
  on.gamma_y = 0.0;
  on.alpha_x = 1e-3;
  SsKccaParams off = on;
  off.gamma_x = 0.0;
  const Vector yt = one_hot(cls_t, 2).col(1);
  const double c_on = std::abs(corr(fit_sskcca(kern, xl, yl, xu, 1, false, on).transform(xt).col(0), yt));
  const double c_off = std::abs(corr(fit_sskcca(kern, xl, yl, xu, 1, false, off).transform(xt).col(0), yt));
  EXPECT_GT(c_on, c_off + 0.2);
  EXPECT_GT(c_on, 0.6);
}

TEST(ClusterKmva, BetaEndpoints) {
  const Problem p = random_problem(30, 2, 2, 61);
  const Matrix xu = randn(40, 2, 62);
  ClusterKmvaParams cp;
  cp.beta = 1.0;
  cp.sigma = 1.2;
  const KernelModel a = fit_cluster_kernel_kmva(KernelMethod::KOPLS, p.x, p.y, xu, 2, true, cp);
  const KernelModel b = fit_kernel(KernelMethod::KOPLS, Kernel::rbf(1.2), p.x, p.y, 2, true);
  EXPECT_LT(max_abs(a.eigenvalues - b.eigenvalues), 1e-12);
  EXPECT_LT(max_abs(a.transform(xu) - b.transform(xu)), 1e-10);

  cp.beta = 0.0;
  const KernelModel c = fit_cluster_kernel_kmva(KernelMethod::KPCA, p.x, p.y, xu, 1, true, cp);
  auto [xs, st] = center_fit_apply(p.x, true);
  const Matrix kc = cluster_kernel_eval(*c.kernel.cluster_model(), xs, xs);
  EXPECT_LT(max_abs(c.kernel.gram(xs, xs) - kc), 1e-15);
  cp.sigma = 50.0;
  const KernelModel d = fit_cluster_kernel_kmva(KernelMethod::KPCA, p.x, p.y, xu, 1, true, cp);
  EXPECT_LT(max_abs(d.eigenvalues - c.eigenvalues), 1e-12);
}

TEST(ClusterKmva, TwoBlobsFewLabels) {
  const Index per = 100;
  auto make = [&](std::uint64_t seed, std::vector<std::string>& labels) {
    Matrix x = randn(2 * per, 2, seed);
    x.col(0) *= 3.0;
    x.col(1) *= 0.4;
    x.bottomRows(per).col(1).array() += 2.5;
    labels.clear();
    for (Index i = 0; i < 2 * per; ++i) labels.push_back(i < per ? "a" : "b");
    return x;
  };
  std::vector<std::string> lu, lt;
  const Matrix xu = make(71, lu);
  const Matrix xt = make(72, lt);
  std::vector<Index> pick{0, 1, per, per + 1};
  const Matrix xl = take_rows(xu, pick);
  const std::vector<std::string> ll{lu[0], lu[1], lu[per], lu[per + 1]};
  const LabelEncoding enc = encode_labels(ll);
  auto oa = [&](double beta) {
    ClusterKmvaParams cp;
    cp.beta = beta;
    cp.seed = 5;
    cp.sigma = 1.0;
    const KernelModel m = fit_cluster_kernel_kmva(KernelMethod::KOPLS, xl, enc.indicator, xu, 1, false, cp);
    const LSHead h = fit_ls_classifier(m.transform(xl), enc);
    return evaluate_labels(predict_labels(h, m.transform(xt)), lt).value;
  };
  const double semi = oa(0.5);
  const double sup = oa(1.0);
  EXPECT_GE(semi, sup);
  EXPECT_GT(semi, 90.0);
}
