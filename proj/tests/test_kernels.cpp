#include "mvak/error.hpp"
#include "mvak/kernels.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace mvak;
using mvak::testing::max_abs;
using mvak::testing::randn;

namespace {

double min_eig(const Matrix& k) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(k, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

Matrix blobs(Index per, double gap, std::uint64_t seed) {
  Matrix x = 0.3 * randn(2 * per, 2, seed);
  x.bottomRows(per).array() += gap;
  return x;
}

}  // namespace

TEST(Gram, Examples) {
  const Matrix i2 = Matrix::Identity(2, 2);
  EXPECT_EQ(Kernel::linear().gram(i2, i2), i2);
  Matrix p(2, 1);
  p << 0, 2;
  const Matrix k = Kernel::rbf(1.0).gram(p, p);
  EXPECT_DOUBLE_EQ(k(0, 0), 1.0);
  EXPECT_NEAR(k(0, 1), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(k(0, 1), 0.13534, 1e-5);
  EXPECT_THROW(Kernel::rbf(0.0), UsageError);
  EXPECT_THROW(Kernel::rbf(-1.0), UsageError);
  Matrix bad = p;
  bad(0, 0) = INFINITY;
  EXPECT_THROW(Kernel::rbf(1.0).gram(bad, p), DataError);
  EXPECT_THROW(Kernel::linear().gram(p, i2), UsageError);
  KernelConfig cfg;
  EXPECT_THROW(gram(cfg, p, p), UsageError);
  cfg.sigma = 1.0;
  EXPECT_EQ(gram(cfg, p, p), k);
}

TEST(Gram, SymmetricPsdAndInvariant) {
  const Matrix x = randn(40, 3, 1);
  const Matrix k = Kernel::rbf(1.3).gram(x, x);
  EXPECT_LT(max_abs(k - k.transpose()), 1e-12);
  EXPECT_GT(min_eig(k), -1e-8 * k.trace() / 40.0);
  const Matrix shifted = x.rowwise() + Eigen::RowVector3d(5, -2, 7);
  EXPECT_LT(max_abs(Kernel::rbf(1.3).gram(shifted, shifted) - k), 1e-12);
  const Eigen::HouseholderQR<Matrix> qr(randn(3, 3, 2));
  const Matrix rot = x * Matrix(qr.householderQ());
  EXPECT_LT(max_abs(Kernel::rbf(1.3).gram(rot, rot) - k), 1e-12);
}

TEST(Median, Examples) {
  Matrix a(3, 1);
  a << 0, 1, 3;
  EXPECT_DOUBLE_EQ(median_bandwidth(a), 2.0);
  Matrix b(2, 1);
  b << 0, 5;
  EXPECT_DOUBLE_EQ(median_bandwidth(b), 5.0);
  Matrix c(4, 1);
  c << 0, 1, 3, 7;  // distances 1 2 3 4 6 7
  EXPECT_DOUBLE_EQ(median_bandwidth(c), 3.5);
  EXPECT_THROW(median_bandwidth(Matrix::Ones(5, 2)), DataError);
}

TEST(Median, SubsamplesDeterministically) {
  const Matrix x = randn(6000, 2, 8);
  const double s1 = median_bandwidth(x, 3);
  EXPECT_EQ(s1, median_bandwidth(x, 3));
  EXPECT_NEAR(s1, 2.0 * std::sqrt(std::log(2.0)), 0.05);
}

TEST(Center, TrainExamples) {
  EXPECT_LT(max_abs(center_train(Matrix::Ones(2, 2)).k), 1e-15);
  Matrix k(2, 2);
  k << 2, 0, 0, 2;
  Matrix want(2, 2);
  want << 1, -1, -1, 1;
  EXPECT_LT(max_abs(center_train(k).k - want), 1e-15);
  const Matrix x = randn(25, 3, 4);
  const GramMatrix g = center_train(Kernel::rbf(1.0).gram(x, x));
  EXPECT_LT(g.k.rowwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(g.k.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(max_abs(center_train(g.k).k - g.k), 1e-12);
  EXPECT_GT(min_eig(g.k), -1e-8 * g.k.trace() / 25.0);
}

TEST(Center, TestRows) {
  const Matrix x = randn(20, 3, 6);
  const Matrix k = Kernel::rbf(1.5).gram(x, x);
  const GramMatrix g = center_train(k);
  const Matrix rows = center_test(k.topRows(3), g.stats);
  EXPECT_LT(max_abs(rows - g.k.topRows(3)), 1e-12);

  // linear oracle: centre raw data explicitly
  const Matrix xt = randn(5, 3, 7);
  const Vector mu = x.colwise().mean().transpose();
  const GramCentering lin_stats = center_train(x * x.transpose()).stats;
  const Matrix lin = center_test(Kernel::linear().gram(xt, x), lin_stats);
  const Matrix oracle = (xt.rowwise() - mu.transpose()) * (x.rowwise() - mu.transpose()).transpose();
  EXPECT_LT(max_abs(lin - oracle), 1e-10);
  Matrix at_mean = mu.transpose();
  EXPECT_LT(max_abs(center_test(Kernel::linear().gram(at_mean, x), lin_stats)), 1e-10);
  EXPECT_THROW(center_test(Matrix::Ones(2, 3), g.stats), UsageError);
}

TEST(Cluster, BlobsGiveConfidentPosteriors) {
  const Matrix x = blobs(40, 6.0, 3);
  const ClusterModel m = cluster_kernel_fit(x, 1, 1, 5);
  ASSERT_EQ(m.mixtures.size(), 1u);
  EXPECT_EQ(m.mixtures[0].components(), 2);
  const Matrix post = m.mixtures[0].posteriors(x);
  EXPECT_LT((post.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_GE(post.minCoeff(), 0.0);
  for (Index i = 0; i < x.rows(); ++i) EXPECT_GT(post.row(i).maxCoeff(), 0.99);
  const Matrix kc = cluster_kernel_eval(m, x, x);
  EXPECT_GT(kc(0, 1), 0.98);
  EXPECT_LT(kc(0, 79), 0.02);
  EXPECT_THROW(cluster_kernel_fit(x.topRows(3), 1, 5, 0), UsageError);
}

TEST(Cluster, CountsDeterminismAndPsd) {
  const Matrix x = randn(60, 2, 9);
  const ClusterModel a = cluster_kernel_fit(x, 2, 3, 11);
  const ClusterModel b = cluster_kernel_fit(x, 2, 3, 11);
  ASSERT_EQ(a.mixtures.size(), 6u);
  for (int gi = 0; gi < 3; ++gi) EXPECT_EQ(a.mixtures[static_cast<std::size_t>(gi)].components(), gi + 2);
  const Matrix ka = cluster_kernel_eval(a, x, x);
  EXPECT_EQ(ka, cluster_kernel_eval(b, x, x));
  EXPECT_GE(ka.minCoeff(), 0.0);
  EXPECT_LE(ka.maxCoeff(), 1.0 + 1e-12);
  EXPECT_GT(min_eig(ka), -1e-10);
}

TEST(Cluster, HalfHalfPosteriorGivesHalf) {
  // two identical equally weighted components: every posterior is (0.5, 0.5)
  ClusterModel m;
  GaussianMixture g;
  g.weights = Vector::Constant(2, 0.5);
  g.means = Matrix::Zero(2, 1);
  g.chol = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  m.mixtures.push_back(g);
  Matrix a(2, 1);
  a << -1, 2;
  const Matrix k = cluster_kernel_eval(m, a, a);
  EXPECT_NEAR(k(0, 1), 0.5, 1e-12);
}

TEST(Composite, Endpoints) {
  const Matrix ks = Matrix::Identity(2, 2);
  const Matrix kc = Matrix::Ones(2, 2);
  EXPECT_EQ(composite_kernel(ks, kc, 1.0), ks);
  EXPECT_EQ(composite_kernel(ks, kc, 0.0), kc);
  Matrix want(2, 2);
  want << 1, 0.5, 0.5, 1;
  EXPECT_EQ(composite_kernel(ks, kc, 0.5), want);
  EXPECT_THROW(composite_kernel(ks, Matrix::Ones(3, 3), 0.5), UsageError);
  EXPECT_THROW(composite_kernel(ks, kc, 1.5), UsageError);
}

TEST(Composite, ResolvedKernelMatchesParts) {
  const Matrix x = blobs(20, 5.0, 4);
  KernelConfig cfg;
  cfg.family = KernelFamily::Composite;
  cfg.sigma = 1.0;
  cfg.beta = 0.3;
  const Kernel k = resolve_kernel(cfg, x);
  const Matrix want = 0.3 * Kernel::rbf(1.0).gram(x, x) +
                      0.7 * cluster_kernel_eval(*k.cluster_model(), x, x);
  EXPECT_LT(max_abs(k.gram(x, x) - want), 1e-14);
  EXPECT_EQ(k.gram(x, x), k.gram_serial(x, x));
  cfg.beta = 2.0;
  EXPECT_THROW(resolve_kernel(cfg, x), UsageError);
}

TEST(Laplacian, Examples) {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  Matrix want(2, 2);
  want << 1, -1, -1, 1;
  EXPECT_LT(max_abs(graph_laplacian(m) - want), 1e-15);
  const Matrix k3 = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  const Matrix l3 = graph_laplacian(k3);
  EXPECT_LT(max_abs(l3.diagonal() - Vector::Ones(3)), 1e-15);
  EXPECT_NEAR(l3(0, 1), -0.5, 1e-15);
  Matrix iso = k3;
  iso.row(2).setZero();
  iso.col(2).setZero();
  EXPECT_THROW(graph_laplacian(iso), DataError);
}

TEST(Laplacian, PsdAndNullVector) {
  const Matrix x = randn(30, 2, 12);
  const Matrix w = knn_rbf_graph(x, 5, 1.0);
  EXPECT_LT(max_abs(w - w.transpose()), 1e-15);
  EXPECT_EQ(w.diagonal(), Vector::Zero(30));
  const Matrix lap = graph_laplacian(w);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(lap);
  EXPECT_GT(es.eigenvalues()(0), -1e-10);
  EXPECT_LT(es.eigenvalues()(29), 2.0 + 1e-10);
  const Vector dsqrt = w.rowwise().sum().cwiseSqrt();
  EXPECT_LT((lap * dsqrt).cwiseAbs().maxCoeff(), 1e-8);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Vector v = randn(30, 1, 100 + s);
    EXPECT_GE(v.dot(lap * v), -1e-10);
  }
}
