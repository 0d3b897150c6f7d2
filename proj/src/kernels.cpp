#include "mvak/kernels.hpp"

#include "mvak/data.hpp"
#include "mvak/error.hpp"
#include "mvak/parallel.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mvak {

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Linear: return "linear";
    case KernelFamily::Rbf: return "rbf";
    case KernelFamily::Cluster: return "cluster";
    case KernelFamily::Composite: return "composite";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view s) {
  if (s == "linear") return KernelFamily::Linear;
  if (s == "rbf") return KernelFamily::Rbf;
  if (s == "cluster") return KernelFamily::Cluster;
  if (s == "composite") return KernelFamily::Composite;
  throw UsageError("unknown kernel '" + std::string(s) +
                   "' (expected linear, rbf, cluster, composite)");
}

void KernelConfig::validate() const {
  if (sigma && !(*sigma > 0.0)) throw UsageError("kernel sigma must be > 0");
  if (family == KernelFamily::Composite && !(beta >= 0.0 && beta <= 1.0))
    throw UsageError("composite beta must lie in [0, 1]");
  if ((family == KernelFamily::Cluster || family == KernelFamily::Composite) &&
      (q < 1 || g < 1))
    throw UsageError("cluster kernel needs Q >= 1 and G >= 1");
}

// ---------------------------------------------------------------- GMM / EM

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log N(x | mean, L L^T) for every row of a
Vector log_gaussian(const Matrix& a, const Vector& mean, const Matrix& chol) {
  const Index d = a.cols();
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  Matrix centered = (a.rowwise() - mean.transpose()).transpose();  // d x n
  chol.triangularView<Eigen::Lower>().solveInPlace(centered);
  const Vector maha = centered.colwise().squaredNorm().transpose();
  return (-0.5 * (maha.array() + log_det + static_cast<double>(d) * kLog2Pi)).matrix();
}

// log of unnormalized responsibilities: n x k
Matrix log_joint(const GaussianMixture& gm, const Matrix& a) {
  Matrix lj(a.rows(), gm.components());
  for (Index c = 0; c < gm.components(); ++c)
    lj.col(c) = log_gaussian(a, gm.means.row(c).transpose(), gm.chol[static_cast<std::size_t>(c)]).array() +
                std::log(std::max(gm.weights(c), 1e-300));
  return lj;
}

// in-place row softmax; returns per-row log normalizers
Vector normalize_rows(Matrix& lj) {
  Vector lse(lj.rows());
  for (Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    const double s = (lj.row(i).array() - mx).exp().sum();
    lse(i) = mx + std::log(s);
    lj.row(i) = (lj.row(i).array() - lse(i)).exp();
  }
  return lse;
}

struct EmResult {
  GaussianMixture mixture;
  int resets = 0;
};

Matrix kmeanspp_centers(const Matrix& x, Index k, std::mt19937_64& rng) {
  const Index n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  centers.row(0) = x.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      double u = unif(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        u -= d2(pick);
        if (u <= 0.0) break;
      }
    } else {
      pick = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

bool factor_covariance(Matrix cov, const Vector& floor, Matrix& chol) {
  cov.diagonal() += floor;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) {
      chol = llt.matrixL();
      return attempt == 0;
    }
    cov.diagonal() += floor * std::pow(10.0, attempt + 1);
  }
  return false;
}

EmResult fit_gmm(const Matrix& x, Index k, std::uint64_t seed) {
  const Index n = x.rows();
  const Index d = x.cols();
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-7;
  constexpr int kMaxResets = 25;

  std::mt19937_64 rng(seed);
  const Vector global_mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - global_mean.transpose();
  Vector var = xc.colwise().squaredNorm().transpose() / static_cast<double>(std::max<Index>(n - 1, 1));
  for (Index j = 0; j < d; ++j)
    if (!(var(j) > 0.0)) var(j) = 1.0;
  const Vector floor = 1e-6 * var;
  const Matrix global_cov = Matrix(var.asDiagonal());

  EmResult res;
  GaussianMixture& gm = res.mixture;
  gm.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  gm.means = kmeanspp_centers(x, k, rng);
  gm.chol.assign(static_cast<std::size_t>(k), Matrix());

  // hard assignment to the seeded centers gives the initial covariances
  Matrix resp = Matrix::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    (gm.means.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
    resp(i, best) = 1.0;
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < kMaxIter; ++it) {
    // M-step
    const Vector nk = resp.colwise().sum().transpose();
    for (Index c = 0; c < k; ++c) {
      bool degenerate = nk(c) < 1e-8 * static_cast<double>(n) + 1e-12;
      if (!degenerate) {
        gm.weights(c) = nk(c) / static_cast<double>(n);
        gm.means.row(c) = (resp.col(c).transpose() * x) / nk(c);
        const Matrix dc = x.rowwise() - gm.means.row(c);
        const Matrix cov = (dc.transpose() * resp.col(c).asDiagonal() * dc) / nk(c);
        Matrix chol;
        degenerate = !factor_covariance(cov, floor, chol) && !chol.size();
        if (!degenerate) gm.chol[static_cast<std::size_t>(c)] = chol;
      }
      if (degenerate) {
        if (++res.resets > kMaxResets)
          throw NumericalError("EM: mixture component degenerates persistently");
        gm.means.row(c) = x.row(static_cast<Index>(rng() % static_cast<std::uint64_t>(n)));
        Matrix chol;
        factor_covariance(global_cov, floor, chol);
        gm.chol[static_cast<std::size_t>(c)] = chol;
        gm.weights(c) = 1.0 / static_cast<double>(k);
      }
    }
    gm.weights /= gm.weights.sum();

    // E-step
    resp = log_joint(gm, x);
    const Vector lse = normalize_rows(resp);
    const double ll = lse.mean();
    gm.iterations = it + 1;
    gm.log_likelihood = ll;
    if (std::abs(ll - prev_ll) <= kTol * std::max(1.0, std::abs(ll))) break;
    prev_ll = ll;
  }
  return res;
}

}  // namespace

Matrix GaussianMixture::posteriors(const Matrix& a) const {
  Matrix lj = log_joint(*this, a);
  normalize_rows(lj);
  return lj;
}

Matrix ClusterModel::embedding(const Matrix& a) const {
  Index width = 0;
  for (const auto& m : mixtures) width += m.components();
  Matrix out(a.rows(), width);
  const double z = static_cast<double>(q) * static_cast<double>(g);
  const double s = 1.0 / std::sqrt(z);
  Index col = 0;
  for (const auto& m : mixtures) {
    out.middleCols(col, m.components()) = s * m.posteriors(a);
    col += m.components();
  }
  return out;
}

ClusterModel cluster_kernel_fit(const Matrix& x_all, int q, int g,
                                std::uint64_t seed) {
  if (q < 1 || g < 1) throw UsageError("cluster kernel needs Q >= 1 and G >= 1");
  if (x_all.rows() < g + 1) {
    std::ostringstream os;
    os << "cluster kernel: " << x_all.rows() << " samples cannot support "
       << (g + 1) << " clusters";
    throw UsageError(os.str());
  }
  if (!x_all.allFinite()) throw DataError("cluster kernel: non-finite inputs");
  ClusterModel model;
  model.q = q;
  model.g = g;
  model.mixtures.resize(static_cast<std::size_t>(q) * static_cast<std::size_t>(g));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) collapse(2)
  for (int qi = 0; qi < q; ++qi)
    for (int gi = 0; gi < g; ++gi) {
      const std::uint64_t s = seed * 1000003ULL + static_cast<std::uint64_t>(qi) * 7919ULL +
                              static_cast<std::uint64_t>(gi) * 104729ULL + 17ULL;
      try {
        model.mixtures[static_cast<std::size_t>(qi * g + gi)] =
            fit_gmm(x_all, gi + 2, s).mixture;
      } catch (...) {
#pragma omp critical(mvak_cluster_fit)
        if (!failure) failure = std::current_exception();
      }
    }
  if (failure) std::rethrow_exception(failure);
  return model;
}

Matrix cluster_kernel_eval(const ClusterModel& model, const Matrix& a,
                           const Matrix& b) {
  const Matrix ea = model.embedding(a);
  const Matrix eb = model.embedding(b);
  return ea * eb.transpose();
}

Matrix composite_kernel(const Matrix& k_s, const Matrix& k_c, double beta) {
  if (k_s.rows() != k_c.rows() || k_s.cols() != k_c.cols())
    throw UsageError("composite kernel: shape mismatch");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw UsageError("composite kernel: beta must lie in [0, 1]");
  if (beta == 1.0) return k_s;
  if (beta == 0.0) return k_c;
  return beta * k_s + (1.0 - beta) * k_c;
}

// ---------------------------------------------------------------- Kernel

Kernel Kernel::linear() { return Kernel{}; }

Kernel Kernel::rbf(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw UsageError("RBF sigma must be a positive finite number");
  Kernel k;
  k.family_ = KernelFamily::Rbf;
  k.sigma_ = sigma;
  return k;
}

Kernel Kernel::cluster(std::shared_ptr<const ClusterModel> model) {
  if (!model) throw UsageError("cluster kernel requires a fitted model");
  Kernel k;
  k.family_ = KernelFamily::Cluster;
  k.beta_ = 0.0;
  k.cluster_ = std::move(model);
  return k;
}

Kernel Kernel::composite(double sigma, double beta,
                         std::shared_ptr<const ClusterModel> model) {
  if (!model) throw UsageError("composite kernel requires a fitted model");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw UsageError("composite beta must lie in [0, 1]");
  Kernel k = rbf(sigma);
  k.family_ = KernelFamily::Composite;
  k.beta_ = beta;
  k.cluster_ = std::move(model);
  return k;
}

Matrix Kernel::gram(const Matrix& a, const Matrix& b) const {
  if (a.cols() != b.cols()) throw UsageError("gram: column counts differ");
  if (!a.allFinite() || !b.allFinite())
    throw DataError("gram: non-finite entries");
  switch (family_) {
    case KernelFamily::Linear: return a * b.transpose();
    case KernelFamily::Rbf: return par::rbf_gram(a, b, sigma_);
    case KernelFamily::Cluster: return cluster_kernel_eval(*cluster_, a, b);
    case KernelFamily::Composite:
      return composite_kernel(par::rbf_gram(a, b, sigma_),
                              cluster_kernel_eval(*cluster_, a, b), beta_);
  }
  return {};
}

Matrix Kernel::gram_serial(const Matrix& a, const Matrix& b) const {
  switch (family_) {
    case KernelFamily::Rbf: return par::rbf_gram_serial(a, b, sigma_);
    case KernelFamily::Composite:
      return composite_kernel(par::rbf_gram_serial(a, b, sigma_),
                              cluster_kernel_eval(*cluster_, a, b), beta_);
    default: return gram(a, b);
  }
}

Kernel resolve_kernel(const KernelConfig& cfg, const Matrix& train,
                      const Matrix* unlabeled) {
  cfg.validate();
  auto sigma = [&] { return cfg.sigma ? *cfg.sigma : median_bandwidth(train, cfg.seed); };
  auto fit_cluster = [&] {
    Matrix all = train;
    if (unlabeled && unlabeled->rows() > 0) {
      all.resize(train.rows() + unlabeled->rows(), train.cols());
      all << train, *unlabeled;
    }
    return std::make_shared<const ClusterModel>(
        cluster_kernel_fit(all, cfg.q, cfg.g, cfg.seed));
  };
  switch (cfg.family) {
    case KernelFamily::Linear: return Kernel::linear();
    case KernelFamily::Rbf: return Kernel::rbf(sigma());
    case KernelFamily::Cluster: return Kernel::cluster(fit_cluster());
    case KernelFamily::Composite:
      return Kernel::composite(sigma(), cfg.beta, fit_cluster());
  }
  throw UsageError("unknown kernel family");
}

Matrix gram(const KernelConfig& cfg, const Matrix& a, const Matrix& b) {
  cfg.validate();
  switch (cfg.family) {
    case KernelFamily::Linear: return Kernel::linear().gram(a, b);
    case KernelFamily::Rbf:
      if (!cfg.sigma) throw UsageError("gram: sigma must be resolved first");
      return Kernel::rbf(*cfg.sigma).gram(a, b);
    default:
      throw UsageError("gram: cluster kernels need a fitted model (use resolve_kernel)");
  }
}

// ---------------------------------------------------------------- utilities

double median_bandwidth(const Matrix& a, std::uint64_t seed) {
  if (a.rows() < 2) throw DataError("median bandwidth needs at least 2 rows");
  constexpr Index kMaxRows = 5000;
  Matrix sample;
  const Matrix* src = &a;
  if (a.rows() > kMaxRows) {
    auto perm = seeded_permutation(a.rows(), seed);
    perm.resize(static_cast<std::size_t>(kMaxRows));
    std::sort(perm.begin(), perm.end());
    sample = take_rows(a, perm);
    src = &sample;
  }
  std::vector<double> dist = par::pairwise_distances(*src);
  const std::size_t n = dist.size();
  const std::size_t mid = n / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  if (!(med > 0.0))
    throw DataError("median pairwise distance is 0 (duplicated rows); set sigma explicitly");
  return med;
}

GramMatrix center_train(const Matrix& k) {
  if (k.rows() != k.cols()) throw UsageError("center_train: Gram must be square");
  GramMatrix out;
  out.centered = true;
  out.stats.col_means = k.colwise().mean().transpose();
  out.stats.grand_mean = out.stats.col_means.mean();
  const Vector row_means = k.rowwise().mean();
  out.k = k;
  out.k.rowwise() -= out.stats.col_means.transpose();
  out.k.colwise() -= row_means;
  out.k.array() += out.stats.grand_mean;
  out.k = 0.5 * (out.k + out.k.transpose()).eval();
  return out;
}

Matrix center_test(const Matrix& k_test, const GramCentering& stats) {
  if (k_test.cols() != stats.size()) {
    std::ostringstream os;
    os << "center_test: test Gram has " << k_test.cols()
       << " columns, training Gram has " << stats.size();
    throw UsageError(os.str());
  }
  const Vector row_means = k_test.rowwise().mean();
  Matrix out = k_test;
  out.rowwise() -= stats.col_means.transpose();
  out.colwise() -= row_means;
  out.array() += stats.grand_mean;
  return out;
}

Matrix graph_laplacian(const Matrix& m) {
  if (m.rows() != m.cols()) throw UsageError("graph_laplacian: matrix must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw UsageError("graph_laplacian: similarity matrix must be symmetric");
  if (m.minCoeff() < 0.0)
    throw UsageError("graph_laplacian: similarities must be non-negative");
  const Vector deg = m.rowwise().sum();
  for (Index i = 0; i < deg.size(); ++i)
    if (!(deg(i) > 0.0)) {
      std::ostringstream os;
      os << "graph_laplacian: vertex " << i << " is isolated";
      throw DataError(os.str());
    }
  const Vector inv_sqrt = deg.array().rsqrt();
  Matrix lap = -m;
  lap.diagonal() += deg;
  lap = inv_sqrt.asDiagonal() * lap * inv_sqrt.asDiagonal();
  return 0.5 * (lap + lap.transpose());
}

Matrix knn_rbf_graph(const Matrix& x, int k, double sigma) {
  const Index n = x.rows();
  if (k < 1) throw UsageError("knn graph: k must be >= 1");
  const Matrix w = par::rbf_gram(x, x, sigma);
  Matrix d2(n, n);
  for (Index i = 0; i < n; ++i)
    d2.row(i) = (x.rowwise() - x.row(i)).rowwise().squaredNorm().transpose();
  Matrix graph = Matrix::Zero(n, n);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  const Index kk = std::min<Index>(k, n - 1);
  for (Index i = 0; i < n; ++i) {
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index p, Index r) {
      if (p == i) return false;
      if (r == i) return true;
      return d2(i, p) < d2(i, r);
    });
    for (Index t = 0; t < kk; ++t) {
      const Index j = idx[static_cast<std::size_t>(t)];
      // floor keeps far-away neighbours connected for tiny sigma
      const double wij = std::max(w(i, j), 1e-300);
      graph(i, j) = wij;
      graph(j, i) = wij;
    }
  }
  return graph;
}

}  // namespace mvak
