#include "mvak/extensions.hpp"

#include "mvak/error.hpp"
#include "mvak/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvak {

namespace {

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

Index clamp_features(Index n_f, Index cap, const char* what,
                     std::vector<std::string>& warnings) {
  if (n_f <= cap) return n_f;
  std::ostringstream os;
  os << "n_f=" << n_f << " exceeds " << what << "=" << cap << "; clamped";
  warnings.push_back(os.str());
  return cap;
}

// Shared tail of kPLS-style extractors: maps per-direction dual weights of
// the deflated problem to coefficients applied to the original centered Gram.
Matrix deflated_to_dual(const Matrix& k0, const Matrix& weights, const Matrix& scores,
                        const Vector& norms) {
  const Matrix tkw = scores.transpose() * k0 * weights;
  return weights * tkw.inverse() * norms.asDiagonal();
}

void deflate(Matrix& k, const Vector& t) {
  const Vector kt = k * t;
  const double tkt = t.dot(kt);
  k -= kt * t.transpose() + t * kt.transpose();
  k += tkt * t * t.transpose();
}

}  // namespace

std::string to_string(ReducedMethod m) {
  switch (m) {
    case ReducedMethod::RKPCA: return "rkpca";
    case ReducedMethod::RKCCA: return "rkcca";
    case ReducedMethod::RKOPLS: return "rkopls";
  }
  return "?";
}

std::string to_string(SparseVariant v) {
  return v == SparseVariant::SMA ? "sma" : "smc";
}

// ------------------------------------------------------------ reduced set

Matrix ReducedSetModel::transform(const Matrix& x_raw) const {
  if (x_raw.cols() != input_dims())
    throw UsageError("transform: expected " + std::to_string(input_dims()) +
                     " columns, got " + std::to_string(x_raw.cols()));
  Matrix k = kernel.gram(x_stats.apply(x_raw), basis);
  k.rowwise() -= col_means.transpose();
  return k * beta;
}

ReducedSetModel fit_rk(ReducedMethod method, const Kernel& kernel,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const RkOptions& opts) {
  opts.solver.validate();
  const Index l = x_raw.rows();
  if (opts.r < 1) throw UsageError("fit_rk: r must be >= 1");
  if (opts.r > l)
    throw UsageError("fit_rk: r=" + std::to_string(opts.r) + " exceeds l=" +
                     std::to_string(l));
  if (n_f < 1) throw UsageError("fit_rk: n_f must be >= 1");
  if (!(opts.eta >= 0.0) || !std::isfinite(opts.eta))
    throw UsageError("fit_rk: eta must be a non-negative finite number");
  const bool supervised = method != ReducedMethod::RKPCA;
  if (supervised && y_raw.rows() != l)
    throw UsageError(to_string(method) + ": targets required with matching rows");

  ReducedSetModel m;
  m.method = method;
  m.eta = opts.eta;
  m.kernel = kernel;
  auto [xs, stats] = center_fit_apply(x_raw, standardize);
  m.x_stats = stats;

  const std::vector<Index> perm = seeded_permutation(l, opts.seed);
  m.basis_indices.assign(perm.begin(), perm.begin() + opts.r);
  std::sort(m.basis_indices.begin(), m.basis_indices.end());
  m.basis = take_rows(xs, m.basis_indices);

  Matrix yc(l, 0);
  if (supervised) std::tie(yc, m.y_stats) = center_fit_apply(y_raw, false);

  const auto acc = par::accumulate_reduced(
      l, opts.r, yc, opts.chunk,
      [&](Index start, Index len) { return kernel.gram(xs.middleRows(start, len), m.basis); });
  m.kernel_evaluations = acc.kernel_evaluations;
  const double ld = static_cast<double>(l);
  m.col_means = acc.col_sums / ld;
  // K_c^T K_c with K_c = K_lr - 1 col_means^T
  const Matrix kk = sym(acc.gram - ld * m.col_means * m.col_means.transpose());
  const Matrix krr = sym(kernel.gram(m.basis, m.basis));

  Matrix a;
  Matrix b;
  Matrix cy_pinv;
  SolverConfig solver = opts.solver;
  if (method == ReducedMethod::RKPCA) {
    a = kk;
    b = krr;
    if (estimate_rank(krr, solver.rank_tol) < opts.r) {
      solver.jitter = std::max(solver.jitter, 1e-10);
      m.warnings.emplace_back("rkpca: K_rr is rank deficient; jitter applied");
    }
    n_f = clamp_features(n_f, estimate_rank(kk, solver.rank_tol), "rank(K_rl)", m.warnings);
  } else {
    const Matrix cross = acc.cross / ld;
    const Index cap = estimate_rank(cross, solver.rank_tol);
    if (cap == 0)
      throw NumericalError(to_string(method) + ": K_rl Y is numerically zero");
    n_f = clamp_features(n_f, cap, "rank(K_rlY)", m.warnings);
    b = (kk + opts.eta * krr) / ld;
    if (method == ReducedMethod::RKCCA) {
      Matrix cy = yc.transpose() * yc / ld;
      cy.diagonal().array() += opts.eta / ld;
      cy_pinv = pinv(cy, solver.rank_tol);
      a = cross * cy_pinv * cross.transpose();
    } else {
      a = cross * cross.transpose();
    }
    if (estimate_rank(b, solver.rank_tol) < opts.r)
      m.warnings.emplace_back(to_string(method) + ": B is rank deficient; solved on its range");
  }
  EigResult e = eig_gen(a, b, n_f, solver);
  append(m.warnings, e.warnings);
  if (e.size() == 0) throw NumericalError(to_string(method) + ": zero-rank B");
  m.beta = e.vectors;
  switch (method) {
    case ReducedMethod::RKPCA:
      m.eigenvalues = e.values.cwiseMax(0.0) / ld;
      break;
    case ReducedMethod::RKCCA: {
      m.eigenvalues = e.values.cwiseMax(0.0).cwiseSqrt();
      m.v = cy_pinv * (acc.cross / ld).transpose() * m.beta;
      for (Index j = 0; j < m.v.cols(); ++j) {
        if (m.eigenvalues(j) > 1e-12)
          m.v.col(j) /= m.eigenvalues(j);
        else
          m.v.col(j).setZero();
      }
      break;
    }
    case ReducedMethod::RKOPLS:
      m.eigenvalues = e.values.cwiseMax(0.0);
      m.v = (acc.cross / ld).transpose() * m.beta;
      break;
  }
  return m;
}

ReducedSetModel fit_rk(ReducedMethod method, const KernelConfig& cfg,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const RkOptions& opts) {
  const Matrix xs = center_fit_apply(x_raw, standardize).first;
  return fit_rk(method, resolve_kernel(cfg, xs), x_raw, y_raw, n_f, standardize, opts);
}

// ------------------------------------------------------------ sparse PLS

Vector sparse_pls_objectives(SparseVariant variant, const Matrix& k, const Matrix& y) {
  if (k.rows() != k.cols() || k.rows() != y.rows())
    throw UsageError("sparse PLS: Gram and targets disagree in size");
  const Matrix ky = k * y;
  const double tiny = 1e-14 * std::max(k.cwiseAbs().maxCoeff(), 1e-300);
  Vector out(k.rows());
  for (Index i = 0; i < k.rows(); ++i) {
    const double denom =
        variant == SparseVariant::SMA ? k.col(i).norm() : std::sqrt(std::max(k(i, i), 0.0));
    out(i) = denom > tiny ? ky.row(i).norm() / denom : 0.0;
  }
  return out;
}

SparsePLSModel fit_sparse_pls(SparseVariant variant, const Matrix& k,
                              const Matrix& y, Index n_f, Index pool,
                              std::uint64_t seed) {
  const Index l = k.rows();
  if (k.cols() != l) throw UsageError("sparse PLS: Gram must be square");
  if (y.rows() != l) throw UsageError("sparse PLS: Gram and Y row counts differ");
  if (n_f < 1 || n_f > l) throw UsageError("sparse PLS: n_f must be in [1, l]");
  if (pool < 1 || pool > l) throw UsageError("sparse PLS: pool size must be in [1, l]");
  SparsePLSModel out;
  out.variant = variant;
  out.pool = pool;
  KernelModel& m = out.model;
  m.method = KernelMethod::KPLS2;

  const Matrix k0 = sym(k);
  Matrix kj = k0;
  Matrix weights(l, n_f), scores(l, n_f);
  Vector norms(n_f), scalars(n_f), objectives(n_f);
  Index got = 0;
  double first = 0.0;
  for (Index j = 0; j < n_f; ++j) {
    std::vector<Index> cand = seeded_permutation(l, seed + static_cast<std::uint64_t>(j));
    cand.resize(static_cast<std::size_t>(pool));
    std::sort(cand.begin(), cand.end());
    const Vector obj = sparse_pls_objectives(variant, kj, y);
    Index best = -1;
    double best_val = 0.0;
    for (Index c : cand)
      if (obj(c) > best_val) {
        best_val = obj(c);
        best = c;
      }
    const double floor = j == 0 ? 1e-300 : 1e-10 * first;
    if (best < 0 || !(best_val > floor)) {
      if (j == 0) throw NumericalError("sparse PLS: every candidate objective is zero");
      std::ostringstream os;
      os << "sparse PLS: objectives vanished after " << j << " directions; stopped early";
      m.warnings.push_back(os.str());
      break;
    }
    if (j == 0) first = best_val;
    const double b = variant == SparseVariant::SMA ? 1.0 / kj.col(best).norm()
                                                   : 1.0 / std::sqrt(kj(best, best));
    Vector t = kj.col(best) * b;
    const double tn = t.norm();
    t /= tn;
    Vector w = Vector::Zero(l);
    w(best) = b;
    if (j > 0) w -= scores.leftCols(j) * (scores.leftCols(j).transpose() * w);
    deflate(kj, t);
    weights.col(j) = w;
    scores.col(j) = t;
    norms(j) = tn;
    scalars(j) = b;
    objectives(j) = best_val;
    out.selected.push_back(best);
    ++got;
  }
  m.a = deflated_to_dual(k0, weights.leftCols(got), scores.leftCols(got), norms.head(got));
  m.dual_weights = weights.leftCols(got);
  m.eigenvalues = objectives.head(got);
  out.scalars = scalars.head(got);
  out.objectives = objectives.head(got);
  return out;
}

SparsePLSModel fit_sparse_pls(SparseVariant variant, const Kernel& kernel,
                              const Matrix& x_raw, const Matrix& y_raw,
                              Index n_f, Index pool, std::uint64_t seed,
                              bool standardize) {
  if (y_raw.rows() != x_raw.rows())
    throw UsageError("sparse PLS: targets required with matching rows");
  auto [xs, stats] = center_fit_apply(x_raw, standardize);
  auto [yc, ys] = center_fit_apply(y_raw, false);
  const GramMatrix g = center_train(kernel.gram(xs, xs));
  SparsePLSModel out = fit_sparse_pls(variant, g.k, yc, n_f, pool, seed);
  out.model.basis = xs;
  out.model.kernel = kernel;
  out.model.centering = g.stats;
  out.model.x_stats = stats;
  out.model.y_stats = ys;
  return out;
}

// ------------------------------------------------------------ ss-kCCA

KernelModel fit_sskcca_gram(const Matrix& k_nn, const Matrix& y, const Matrix& lap_x,
                            const Matrix& lap_y, Index n_f, const SsKccaParams& p) {
  p.solver.validate();
  const Index n = k_nn.rows();
  const Index l = y.rows();
  if (k_nn.cols() != n) throw UsageError("sskcca: Gram must be square");
  if (l < 2 || l > n) throw UsageError("sskcca: labeled rows must be in [2, n]");
  if (lap_x.rows() != n || lap_x.cols() != n)
    throw UsageError("sskcca: input Laplacian must be n x n");
  if (lap_y.rows() != l || lap_y.cols() != l)
    throw UsageError("sskcca: target Laplacian must be l x l");
  if (n_f < 1) throw UsageError("sskcca: n_f must be >= 1");
  for (double v : {p.alpha_x, p.alpha_y, p.gamma_x, p.gamma_y})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw UsageError("sskcca: regularization weights must be non-negative");

  KernelModel m;
  m.method = KernelMethod::SSKCCA;
  const double ld = static_cast<double>(l);
  const Matrix k = sym(k_nn);
  const Matrix k_nl = k.leftCols(l);
  const Matrix cross = k_nl * y / ld;
  const Index cap = estimate_rank(cross, p.solver.rank_tol);
  if (cap == 0) throw NumericalError("sskcca: K_nl Y is numerically zero");
  n_f = clamp_features(n_f, cap, "rank(K_xY)", m.warnings);

  Matrix bx = k_nl * k_nl.transpose();
  if (p.alpha_x > 0.0) bx += p.alpha_x * k;
  if (p.gamma_x > 0.0) bx += p.gamma_x * k * lap_x * k;
  bx = sym(bx) / ld;
  // Linear target kernel on labeled rows, reduced to target coordinates.
  const Matrix yty = y.transpose() * y;
  Matrix by = yty;
  by.diagonal().array() += p.alpha_y;
  if (p.gamma_y > 0.0) by += p.gamma_y * y.transpose() * lap_y * y;
  by = sym(by) / ld;

  const EigResult bx_eig = eig_sym(bx, 1);
  if (bx_eig.values(0) <= 0.0) throw NumericalError("sskcca: zero-rank B");
  SolverConfig solver = p.solver;
  const Eigen::SelfAdjointEigenSolver<Matrix> check(bx, Eigen::EigenvaluesOnly);
  if (check.eigenvalues()(0) < -1e-12 * bx_eig.values(0)) {
    solver.jitter = std::max(solver.jitter, 1e-10);
    m.warnings.emplace_back("sskcca: B is not PSD; jitter applied");
  }
  const Matrix by_pinv = pinv(by, solver.rank_tol);
  const Matrix a = cross * by_pinv * cross.transpose();
  EigResult e = eig_gen(a, bx, n_f, solver);
  append(m.warnings, e.warnings);
  if (e.size() == 0) throw NumericalError("sskcca: zero-rank B");
  m.a = e.vectors;
  m.eigenvalues = e.values.cwiseMax(0.0).cwiseSqrt();
  m.v = by_pinv * cross.transpose() * m.a;
  for (Index j = 0; j < m.v.cols(); ++j) {
    if (m.eigenvalues(j) > 1e-12)
      m.v.col(j) /= m.eigenvalues(j);
    else
      m.v.col(j).setZero();
  }
  return m;
}

KernelModel fit_sskcca(const Kernel& kernel, const Matrix& x_labeled,
                       const Matrix& y_labeled, const Matrix& x_unlabeled,
                       Index n_f, bool standardize, const SsKccaParams& params) {
  const Index l = x_labeled.rows();
  if (y_labeled.rows() != l) throw UsageError("sskcca: X and Y row counts differ");
  if (x_unlabeled.rows() > 0 && x_unlabeled.cols() != x_labeled.cols())
    throw UsageError("sskcca: labeled and unlabeled column counts differ");
  if (params.neighbors < 1) throw UsageError("sskcca: neighbors must be >= 1");
  auto [xl, stats] = center_fit_apply(x_labeled, standardize);
  Matrix all(l + x_unlabeled.rows(), x_labeled.cols());
  all.topRows(l) = xl;
  if (x_unlabeled.rows() > 0) all.bottomRows(x_unlabeled.rows()) = stats.apply(x_unlabeled);
  auto [yc, ys] = center_fit_apply(y_labeled, false);

  const GramMatrix g = center_train(kernel.gram(all, all));
  const bool need_x = params.gamma_x > 0.0;
  const bool need_y = params.gamma_y > 0.0;
  const Index n = all.rows();
  Matrix lap_x = Matrix::Zero(n, n);
  Matrix lap_y = Matrix::Zero(l, l);
  if (need_x)
    lap_x = graph_laplacian(knn_rbf_graph(all, params.neighbors,
                                          kernel.family() == KernelFamily::Rbf
                                              ? kernel.sigma()
                                              : median_bandwidth(all)));
  if (need_y) {
    // Identical targets (class indicators) share distance 0; the median
    // over distinct pairs may vanish, so fall back to unit width.
    double sy = 1.0;
    try {
      sy = median_bandwidth(yc);
    } catch (const DataError&) {
    }
    lap_y = graph_laplacian(knn_rbf_graph(yc, params.neighbors, sy));
  }
  KernelModel m = fit_sskcca_gram(g.k, yc, lap_x, lap_y, n_f, params);
  m.basis = all;
  m.kernel = kernel;
  m.centering = g.stats;
  m.x_stats = stats;
  m.y_stats = ys;
  return m;
}

// ------------------------------------------------------------ cluster kernel

KernelModel fit_cluster_kernel_kmva(KernelMethod method, const Matrix& x_labeled,
                                    const Matrix& y_labeled,
                                    const Matrix& x_unlabeled, Index n_f,
                                    bool standardize, const ClusterKmvaParams& p) {
  if (x_unlabeled.rows() > 0 && x_unlabeled.cols() != x_labeled.cols())
    throw UsageError("cluster kMVA: labeled and unlabeled column counts differ");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw UsageError("cluster kMVA: beta must be in [0, 1]");
  auto [xl, stats] = center_fit_apply(x_labeled, standardize);
  Matrix xu = x_unlabeled.rows() > 0 ? stats.apply(x_unlabeled) : Matrix(0, x_labeled.cols());
  Matrix all(xl.rows() + xu.rows(), xl.cols());
  all.topRows(xl.rows()) = xl;
  if (xu.rows() > 0) all.bottomRows(xu.rows()) = xu;
  auto model = std::make_shared<const ClusterModel>(cluster_kernel_fit(all, p.q, p.g, p.seed));
  const double sigma = p.sigma ? *p.sigma : median_bandwidth(xl, p.seed);
  const Kernel kernel = Kernel::composite(sigma, p.beta, std::move(model));
  return fit_kernel(method, kernel, x_labeled, y_labeled, n_f, standardize, p.fit);
}

}  // namespace mvak
