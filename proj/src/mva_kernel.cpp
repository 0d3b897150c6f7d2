#include "mvak/mva_kernel.hpp"

#include "mvak/dependence.hpp"
#include "mvak/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvak {

namespace {

void check_gram(const Matrix& k, const Matrix* y, Index n_f, const KernelFitOptions& opts) {
  if (k.rows() != k.cols()) throw UsageError("kernel fit: Gram must be square");
  if (k.rows() < 2) throw DataError("kernel fit: need at least two samples");
  if (!all_finite(k)) throw DataError("kernel fit: Gram has non-finite entries");
  if (n_f < 1) throw UsageError("kernel fit: n_f must be >= 1");
  if (!(opts.eta >= 0.0) || !std::isfinite(opts.eta))
    throw UsageError("kernel fit: eta must be a non-negative finite number");
  opts.solver.validate();
  if (y) {
    if (y->rows() != k.rows())
      throw UsageError("kernel fit: Gram and Y row counts differ");
    if (y->cols() < 1) throw DataError("kernel fit: Y has no columns");
    if (!all_finite(*y)) throw DataError("kernel fit: Y has non-finite entries");
  }
}

Index clamp_features(Index n_f, Index cap, const char* what,
                     std::vector<std::string>& warnings) {
  if (n_f <= cap) return n_f;
  std::ostringstream os;
  os << "n_f=" << n_f << " exceeds " << what << "=" << cap << "; clamped";
  warnings.push_back(os.str());
  return cap;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// kCCA / kOPLS share the reduced problem  A alpha = lambda (K^2 + eta K)/l alpha.
KernelModel fit_dual_generalized(KernelMethod method, const Matrix& k,
                                 const Matrix& y, Index n_f,
                                 const KernelFitOptions& opts) {
  check_gram(k, &y, n_f, opts);
  const bool cca = method == KernelMethod::KCCA;
  const char* name = cca ? "kCCA" : "kOPLS";
  KernelModel m;
  m.method = method;
  m.eta = opts.eta;
  const double l = static_cast<double>(k.rows());
  const Matrix ks = sym(k);
  const Matrix cross = ks * y / l;
  const Index cap = estimate_rank(cross, opts.solver.rank_tol);
  if (cap == 0)
    throw NumericalError(std::string(name) + ": K_x Y is numerically zero");
  n_f = clamp_features(n_f, cap, "rank(K_xY)", m.warnings);

  const Matrix b = (ks * ks + opts.eta * ks) / l;
  Matrix a;
  Matrix cy_pinv;
  if (cca) {
    Matrix cy = y.transpose() * y / l;
    cy.diagonal().array() += opts.eta / l;
    cy_pinv = pinv(cy, opts.solver.rank_tol);
    a = cross * cy_pinv * cross.transpose();
  } else {
    a = cross * cross.transpose();
  }
  EigResult e = eig_gen(a, b, n_f, opts.solver);
  append(m.warnings, e.warnings);
  if (e.size() == 0) throw NumericalError(std::string(name) + ": zero-rank B");
  m.a = e.vectors;
  if (cca) {
    m.eigenvalues = e.values.cwiseMax(0.0).cwiseSqrt();
    m.v = cy_pinv * cross.transpose() * m.a;
    for (Index j = 0; j < m.v.cols(); ++j) {
      const double rho = m.eigenvalues(j);
      if (rho > 1e-12)
        m.v.col(j) /= rho;
      else
        m.v.col(j).setZero();
    }
  } else {
    m.eigenvalues = e.values.cwiseMax(0.0);
    m.v = cross.transpose() * m.a;
  }
  return m;
}

}  // namespace

std::string to_string(KernelMethod m) {
  switch (m) {
    case KernelMethod::KPCA: return "kpca";
    case KernelMethod::KPLS2: return "kpls2";
    case KernelMethod::KCCA: return "kcca";
    case KernelMethod::KOPLS: return "kopls";
    case KernelMethod::HSCA: return "hsca";
    case KernelMethod::SSKCCA: return "sskcca";
  }
  return "?";
}

Matrix KernelModel::transform_gram(const Matrix& k_test) const {
  if (k_test.cols() != a.rows())
    throw UsageError("transform: test Gram has " + std::to_string(k_test.cols()) +
                     " columns, model expects " + std::to_string(a.rows()));
  if (centering.size() == 0) return k_test * a;
  return center_test(k_test, centering) * a;
}

Matrix KernelModel::transform(const Matrix& x_raw) const {
  if (!has_basis()) throw UsageError("transform: model keeps no training samples");
  if (x_raw.cols() != input_dims())
    throw UsageError("transform: expected " + std::to_string(input_dims()) +
                     " columns, got " + std::to_string(x_raw.cols()));
  return transform_gram(kernel.gram(x_stats.apply(x_raw), basis));
}

Matrix transform_kernel(const KernelModel& model, const Matrix& x_raw) {
  return model.transform(x_raw);
}

KernelModel fit_kpca(const Matrix& k, Index n_f, const KernelFitOptions& opts) {
  check_gram(k, nullptr, n_f, opts);
  KernelModel m;
  m.method = KernelMethod::KPCA;
  EigResult e = eig_sym(k, std::min<Index>(n_f, k.rows()), opts.solver);
  append(m.warnings, e.warnings);
  const double top = e.values(0);
  if (!(top > 0.0)) throw NumericalError("kPCA: centered Gram has no positive eigenvalue");
  Index keep = 0;
  while (keep < e.size() && e.values(keep) > opts.solver.rank_tol * top) ++keep;
  if (keep < n_f) {
    std::ostringstream os;
    os << "kPCA: only " << keep << " eigenvalues above rank tolerance; "
       << "returning " << keep << " of " << n_f << " features";
    m.warnings.push_back(os.str());
  }
  m.a = e.vectors.leftCols(keep);
  for (Index j = 0; j < keep; ++j) m.a.col(j) /= std::sqrt(e.values(j));
  m.eigenvalues = e.values.head(keep) / static_cast<double>(k.rows());
  return m;
}

KernelModel fit_kpls2(const Matrix& k, const Matrix& y, Index n_f,
                      const KernelFitOptions& opts) {
  check_gram(k, &y, n_f, opts);
  KernelModel m;
  m.method = KernelMethod::KPLS2;
  const Index l = k.rows();
  const double ld = static_cast<double>(l);
  const Matrix k0 = sym(k);
  const Index cap = estimate_rank(k0, opts.solver.rank_tol);
  if (cap == 0) throw NumericalError("kPLS2: centered Gram is numerically zero");
  n_f = clamp_features(n_f, cap, "rank(K_x)", m.warnings);

  Matrix kj = k0;
  Matrix yj = y;
  Matrix weights(l, n_f), scores(l, n_f), v(y.cols(), n_f);
  Vector cov(n_f), norms(n_f);
  const double scale = k0.norm() * y.squaredNorm();
  Index got = 0;
  for (Index j = 0; j < n_f; ++j) {
    const Matrix s = sym(yj.transpose() * kj * yj);
    const EigResult e = eig_sym(s, 1, opts.solver);
    const double mu = e.values(0);
    const double floor = j == 0 ? 1e-26 * scale : 1e-20 * cov(0) * cov(0) * ld * ld;
    if (!(mu > floor) || !(scale > 0.0)) {
      if (j == 0) throw NumericalError("kPLS2: K_x Y is numerically zero");
      std::ostringstream os;
      os << "kPLS2: K_x Y vanished after " << j << " directions; stopped early";
      m.warnings.push_back(os.str());
      break;
    }
    const Vector vj = e.vectors.col(0);
    const Vector alpha = yj * vj / std::sqrt(mu);
    Vector t = kj * alpha;
    const double tn = t.norm();
    if (!(tn > 0.0)) throw NumericalError("kPLS2: zero score vector");
    t /= tn;
    Vector adjusted = alpha;
    if (j > 0) adjusted -= scores.leftCols(j) * (scores.leftCols(j).transpose() * alpha);
    const Vector kt = kj * t;
    const double tkt = t.dot(kt);
    kj -= kt * t.transpose() + t * kt.transpose();
    kj += tkt * t * t.transpose();
    yj -= t * (t.transpose() * yj);
    weights.col(j) = adjusted;
    scores.col(j) = t;
    v.col(j) = vj;
    cov(j) = std::sqrt(mu) / ld;
    norms(j) = tn;
    ++got;
  }
  weights.conservativeResize(Eigen::NoChange, got);
  scores.conservativeResize(Eigen::NoChange, got);
  v.conservativeResize(Eigen::NoChange, got);
  const Matrix tkw = scores.transpose() * k0 * weights;
  m.a = weights * tkw.inverse() * norms.head(got).asDiagonal();
  m.dual_weights = weights;
  m.v = v;
  m.eigenvalues = cov.head(got);
  return m;
}

KernelModel fit_kcca(const Matrix& k, const Matrix& y, Index n_f,
                     const KernelFitOptions& opts) {
  return fit_dual_generalized(KernelMethod::KCCA, k, y, n_f, opts);
}

KernelModel fit_kopls(const Matrix& k, const Matrix& y, Index n_f,
                      const KernelFitOptions& opts) {
  return fit_dual_generalized(KernelMethod::KOPLS, k, y, n_f, opts);
}

KernelModel fit_kernel(KernelMethod method, const Kernel& kernel,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const KernelFitOptions& opts) {
  auto [basis, input] = center_fit_apply(x_raw, standardize);
  const GramMatrix g = center_train(kernel.gram(basis, basis));

  KernelModel m;
  CenteringStats ys;
  Matrix yc;
  if (method != KernelMethod::KPCA) {
    if (y_raw.rows() != x_raw.rows())
      throw UsageError(to_string(method) + ": targets required with matching rows");
    std::tie(yc, ys) = center_fit_apply(y_raw, false);
  }
  switch (method) {
    case KernelMethod::KPCA: m = fit_kpca(g.k, n_f, opts); break;
    case KernelMethod::KPLS2: m = fit_kpls2(g.k, yc, n_f, opts); break;
    case KernelMethod::KCCA: m = fit_kcca(g.k, yc, n_f, opts); break;
    case KernelMethod::KOPLS: m = fit_kopls(g.k, yc, n_f, opts); break;
    case KernelMethod::HSCA: {
      m = fit_hsca(g.k, yc * yc.transpose(), n_f, opts);
      break;
    }
    case KernelMethod::SSKCCA:
      throw UsageError("sskcca needs unlabeled data; use fit_sskcca");
  }
  m.basis = basis;
  m.kernel = kernel;
  m.centering = g.stats;
  m.x_stats = input;
  m.y_stats = ys;
  return m;
}

KernelModel fit_kernel(KernelMethod method, const KernelConfig& cfg,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const KernelFitOptions& opts) {
  const Matrix xs = center_fit_apply(x_raw, standardize).first;
  const Kernel kernel = resolve_kernel(cfg, xs);
  return fit_kernel(method, kernel, x_raw, y_raw, n_f, standardize, opts);
}

}  // namespace mvak
