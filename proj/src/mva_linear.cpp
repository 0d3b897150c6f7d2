#include "mvak/mva_linear.hpp"

#include "mvak/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvak {

namespace {

double samples(const Matrix& x) { return static_cast<double>(x.rows()); }

void check_inputs(const Matrix& x, const Matrix* y, Index n_f) {
  if (x.rows() < 2) throw DataError("linear fit: need at least two samples");
  if (x.cols() < 1) throw DataError("linear fit: X has no columns");
  if (!all_finite(x)) throw DataError("linear fit: X has non-finite entries");
  if (n_f < 1) throw UsageError("linear fit: n_f must be >= 1");
  if (y) {
    if (y->rows() != x.rows())
      throw UsageError("linear fit: X and Y row counts differ");
    if (y->cols() < 1) throw DataError("linear fit: Y has no columns");
    if (!all_finite(*y)) throw DataError("linear fit: Y has non-finite entries");
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

CenteringStats identity_stats(Index d) {
  CenteringStats s;
  s.mean = Vector::Zero(d);
  s.scale = Vector::Ones(d);
  return s;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

void init_model(LinearModel& m, LinearMethod method, const Matrix& x,
                const Matrix* y) {
  m.method = method;
  m.x_stats = identity_stats(x.cols());
  if (y) m.y_stats = identity_stats(y->cols());
}

// Applies the optional PCA pre-projection and returns the working inputs.
Matrix prepare(const Matrix& x, const LinearOptions& opts, LinearModel& m) {
  if (!opts.pre_project) return x;
  m.pre_projection = pca_basis(x, opts.pca_dims, opts.variance_kept,
                               opts.solver.rank_tol);
  return x * m.pre_projection;
}

Matrix loaded_covariance(const Matrix& z, double load) {
  Matrix c = z.transpose() * z / samples(z);
  if (load > 0.0) {
    const double s = load * c.trace() / static_cast<double>(c.rows());
    c.diagonal().array() += s;
  }
  return c;
}

void warn_rank_deficient(const Matrix& c, const char* name, double tol,
                         std::vector<std::string>& warnings) {
  const Index r = estimate_rank(c, tol);
  if (r < c.rows()) {
    std::ostringstream os;
    os << name << " is rank deficient (" << r << " of " << c.rows()
       << "); solved on its range";
    warnings.push_back(os.str());
  }
}

}  // namespace

std::string to_string(LinearMethod m) {
  switch (m) {
    case LinearMethod::PCA: return "pca";
    case LinearMethod::PLS2: return "pls2";
    case LinearMethod::CCA: return "cca";
    case LinearMethod::OPLS: return "opls";
  }
  return "?";
}

Index LinearModel::input_dims() const {
  return pre_projection.size() ? pre_projection.rows() : u.rows();
}

Matrix LinearModel::projection() const {
  return pre_projection.size() ? Matrix(pre_projection * u) : u;
}

Matrix LinearModel::transform_centered(const Matrix& xc) const {
  if (xc.cols() != input_dims())
    throw UsageError("transform: expected " + std::to_string(input_dims()) +
                     " columns, got " + std::to_string(xc.cols()));
  if (pre_projection.size()) return (xc * pre_projection) * u;
  return xc * u;
}

Matrix LinearModel::transform(const Matrix& x_raw) const {
  if (x_raw.cols() != input_dims())
    throw UsageError("transform: expected " + std::to_string(input_dims()) +
                     " columns, got " + std::to_string(x_raw.cols()));
  return transform_centered(x_stats.apply(x_raw));
}

Matrix pca_basis(const Matrix& x, std::optional<Index> dims,
                 double variance_kept, double rank_tol) {
  const Matrix c = x.transpose() * x / samples(x);
  const EigResult e = eig_sym(c, c.rows());
  const double top = std::max(e.values(0), 0.0);
  Index r = 0;
  while (r < e.size() && e.values(r) > rank_tol * top && e.values(r) > 0.0) ++r;
  if (r == 0) throw DataError("PCA pre-projection: X has zero variance");
  Index keep = r;
  if (dims) {
    if (*dims < 1) throw UsageError("PCA pre-projection: dims must be >= 1");
    keep = std::min(*dims, r);
  } else {
    if (!(variance_kept > 0.0 && variance_kept <= 1.0))
      throw UsageError("PCA pre-projection: variance fraction must be in (0, 1]");
    const double total = e.values.head(r).sum();
    double acc = 0.0;
    keep = 0;
    while (keep < r) {
      acc += e.values(keep++);
      if (acc >= variance_kept * total) break;
    }
  }
  return e.vectors.leftCols(keep);
}

LinearModel fit_pca(const Matrix& x, Index n_f, const LinearOptions& opts) {
  check_inputs(x, nullptr, n_f);
  opts.solver.validate();
  LinearModel m;
  init_model(m, LinearMethod::PCA, x, nullptr);
  const Matrix z = prepare(x, opts, m);
  const Matrix c = z.transpose() * z / samples(z);
  const Index cap = estimate_rank(z, opts.solver.rank_tol);
  if (cap == 0) throw DataError("PCA: X has zero variance");
  n_f = clamp_features(n_f, cap, "rank(X)", m.warnings);
  EigResult e = eig_sym(c, n_f, opts.solver);
  append(m.warnings, e.warnings);
  m.u = e.vectors;
  m.eigenvalues = e.values;
  return m;
}

LinearModel fit_pls2(const Matrix& x, const Matrix& y, Index n_f,
                     const LinearOptions& opts) {
  check_inputs(x, &y, n_f);
  opts.solver.validate();
  LinearModel m;
  init_model(m, LinearMethod::PLS2, x, &y);
  Matrix xj = prepare(x, opts, m);
  Matrix yj = y;
  const Index cap = estimate_rank(xj, opts.solver.rank_tol);
  if (cap == 0) throw DataError("PLS2: X has zero variance");
  n_f = clamp_features(n_f, cap, "rank(X)", m.warnings);

  const Index p = xj.cols();
  const double l = samples(xj);
  const double scale = xj.norm() * y.norm() / l;
  Matrix w(p, n_f), v(y.cols(), n_f), loads(p, n_f), scores(xj.rows(), n_f);
  Vector sigma(n_f), norms(n_f);
  Index got = 0;
  for (Index j = 0; j < n_f; ++j) {
    const Matrix cxy = xj.transpose() * yj / l;
    Eigen::JacobiSVD<Matrix> svd(cxy, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double s = svd.singularValues()(0);
    const double floor = j == 0 ? 1e-13 * scale : 1e-10 * sigma(0);
    if (!(s > floor) || !(scale > 0.0)) {
      if (j == 0)
        throw NumericalError("PLS2: cross-covariance is numerically zero");
      std::ostringstream os;
      os << "PLS2: cross-covariance vanished after " << j
         << " directions; stopped early";
      m.warnings.push_back(os.str());
      break;
    }
    Matrix pair(p + y.cols(), 1);
    pair << svd.matrixU().col(0), svd.matrixV().col(0);
    canonicalize_signs(pair);
    const Vector uj = pair.col(0).head(p);
    const Vector vj = pair.col(0).tail(y.cols());
    Vector t = xj * uj;
    const double tn = t.norm();
    if (!(tn > 0.0)) throw NumericalError("PLS2: zero score vector");
    t /= tn;
    const Vector pj = xj.transpose() * t;
    xj -= t * pj.transpose();
    yj -= t * (t.transpose() * yj);
    w.col(j) = uj;
    v.col(j) = vj;
    loads.col(j) = pj;
    scores.col(j) = t;
    sigma(j) = s;
    norms(j) = tn;
    ++got;
  }
  w.conservativeResize(Eigen::NoChange, got);
  v.conservativeResize(Eigen::NoChange, got);
  loads.conservativeResize(Eigen::NoChange, got);
  const Matrix ptw = loads.transpose() * w;
  m.u = w * ptw.inverse() * norms.head(got).asDiagonal();
  m.weights = w;
  m.v = v;
  m.eigenvalues = sigma.head(got);
  return m;
}

namespace {

// Shared CCA/OPLS path: eig_gen(A, C_x) on the (pre-projected) inputs.
LinearModel fit_generalized(LinearMethod method, const Matrix& x, const Matrix& y,
                            Index n_f, const LinearOptions& opts) {
  check_inputs(x, &y, n_f);
  opts.solver.validate();
  if (opts.diagonal_load < 0.0)
    throw UsageError("diagonal load must be non-negative");
  const char* name = method == LinearMethod::CCA ? "CCA" : "OPLS";
  LinearModel m;
  init_model(m, method, x, &y);
  const Matrix z = prepare(x, opts, m);
  const double l = samples(z);
  const Matrix cxy = z.transpose() * y / l;
  const Index cap = estimate_rank(cxy, opts.solver.rank_tol);
  if (cap == 0)
    throw NumericalError(std::string(name) + ": cross-covariance is numerically zero");
  n_f = clamp_features(n_f, cap, "rank(C_xy)", m.warnings);

  const Matrix cx = loaded_covariance(z, opts.diagonal_load);
  warn_rank_deficient(cx, "C_x", opts.solver.rank_tol, m.warnings);
  Matrix a;
  Matrix cy_pinv;
  if (method == LinearMethod::CCA) {
    const Matrix cy = y.transpose() * y / l;
    warn_rank_deficient(cy, "C_y", opts.solver.rank_tol, m.warnings);
    cy_pinv = pinv(cy, opts.solver.rank_tol);
    a = cxy * cy_pinv * cxy.transpose();
  } else {
    a = cxy * cxy.transpose();
  }
  EigResult e = eig_gen(a, cx, n_f, opts.solver);
  append(m.warnings, e.warnings);
  if (e.size() == 0) throw NumericalError(std::string(name) + ": C_x has zero rank");
  m.u = e.vectors;
  if (method == LinearMethod::CCA) {
    m.eigenvalues = e.values.cwiseMax(0.0).cwiseSqrt();
    m.v = cy_pinv * cxy.transpose() * m.u;
    for (Index j = 0; j < m.v.cols(); ++j) {
      const double rho = m.eigenvalues(j);
      if (rho > 1e-12)
        m.v.col(j) /= rho;
      else
        m.v.col(j).setZero();
    }
  } else {
    m.eigenvalues = e.values;
    m.v = cxy.transpose() * m.u;
  }
  return m;
}

}  // namespace

LinearModel fit_cca(const Matrix& x, const Matrix& y, Index n_f,
                    const LinearOptions& opts) {
  return fit_generalized(LinearMethod::CCA, x, y, n_f, opts);
}

LinearModel fit_opls(const Matrix& x, const Matrix& y, Index n_f,
                     const LinearOptions& opts) {
  return fit_generalized(LinearMethod::OPLS, x, y, n_f, opts);
}

LinearModel fit_linear(LinearMethod method, const Matrix& x_raw,
                       const Matrix& y_raw, Index n_f, bool standardize,
                       const LinearOptions& opts) {
  auto [xc, xs] = center_fit_apply(x_raw, standardize);
  LinearModel m;
  if (method == LinearMethod::PCA) {
    m = fit_pca(xc, n_f, opts);
  } else {
    if (y_raw.rows() != x_raw.rows())
      throw UsageError(to_string(method) + ": targets required with matching rows");
    auto [yc, ys] = center_fit_apply(y_raw, false);
    switch (method) {
      case LinearMethod::PLS2: m = fit_pls2(xc, yc, n_f, opts); break;
      case LinearMethod::CCA: m = fit_cca(xc, yc, n_f, opts); break;
      default: m = fit_opls(xc, yc, n_f, opts); break;
    }
    m.y_stats = ys;
  }
  m.x_stats = xs;
  return m;
}

}  // namespace mvak
