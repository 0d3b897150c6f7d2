#include "mvak/numcore.hpp"

#include "mvak/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mvak {

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw UsageError("solver tolerance must be > 0");
  if (!(jitter >= 0.0)) throw UsageError("solver jitter must be >= 0");
  if (!(rank_tol > 0.0 && rank_tol < 1.0))
    throw UsageError("solver rank_tol must lie in (0, 1)");
  if (max_iterations < 1) throw UsageError("solver max_iterations must be >= 1");
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void canonicalize_signs(Matrix& v) {
  for (Index j = 0; j < v.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      // strict comparison keeps the first index among equal magnitudes
      if (a > best + 1e-14 * std::max(1.0, best)) {
        best = a;
        arg = i;
      }
    }
    if (v.rows() > 0 && v(arg, j) < 0.0) v.col(j) = -v.col(j);
  }
}

namespace {

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << " must be square, got " << a.rows() << "x" << a.cols();
    throw UsageError(os.str());
  }
}

double spectral_scale(const Matrix& a) {
  // Frobenius norm bounds the 2-norm from above; good enough for residual scaling.
  return std::max(a.norm(), std::numeric_limits<double>::min());
}

}  // namespace

EigResult eig_sym(const Matrix& a, Index k, const SolverConfig& cfg) {
  cfg.validate();
  require_square(a, "eig_sym input");
  if (!all_finite(a)) throw NumericalError("eig_sym: non-finite entries");
  const Index n = a.rows();
  if (k < 1 || k > n) {
    std::ostringstream os;
    os << "eig_sym: k=" << k << " out of range [1, " << n << "]";
    throw UsageError(os.str());
  }
  const Matrix s = symmetrized(a);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eig_sym: eigensolver failed to converge");

  EigResult out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (Index j = 0; j < k; ++j) {
    out.values(j) = solver.eigenvalues()(n - 1 - j);
    out.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  }
  canonicalize_signs(out.vectors);

  const double scale = spectral_scale(s);
  for (Index j = 0; j < k; ++j) {
    const double res =
        (s * out.vectors.col(j) - out.values(j) * out.vectors.col(j)).norm();
    if (res > std::max(cfg.tolerance, 1e-12 * n) * scale) {
      std::ostringstream os;
      os << "eig_sym: residual " << res << " for pair " << j
         << " exceeds tolerance";
      out.warnings.push_back(os.str());
    }
  }
  return out;
}

Matrix range_whitener(const Matrix& b, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(b));
  if (solver.info() != Eigen::Success)
    throw NumericalError("range_whitener: eigensolver failed");
  const Vector& mu = solver.eigenvalues();
  const Index n = mu.size();
  const double mu_max = n > 0 ? mu.maxCoeff() : 0.0;
  if (!(mu_max > 0.0)) return Matrix(n, 0);
  std::vector<Index> keep;
  for (Index i = n - 1; i >= 0; --i)
    if (mu(i) > rank_tol * mu_max) keep.push_back(i);
  Matrix w(n, static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    w.col(static_cast<Index>(c)) =
        solver.eigenvectors().col(keep[c]) / std::sqrt(mu(keep[c]));
  return w;
}

EigResult eig_gen(const Matrix& a, const Matrix& b, Index k,
                  const SolverConfig& cfg) {
  cfg.validate();
  require_square(a, "eig_gen A");
  require_square(b, "eig_gen B");
  if (a.rows() != b.rows())
    throw UsageError("eig_gen: A and B dimensions differ");
  if (!all_finite(a) || !all_finite(b))
    throw NumericalError("eig_gen: non-finite entries");
  if (k < 1) throw UsageError("eig_gen: k must be >= 1");

  Matrix bb = symmetrized(b);
  if (cfg.jitter > 0.0) {
    const double load = cfg.jitter * std::max(bb.trace(), 0.0) /
                        static_cast<double>(std::max<Index>(bb.rows(), 1));
    bb.diagonal().array() += load;
  }
  const Matrix w = range_whitener(bb, cfg.rank_tol);
  EigResult out;
  const Index r = w.cols();
  if (r == 0) {
    out.values.resize(0);
    out.vectors.resize(a.rows(), 0);
    out.truncated = true;
    out.warnings.emplace_back("eig_gen: B has zero usable rank");
    return out;
  }
  const Index kk = std::min(k, r);
  const Matrix reduced = w.transpose() * symmetrized(a) * w;
  EigResult inner = eig_sym(reduced, kk, cfg);
  out.values = inner.values;
  out.vectors = w * inner.vectors;
  canonicalize_signs(out.vectors);
  out.warnings = std::move(inner.warnings);
  if (k > r) {
    out.truncated = true;
    std::ostringstream os;
    os << "eig_gen: requested " << k << " pairs but rank(B)=" << r;
    out.warnings.push_back(os.str());
  }
  return out;
}

namespace {

// Conjugate gradients on the SPD action; stops at machine-level relative
// residual or after a bounded number of sweeps.
Vector cg_solve(const MatVec& apply_b, const Vector& rhs, Index dim) {
  Vector x = Vector::Zero(dim);
  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  const double stop = 1e-30 * std::max(rhs.squaredNorm(), 1e-300);
  for (Index it = 0; it < 5 * dim + 20 && rr > stop; ++it) {
    const Vector bp = apply_b(p);
    const double pbp = p.dot(bp);
    if (!(pbp > 0.0)) break;
    const double step = rr / pbp;
    x += step * p;
    r -= step * bp;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

}  // namespace

EigResult power_deflate(const MatVec& apply_a, const MatVec& apply_b,
                        Index dim, Index k, const SolverConfig& cfg,
                        double shift, unsigned seed) {
  cfg.validate();
  if (dim < 1) throw UsageError("power_deflate: dim must be >= 1");
  if (k < 1 || k > dim) throw UsageError("power_deflate: k out of range");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix found(dim, 0);
  Matrix found_b(dim, 0);  // B * v_i, cached
  std::vector<double> lambdas;

  auto b_orthogonalize = [&](Vector& x) {
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i < found.cols(); ++i)
        x -= found.col(i) * found_b.col(i).dot(x);
  };
  auto b_normalize = [&](Vector& x) -> bool {
    const double nb = x.dot(apply_b(x));
    if (!(nb > 0.0)) return false;
    x /= std::sqrt(nb);
    return true;
  };

  EigResult out;
  for (Index j = 0; j < k; ++j) {
    Vector x(dim);
    for (Index i = 0; i < dim; ++i) x(i) = normal(rng);
    b_orthogonalize(x);
    if (!b_normalize(x))
      throw NumericalError("power_deflate: start vector has zero B-norm");

    double lambda = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      Vector y = apply_a(x);
      if (shift != 0.0) y += shift * apply_b(x);
      // Hotelling deflation in the B inner product: already explained
      // directions are mapped to zero.
      for (Index i = 0; i < found.cols(); ++i)
        y -= (lambdas[static_cast<std::size_t>(i)] + shift) * found_b.col(i) *
             found_b.col(i).dot(x);
      Vector xn = cg_solve(apply_b, y, dim);
      b_orthogonalize(xn);
      if (!b_normalize(xn)) {
        // Remaining spectrum is numerically zero: any B-orthogonal vector
        // is an eigenvector for lambda = 0.
        xn = x;
      }
      Vector ax = apply_a(xn);
      const Vector bx = apply_b(xn);
      lambda = xn.dot(ax);
      // residual within the deflated subspace; locked pairs carry their own error
      for (Index i = 0; i < found.cols(); ++i) ax -= found_b.col(i) * found.col(i).dot(ax);
      residual = (ax - lambda * bx).norm();
      const double scale = ax.norm() + std::abs(lambda) * bx.norm() + 1e-300;
      x = xn;
      if (residual <= cfg.tolerance * scale || residual < 1e-280) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "power_deflate: pair " << j << " did not converge in "
         << cfg.max_iterations << " iterations (residual " << residual << ")";
      throw NumericalError(os.str());
    }
    const Vector bx = apply_b(x);
    found.conservativeResize(Eigen::NoChange, found.cols() + 1);
    found_b.conservativeResize(Eigen::NoChange, found_b.cols() + 1);
    found.col(found.cols() - 1) = x;
    found_b.col(found_b.cols() - 1) = bx;
    lambdas.push_back(lambda);
  }

  // Deflation returns pairs in extraction order; sort defensively in case
  // near-equal eigenvalues were found out of order.
  std::vector<Index> order(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
    return lambdas[static_cast<std::size_t>(p)] >
           lambdas[static_cast<std::size_t>(q)];
  });
  out.values.resize(k);
  out.vectors.resize(dim, k);
  for (Index i = 0; i < k; ++i) {
    out.values(i) = lambdas[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    out.vectors.col(i) = found.col(order[static_cast<std::size_t>(i)]);
  }
  canonicalize_signs(out.vectors);
  return out;
}

Matrix pinv(const Matrix& m, double rank_tol) {
  if (m.size() == 0) return Matrix(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rank_tol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Index estimate_rank(const Matrix& m, double rank_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rank_tol * s(0)) ++r;
  return r;
}

}  // namespace mvak
