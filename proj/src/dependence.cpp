#include "mvak/dependence.hpp"

#include "mvak/data.hpp"
#include "mvak/error.hpp"
#include "mvak/kernels.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvak {

namespace {

void check_pair(const Matrix& kx, const Matrix& ky) {
  if (kx.rows() != kx.cols() || ky.rows() != ky.cols())
    throw UsageError("dependence: Gram matrices must be square");
  if (kx.rows() != ky.rows())
    throw UsageError("dependence: Gram sizes differ (" + std::to_string(kx.rows()) +
                     " vs " + std::to_string(ky.rows()) + ")");
  if (kx.rows() < 2) throw DataError("dependence: need at least two samples");
  if (!all_finite(kx) || !all_finite(ky))
    throw DataError("dependence: non-finite Gram entries");
}

double trace_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix null_space(const Matrix& m, double tol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double top = s.size() ? s(0) : 0.0;
  Index rank = 0;
  while (rank < s.size() && s(rank) > tol * top && s(rank) > 0.0) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

}  // namespace

DependenceReport hsic(const Matrix& kx, const Matrix& ky, bool centered) {
  check_pair(kx, ky);
  DependenceReport r;
  r.estimator = Estimator::HSIC;
  const double l1 = static_cast<double>(kx.rows() - 1);
  if (centered) {
    r.value = trace_product(kx, ky) / (l1 * l1);
  } else {
    r.value = trace_product(center_train(kx).k, center_train(ky).k) / (l1 * l1);
  }
  return r;
}

double hsic_permutation_pvalue(const Matrix& kx, const Matrix& ky,
                               int permutations, std::uint64_t seed,
                               bool centered) {
  if (permutations < 1) throw UsageError("hsic: permutations must be >= 1");
  check_pair(kx, ky);
  const Matrix cx = centered ? kx : center_train(kx).k;
  const Matrix cy = centered ? ky : center_train(ky).k;
  const double observed = trace_product(cx, cy);
  const double slack = 1e-12 * std::max(std::abs(observed), 1e-300);
  const Index l = kx.rows();
  int hits = 0;
  Matrix py(l, l);
  for (int p = 0; p < permutations; ++p) {
    const auto perm = seeded_permutation(l, seed + static_cast<std::uint64_t>(p));
    for (Index j = 0; j < l; ++j)
      for (Index i = 0; i < l; ++i) py(i, j) = cy(perm[i], perm[j]);
    if (trace_product(cx, py) >= observed - slack) ++hits;
  }
  return (1.0 + hits) / (1.0 + permutations);
}

KernelModel fit_hsca(const Matrix& kx, const Matrix& ky, Index n_f,
                     const KernelFitOptions& opts) {
  check_pair(kx, ky);
  if (n_f < 1) throw UsageError("hsca: n_f must be >= 1");
  if (!(opts.eta >= 0.0) || !std::isfinite(opts.eta))
    throw UsageError("hsca: eta must be a non-negative finite number");
  opts.solver.validate();
  KernelModel m;
  m.method = KernelMethod::HSCA;
  m.eta = opts.eta;
  const Index l = kx.rows();
  const double ld = static_cast<double>(l);
  const Matrix k = sym(kx);
  const Matrix w = range_whitener((k * k + opts.eta * k) / ld, opts.solver.rank_tol);
  const Index r = w.cols();
  if (r == 0) throw NumericalError("hsca: zero-rank B");
  if (n_f > r) {
    std::ostringstream os;
    os << "n_f=" << n_f << " exceeds rank(K_x)=" << r << "; clamped";
    m.warnings.push_back(os.str());
    n_f = r;
  }
  const Matrix reduced = sym(w.transpose() * (k * sym(ky) * k) * w / (ld * ld));
  const Matrix kw = k * w;
  Matrix coeffs(r, n_f);
  Matrix features(l, n_f);
  Vector values(n_f);
  Index got = 0;
  for (Index j = 0; j < n_f; ++j) {
    Matrix basis;
    if (j == 0) {
      basis = Matrix::Identity(r, r);
    } else {
      basis = null_space(features.leftCols(j).transpose() * kw, opts.solver.rank_tol);
      if (basis.cols() == 0) {
        m.warnings.push_back("hsca: no directions left orthogonal to earlier features");
        break;
      }
    }
    const EigResult e = eig_sym(basis.transpose() * reduced * basis, 1, opts.solver);
    const double lambda = e.values(0);
    const double floor = j == 0 ? 1e-14 * std::max(reduced.norm(), 1e-300)
                                : 1e-12 * values(0);
    if (!(lambda > floor) || !(reduced.norm() > 0.0)) {
      if (j == 0) throw NumericalError("hsca: zero dependence objective");
      std::ostringstream os;
      os << "hsca: objective vanished after " << j << " directions; stopped early";
      m.warnings.push_back(os.str());
      break;
    }
    Vector c = basis * e.vectors.col(0);
    Vector alpha = w * c;
    Index top = 0;
    alpha.cwiseAbs().maxCoeff(&top);
    if (alpha(top) < 0.0) {
      c = -c;
      alpha = -alpha;
    }
    coeffs.col(j) = c;
    features.col(j) = k * alpha;
    values(j) = lambda;
    ++got;
  }
  m.a = w * coeffs.leftCols(got);
  m.eigenvalues = values.head(got);
  return m;
}

DependenceReport kgv(const Matrix& kx, const Matrix& ky, double theta, double eta,
                     const SolverConfig& solver) {
  check_pair(kx, ky);
  if (!(theta >= 0.0 && theta <= 1.0)) throw UsageError("kgv: theta must be in [0, 1]");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw UsageError("kgv: eta must be >= 0");
  if (theta < 1.0 && !(eta > 0.0))
    throw UsageError("kgv: eta must be positive when theta < 1");
  solver.validate();
  DependenceReport r;
  r.estimator = Estimator::KGV;
  r.theta = theta;
  r.eta = eta;
  const Matrix x = sym(kx);
  const Matrix y = sym(ky);
  const Matrix bx = theta * x * x + eta * (1.0 - theta) * x;
  const Matrix by = theta * y * y + eta * (1.0 - theta) * y;
  const Matrix xy = x * y;
  const Matrix a = xy * pinv(sym(by), solver.rank_tol) * xy.transpose();
  EigResult e = eig_gen(a, bx, x.rows(), solver);
  r.warnings = e.warnings;
  Vector lambda = e.values.cwiseMax(0.0).cwiseSqrt();
  const double cap = 1.0 - 1e-9;
  bool clipped = false;
  double sum = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cap) {
      lambda(i) = cap;
      clipped = true;
    }
    sum += std::log1p(-lambda(i) * lambda(i));
  }
  if (clipped) r.warnings.emplace_back("kgv: eigenvalues clipped at 1 - 1e-9");
  r.eigenvalues = lambda;
  r.value = -0.5 * sum;
  return r;
}

}  // namespace mvak
