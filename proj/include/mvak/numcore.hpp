#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace mvak {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct SolverConfig {
  int max_iterations = 10000;
  double tolerance = 1e-10;
  // Relative diagonal loading applied to B before whitening.
  double jitter = 0.0;
  // Singular/eigen values below rank_tol * max are treated as zero.
  double rank_tol = 1e-9;

  void validate() const;
};

/// Eigenpairs sorted by descending eigenvalue. Columns of `vectors` are
/// orthonormal for standard problems and B-orthonormal for generalized ones.
struct EigResult {
  Vector values;
  Matrix vectors;
  // Set when fewer pairs than requested could be returned.
  bool truncated = false;
  std::vector<std::string> warnings;

  Index size() const { return values.size(); }
};

/// Top-k eigenpairs of a symmetric matrix (symmetrized internally).
EigResult eig_sym(const Matrix& a, Index k, const SolverConfig& cfg = {});

/// Top-k pairs of A v = lambda B v with B symmetric PSD. B is whitened on
/// its numerical range, so at most rank(B) pairs come back.
EigResult eig_gen(const Matrix& a, const Matrix& b, Index k,
                  const SolverConfig& cfg = {});

using MatVec = std::function<Vector(const Vector&)>;

/// Generalized power iteration with B-orthogonal Hotelling deflation.
/// Converges to the top of the spectrum of A + shift*B, so callers with an
/// indefinite A pass a shift that makes it PSD.
EigResult power_deflate(const MatVec& apply_a, const MatVec& apply_b,
                        Index dim, Index k, const SolverConfig& cfg = {},
                        double shift = 0.0, unsigned seed = 1);

Matrix pinv(const Matrix& m, double rank_tol = 1e-9);

Index estimate_rank(const Matrix& m, double rank_tol = 1e-9);

/// Flip each column so its largest-magnitude entry is positive.
void canonicalize_signs(Matrix& v);

/// Inverse square root of the PSD matrix `b` on its numerical range:
/// returns W (n x r) with W^T B W = I.
Matrix range_whitener(const Matrix& b, double rank_tol);

bool all_finite(const Matrix& m);

}  // namespace mvak
