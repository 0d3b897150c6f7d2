#pragma once

#include "mvak/data.hpp"
#include "mvak/numcore.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvak {

enum class LinearMethod { PCA, PLS2, CCA, OPLS };

std::string to_string(LinearMethod m);

struct LinearOptions {
  // PCA pre-projection before CCA/OPLS (or any method) to tame small-sample
  // covariance. Either a fixed dimension or the variance fraction to keep.
  bool pre_project = false;
  std::optional<Index> pca_dims;
  double variance_kept = 1.0 - 1e-9;
  // Alternative regularizer: C_x + load * (tr(C_x)/d) I.
  double diagonal_load = 0.0;
  SolverConfig solver;
};

/// Fitted linear extractor. Features are
///   X' = ((X - mean) / scale) * pre_projection * u
/// with pre_projection omitted when empty.
struct LinearModel {
  LinearMethod method = LinearMethod::PCA;
  Matrix u;                  // projection applied to (pre-projected) inputs
  Matrix v;                  // target-side directions (empty for PCA)
  Matrix weights;            // PLS2 per-direction unit weights (U^T U = I)
  Vector eigenvalues;        // variance / covariance / correlation / OPLS
  CenteringStats x_stats;
  CenteringStats y_stats;
  Matrix pre_projection;     // d x p, empty when unused
  std::vector<std::string> warnings;

  Index features() const { return u.cols(); }
  Index input_dims() const;
  /// Overall d x n_f map applied to centered inputs.
  Matrix projection() const;
  Matrix transform(const Matrix& x_raw) const;
  Matrix transform_centered(const Matrix& x_centered) const;
};

// The fit_* functions take column-centered matrices and leave the model's
// stats as the identity; fit_linear() handles raw data end to end.
LinearModel fit_pca(const Matrix& x, Index n_f, const LinearOptions& opts = {});
LinearModel fit_pls2(const Matrix& x, const Matrix& y, Index n_f,
                     const LinearOptions& opts = {});
LinearModel fit_cca(const Matrix& x, const Matrix& y, Index n_f,
                    const LinearOptions& opts = {});
LinearModel fit_opls(const Matrix& x, const Matrix& y, Index n_f,
                     const LinearOptions& opts = {});

LinearModel fit_linear(LinearMethod method, const Matrix& x_raw,
                       const Matrix& y_raw, Index n_f, bool standardize,
                       const LinearOptions& opts = {});

/// Columns of the leading PCA basis keeping `variance_kept` of the total
/// variance (or exactly `dims` columns when given).
Matrix pca_basis(const Matrix& x_centered, std::optional<Index> dims,
                 double variance_kept, double rank_tol);

}  // namespace mvak
