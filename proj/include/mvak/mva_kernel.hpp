#pragma once

#include "mvak/data.hpp"
#include "mvak/kernels.hpp"
#include "mvak/numcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvak {

enum class KernelMethod { KPCA, KPLS2, KCCA, KOPLS, HSCA, SSKCCA };

std::string to_string(KernelMethod m);

/// Fitted dual-form extractor. Features of new rows are
///   center_test(k(x_std, basis)) * a
/// where basis holds the retained (standardized) training samples.
struct KernelModel {
  KernelMethod method = KernelMethod::KPCA;
  Matrix a;                 // basis rows x n_f dual coefficients
  Matrix v;                 // target directions (empty for kPCA)
  Matrix dual_weights;      // kPLS2 per-direction unit weights
  Vector eigenvalues;
  double eta = 0.0;
  Matrix basis;
  Kernel kernel;
  GramCentering centering;
  CenteringStats x_stats;
  CenteringStats y_stats;
  std::vector<std::string> warnings;

  Index features() const { return a.cols(); }
  Index input_dims() const { return basis.cols(); }
  bool has_basis() const { return basis.rows() > 0; }

  /// Features from an uncentered test Gram against the basis.
  Matrix transform_gram(const Matrix& k_test) const;
  Matrix transform(const Matrix& x_raw) const;
};

struct KernelFitOptions {
  double eta = 0.0;
  SolverConfig solver;
};

// Gram-level fits: K is the centered training Gram, Y centered targets.
// The returned models carry no basis or kernel; fit_kernel() adds them.
KernelModel fit_kpca(const Matrix& k, Index n_f, const KernelFitOptions& opts = {});
KernelModel fit_kpls2(const Matrix& k, const Matrix& y, Index n_f,
                      const KernelFitOptions& opts = {});
KernelModel fit_kcca(const Matrix& k, const Matrix& y, Index n_f,
                     const KernelFitOptions& opts = {});
KernelModel fit_kopls(const Matrix& k, const Matrix& y, Index n_f,
                      const KernelFitOptions& opts = {});

/// End to end: standardizes/centers raw data, resolves the kernel, builds
/// and centers the training Gram, then dispatches on `method`.
KernelModel fit_kernel(KernelMethod method, const Kernel& kernel,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const KernelFitOptions& opts = {});

/// Same with an unresolved config (median sigma, cluster fitting).
KernelModel fit_kernel(KernelMethod method, const KernelConfig& cfg,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const KernelFitOptions& opts = {});

Matrix transform_kernel(const KernelModel& model, const Matrix& x_raw);

}  // namespace mvak
