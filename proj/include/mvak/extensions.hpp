#pragma once

#include "mvak/data.hpp"
#include "mvak/kernels.hpp"
#include "mvak/mva_kernel.hpp"
#include "mvak/numcore.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvak {

// ------------------------------------------------------------ reduced set

enum class ReducedMethod { RKPCA, RKCCA, RKOPLS };

std::string to_string(ReducedMethod m);

struct RkOptions {
  Index r = 100;
  std::uint64_t seed = 0;
  double eta = 0.0;
  // Training rows per streamed kernel block.
  Index chunk = 512;
  SolverConfig solver;
};

/// Projections restricted to the span of r training samples. Features are
///   (k(x_std, basis) - col_means) * beta
/// with col_means the mean of each basis column of K_lr over training rows.
struct ReducedSetModel {
  ReducedMethod method = ReducedMethod::RKOPLS;
  std::vector<Index> basis_indices;
  Matrix basis;
  Matrix beta;
  Matrix v;
  Vector eigenvalues;
  double eta = 0.0;
  Kernel kernel;
  Vector col_means;
  CenteringStats x_stats;
  CenteringStats y_stats;
  Index kernel_evaluations = 0;
  std::vector<std::string> warnings;

  Index features() const { return beta.cols(); }
  Index input_dims() const { return basis.cols(); }
  Matrix transform(const Matrix& x_raw) const;
};

ReducedSetModel fit_rk(ReducedMethod method, const Kernel& kernel,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const RkOptions& opts = {});

ReducedSetModel fit_rk(ReducedMethod method, const KernelConfig& cfg,
                       const Matrix& x_raw, const Matrix& y_raw, Index n_f,
                       bool standardize, const RkOptions& opts = {});

// ------------------------------------------------------------ sparse PLS

enum class SparseVariant { SMA, SMC };

std::string to_string(SparseVariant v);

struct SparsePLSModel {
  SparseVariant variant = SparseVariant::SMA;
  std::vector<Index> selected;
  Vector scalars;
  Vector objectives;
  Index pool = 0;
  KernelModel model;

  Index features() const { return model.features(); }
};

/// Gram-level fit on a centered Gram and centered targets. One sample per
/// direction, chosen among `pool` seeded candidates by the closed-form
/// single-index objective; the Gram is deflated by the projector orthogonal
/// to each accepted score.
SparsePLSModel fit_sparse_pls(SparseVariant variant, const Matrix& k,
                              const Matrix& y, Index n_f, Index pool,
                              std::uint64_t seed);

SparsePLSModel fit_sparse_pls(SparseVariant variant, const Kernel& kernel,
                              const Matrix& x_raw, const Matrix& y_raw,
                              Index n_f, Index pool, std::uint64_t seed,
                              bool standardize);

/// Value of the single-index objective for every sample of the current Gram.
Vector sparse_pls_objectives(SparseVariant variant, const Matrix& k,
                             const Matrix& y);

// ------------------------------------------------------------ ss-kCCA

struct SsKccaParams {
  double alpha_x = 1e-3;
  double alpha_y = 1e-3;
  double gamma_x = 1e-2;
  double gamma_y = 1e-2;
  int neighbors = 7;
  SolverConfig solver;
};

/// Kernel CCA over labeled plus unlabeled rows with Tikhonov and graph
/// Laplacian penalties. Targets enter through a linear kernel on the labeled
/// rows; the returned model keeps all n rows as its basis.
KernelModel fit_sskcca(const Kernel& kernel, const Matrix& x_labeled,
                       const Matrix& y_labeled, const Matrix& x_unlabeled,
                       Index n_f, bool standardize, const SsKccaParams& params = {});

/// Gram-level form: K_nn over all rows (labeled first, centered), centered
/// labeled targets, and the two Laplacians (n x n and l x l).
KernelModel fit_sskcca_gram(const Matrix& k_nn, const Matrix& y, const Matrix& lap_x,
                            const Matrix& lap_y, Index n_f, const SsKccaParams& params);

// ------------------------------------------------------------ cluster kernel

struct ClusterKmvaParams {
  double beta = 0.5;
  int q = 1;
  int g = 1;
  std::uint64_t seed = 0;
  std::optional<double> sigma;
  KernelFitOptions fit;
};

/// Fits the mixture on labeled plus unlabeled rows, then runs the dense
/// kernel method on labeled rows with the composite kernel.
KernelModel fit_cluster_kernel_kmva(KernelMethod method, const Matrix& x_labeled,
                                    const Matrix& y_labeled,
                                    const Matrix& x_unlabeled, Index n_f,
                                    bool standardize, const ClusterKmvaParams& params);

}  // namespace mvak
