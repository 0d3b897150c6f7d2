#pragma once

#include "mvak/mva_kernel.hpp"
#include "mvak/numcore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mvak {

enum class Estimator { HSIC, KGV };

struct DependenceReport {
  Estimator estimator = Estimator::HSIC;
  double value = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  Vector eigenvalues;  // kGV only
  std::vector<std::string> warnings;
};

/// Tr(K~x K~y) / (l-1)^2. Raw Grams are centered first when `centered` is false.
DependenceReport hsic(const Matrix& kx, const Matrix& ky, bool centered = true);

/// Share of row permutations of K_y whose HSIC reaches the observed one,
/// counted as (1 + hits) / (1 + permutations).
double hsic_permutation_pvalue(const Matrix& kx, const Matrix& ky,
                               int permutations, std::uint64_t seed,
                               bool centered = true);

/// Iterative extractor. Direction j maximizes alpha' Kx Ky Kx alpha under
/// (Kx^2 + eta Kx)/l normalization, restricted to directions whose training
/// features are orthogonal to all earlier ones.
KernelModel fit_hsca(const Matrix& kx, const Matrix& ky, Index n_f,
                     const KernelFitOptions& opts = {});

/// -1/2 sum log(1 - lambda_i^2) over the spectrum of the regularized
/// kernel correlation problem.
DependenceReport kgv(const Matrix& kx, const Matrix& ky, double theta, double eta,
                     const SolverConfig& solver = {});

}  // namespace mvak
