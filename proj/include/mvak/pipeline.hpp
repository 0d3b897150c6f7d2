#pragma once

#include "mvak/data.hpp"
#include "mvak/extensions.hpp"
#include "mvak/kernels.hpp"
#include "mvak/mva_kernel.hpp"
#include "mvak/mva_linear.hpp"
#include "mvak/predict.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvak {

enum class Method {
  PCA, PLS2, CCA, OPLS,
  KPCA, KPLS2, KCCA, KOPLS, HSCA,
  RKPCA, RKCCA, RKOPLS,
  SMA, SMC,
  SSKCCA
};

std::string to_string(Method m);
/// Throws UsageError listing every valid tag.
Method parse_method(std::string_view s);
std::vector<std::string> method_tags();

bool is_supervised(Method m);
bool is_kernel_method(Method m);
/// Methods with a regularization parameter eta worth cross-validating.
bool uses_eta(Method m);

struct MethodSpec {
  Method method = Method::PCA;
  Index n_f = 1;
  bool standardize = true;
  KernelConfig kernel;
  double eta = 0.0;
  LinearOptions linear;
  Index r = 100;
  Index pool = 0;  // 0 means all samples
  std::uint64_t seed = 0;
  SsKccaParams ss;

  void validate() const;
};

using ExtractorModel = std::variant<LinearModel, KernelModel, ReducedSetModel, SparsePLSModel>;

/// Any fitted feature extractor behind one interface.
struct Extractor {
  Method method = Method::PCA;
  ExtractorModel model;

  Matrix transform(const Matrix& x_raw) const;
  Index features() const;
  Index input_dims() const;
  Vector eigenvalues() const;
  const std::vector<std::string>& warnings() const;
  /// Resolved kernel, when the method has one.
  const Kernel* kernel() const;
};

/// Largest deviation of the fitted directions from their normalization
/// constraint on the training rows `x`. NaN for sparse PLS and ss-kCCA.
double constraint_residual(const Extractor& e, const Matrix& x);

/// `unlabeled` feeds ss-kCCA and cluster-based kernels only.
Extractor fit_extractor(const MethodSpec& spec, const Matrix& x, const Matrix& y,
                        const Matrix* unlabeled = nullptr);

struct Classifier {
  Extractor extractor;
  LSHead head;

  std::vector<std::string> predict(const Matrix& x_raw) const;
};

Classifier fit_classifier(const MethodSpec& spec, const Dataset& train,
                          double lambda = 0.0, const Matrix* unlabeled = nullptr);

/// eta grid {0, 1e-6, ..., 1e-1} * trace(K~)/l on the training inputs.
std::vector<double> eta_grid(const MethodSpec& spec, const Matrix& x);

struct EtaSelection {
  double eta = 0.0;
  std::vector<double> grid;
  CrossValResult cv;
};

/// k-fold cross-validated OA over the eta grid. The kernel width is
/// resolved once on the full training set and held fixed across folds.
EtaSelection select_eta(MethodSpec spec, const Dataset& train, int folds,
                        std::uint64_t seed);

/// Fills an unset sigma with the median heuristic on standardized inputs.
MethodSpec resolve_sigma(MethodSpec spec, const Matrix& x);

}  // namespace mvak
