#pragma once

#include "mvak/numcore.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvak {

enum class KernelFamily { Linear, Rbf, Cluster, Composite };

std::string to_string(KernelFamily f);
KernelFamily parse_kernel_family(std::string_view s);

struct KernelConfig {
  KernelFamily family = KernelFamily::Rbf;
  // Unset means "resolve with the median heuristic on training inputs".
  std::optional<double> sigma;
  // Weight of the supervised kernel in the composite form.
  double beta = 0.5;
  // Cluster kernel: EM restarts and number of cluster-count settings
  // (counts 2 .. g+1).
  int q = 1;
  int g = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Gaussian mixture with full covariances, stored through Cholesky factors.
struct GaussianMixture {
  Vector weights;
  Matrix means;                 // components x d
  std::vector<Matrix> chol;     // lower factors of the covariances
  int iterations = 0;
  double log_likelihood = 0.0;  // mean per sample at convergence

  Index components() const { return weights.size(); }
  /// Rows are samples, columns are component posteriors summing to 1.
  Matrix posteriors(const Matrix& a) const;
};

struct ClusterModel {
  int q = 1;
  int g = 1;
  // Ordered by (q, g), g fastest; mixture (q, g) has g + 1 components.
  std::vector<GaussianMixture> mixtures;

  /// Concatenated posterior vectors of every mixture, scaled so that the
  /// plain inner product of two rows equals k_c.
  Matrix embedding(const Matrix& a) const;
};

ClusterModel cluster_kernel_fit(const Matrix& x_all, int q, int g,
                                std::uint64_t seed);

Matrix cluster_kernel_eval(const ClusterModel& model, const Matrix& a,
                           const Matrix& b);

Matrix composite_kernel(const Matrix& k_s, const Matrix& k_c, double beta);

/// Fully resolved kernel: concrete sigma, fitted cluster model when needed.
class Kernel {
 public:
  static Kernel linear();
  static Kernel rbf(double sigma);
  static Kernel cluster(std::shared_ptr<const ClusterModel> model);
  static Kernel composite(double sigma, double beta,
                          std::shared_ptr<const ClusterModel> model);

  KernelFamily family() const { return family_; }
  double sigma() const { return sigma_; }
  double beta() const { return beta_; }
  const std::shared_ptr<const ClusterModel>& cluster_model() const { return cluster_; }

  /// Rows of `a` against rows of `b`. RBF blocks run in parallel.
  Matrix gram(const Matrix& a, const Matrix& b) const;
  Matrix gram_serial(const Matrix& a, const Matrix& b) const;

 private:
  KernelFamily family_ = KernelFamily::Linear;
  double sigma_ = 1.0;
  double beta_ = 1.0;
  std::shared_ptr<const ClusterModel> cluster_;
};

/// Resolves the config against training inputs. Cluster-based families fit
/// their mixtures on train plus the optional unlabeled rows.
Kernel resolve_kernel(const KernelConfig& cfg, const Matrix& train,
                      const Matrix* unlabeled = nullptr);

/// Convenience for the closed-form families (linear, rbf with sigma set).
Matrix gram(const KernelConfig& cfg, const Matrix& a, const Matrix& b);

double median_bandwidth(const Matrix& a, std::uint64_t seed = 0);

/// Training-Gram statistics needed to center held-out rows.
struct GramCentering {
  Vector col_means;
  double grand_mean = 0.0;

  Index size() const { return col_means.size(); }
};

struct GramMatrix {
  Matrix k;
  bool centered = false;
  GramCentering stats;
};

GramMatrix center_train(const Matrix& k);
Matrix center_test(const Matrix& k_test, const GramCentering& stats);

/// D^{-1/2} (D - M) D^{-1/2}.
Matrix graph_laplacian(const Matrix& m);

/// Symmetric k-nearest-neighbour graph with RBF edge weights.
Matrix knn_rbf_graph(const Matrix& x, int k, double sigma);

}  // namespace mvak
