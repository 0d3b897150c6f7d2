#pragma once

#include "mvak/data.hpp"
#include "mvak/numcore.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mvak {

/// Least-squares map from extracted features to targets:
///   scores = Xp * w + y_mean
struct LSHead {
  Matrix w;
  double lambda = 0.0;
  Vector y_mean;
  // Class identifiers in indicator-column order; empty for regression.
  std::vector<std::string> classes;

  bool is_classifier() const { return !classes.empty(); }
  Index features() const { return w.rows(); }
  Matrix predict(const Matrix& xp) const;
};

/// W = (Xp'Xp + lambda I)^-1 Xp'Y, or the minimum-norm pinv(Xp) Y when
/// lambda is 0. Y is taken as already centered.
LSHead fit_ls(const Matrix& xp, const Matrix& y_centered, double lambda = 0.0);

/// Centers Y internally and keeps its mean.
LSHead fit_ls_targets(const Matrix& xp, const Matrix& y, double lambda = 0.0);

/// Classification head on 1-of-c indicators of `encoding`.
LSHead fit_ls_classifier(const Matrix& xp, const LabelEncoding& encoding,
                         double lambda = 0.0);

/// Row-wise argmax; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& scores);

/// Winner-takes-all class codes (0-based, head.classes order).
std::vector<int> predict_wta(const LSHead& head, const Matrix& xp);
std::vector<std::string> predict_labels(const LSHead& head, const Matrix& xp);

enum class Metric { OA, MSE, RMSE };

std::string to_string(Metric m);
Metric parse_metric(const std::string& s);

struct EvalReport {
  Metric metric = Metric::OA;
  double value = 0.0;
  // Binomial standard deviation of OA (percentage points); 0 otherwise.
  double std_dev = 0.0;
  Index count = 0;
  // OA: per-class accuracy in `classes` order. MSE/RMSE: per output column.
  std::vector<double> breakdown;
  std::vector<std::string> classes;
};

EvalReport evaluate_labels(std::span<const std::string> predicted,
                           std::span<const std::string> truth);

EvalReport evaluate_values(const Matrix& predicted, const Matrix& truth,
                           Metric metric);

/// Squared residual of projecting each target column on span(f):
/// ||Y - F F^+ Y||_F^2 / (l m).
double ls_reconstruction_mse(const Matrix& f, const Matrix& y);

struct CrossValResult {
  std::size_t best = 0;
  std::vector<double> means;
  // table[point][fold]
  std::vector<std::vector<double>> table;
};

/// Scores every grid point on every fold and returns the best mean. Ties
/// keep the earliest point. A throwing closure is rethrown with the grid
/// point's description attached.
CrossValResult crossval_select(
    std::size_t grid_size, const std::vector<Fold>& folds,
    const std::function<double(std::size_t point, const Fold& fold)>& score,
    bool higher_is_better,
    const std::function<std::string(std::size_t point)>& describe = {});

}  // namespace mvak
