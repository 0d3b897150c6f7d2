#include "mvak/predict.hpp"

#include "mvak/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>
#include <sstream>

namespace mvak {

Matrix LSHead::predict(const Matrix& xp) const {
  if (xp.cols() != w.rows())
    throw UsageError("LS head: expected " + std::to_string(w.rows()) +
                     " feature columns, got " + std::to_string(xp.cols()));
  Matrix out = xp * w;
  if (y_mean.size() == out.cols()) out.rowwise() += y_mean.transpose();
  return out;
}

LSHead fit_ls(const Matrix& xp, const Matrix& y, double lambda) {
  if (xp.rows() != y.rows()) throw UsageError("fit_ls: feature and target rows differ");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw UsageError("fit_ls: lambda must be a non-negative finite number");
  if (!all_finite(xp) || !all_finite(y)) throw DataError("fit_ls: non-finite input");
  LSHead h;
  h.lambda = lambda;
  h.y_mean = Vector::Zero(y.cols());
  if (lambda == 0.0) {
    h.w = pinv(xp, 1e-12) * y;
  } else {
    Matrix g = xp.transpose() * xp;
    g.diagonal().array() += lambda;
    h.w = g.ldlt().solve(xp.transpose() * y);
  }
  return h;
}

LSHead fit_ls_targets(const Matrix& xp, const Matrix& y, double lambda) {
  if (y.rows() < 1) throw DataError("fit_ls: no target rows");
  const Vector mean = y.colwise().mean().transpose();
  LSHead h = fit_ls(xp, y.rowwise() - mean.transpose(), lambda);
  h.y_mean = mean;
  return h;
}

LSHead fit_ls_classifier(const Matrix& xp, const LabelEncoding& enc, double lambda) {
  LSHead h = fit_ls_targets(xp, enc.indicator, lambda);
  h.classes = enc.classes;
  return h;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index i = 0; i < scores.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> predict_wta(const LSHead& head, const Matrix& xp) {
  if (!head.is_classifier()) throw UsageError("predict_wta: head is not a classifier");
  return argmax_rows(head.predict(xp));
}

std::vector<std::string> predict_labels(const LSHead& head, const Matrix& xp) {
  const auto codes = predict_wta(head, xp);
  std::vector<std::string> out;
  out.reserve(codes.size());
  for (int c : codes) out.push_back(head.classes[static_cast<std::size_t>(c)]);
  return out;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::OA: return "OA";
    case Metric::MSE: return "MSE";
    case Metric::RMSE: return "RMSE";
  }
  return "?";
}

Metric parse_metric(const std::string& s) {
  if (s == "OA" || s == "oa") return Metric::OA;
  if (s == "MSE" || s == "mse") return Metric::MSE;
  if (s == "RMSE" || s == "rmse") return Metric::RMSE;
  throw UsageError("unknown metric '" + s + "' (valid: OA, MSE, RMSE)");
}

EvalReport evaluate_labels(std::span<const std::string> predicted,
                           std::span<const std::string> truth) {
  if (predicted.size() != truth.size())
    throw UsageError("evaluate: " + std::to_string(predicted.size()) +
                     " predictions for " + std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw DataError("evaluate: no samples");
  EvalReport r;
  r.metric = Metric::OA;
  r.count = static_cast<Index>(truth.size());
  std::map<std::string, std::size_t> slot;
  std::vector<double> hit, total;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(truth[i], r.classes.size());
    if (fresh) {
      r.classes.push_back(truth[i]);
      hit.push_back(0.0);
      total.push_back(0.0);
    }
    total[it->second] += 1.0;
    if (predicted[i] == truth[i]) {
      hit[it->second] += 1.0;
      ++correct;
    }
  }
  const double n = static_cast<double>(truth.size());
  r.value = 100.0 * static_cast<double>(correct) / n;
  r.std_dev = std::sqrt(r.value * (100.0 - r.value) / n);
  for (std::size_t c = 0; c < hit.size(); ++c) r.breakdown.push_back(100.0 * hit[c] / total[c]);
  return r;
}

EvalReport evaluate_values(const Matrix& predicted, const Matrix& truth, Metric metric) {
  if (metric == Metric::OA) throw UsageError("evaluate: OA needs class labels");
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
    throw UsageError("evaluate: prediction and truth shapes differ");
  if (truth.size() == 0) throw DataError("evaluate: no samples");
  EvalReport r;
  r.metric = metric;
  r.count = truth.rows();
  const Matrix diff = predicted - truth;
  const double l = static_cast<double>(truth.rows());
  r.value = diff.squaredNorm() / (l * static_cast<double>(truth.cols()));
  for (Index j = 0; j < truth.cols(); ++j) r.breakdown.push_back(diff.col(j).squaredNorm() / l);
  if (metric == Metric::RMSE) {
    r.value = std::sqrt(r.value);
    for (double& b : r.breakdown) b = std::sqrt(b);
  }
  return r;
}

double ls_reconstruction_mse(const Matrix& f, const Matrix& y) {
  if (f.rows() != y.rows()) throw UsageError("ls_reconstruction_mse: row counts differ");
  const Matrix fit = f * (pinv(f, 1e-12) * y);
  return (y - fit).squaredNorm() / (static_cast<double>(y.rows()) * static_cast<double>(y.cols()));
}

CrossValResult crossval_select(
    std::size_t grid_size, const std::vector<Fold>& folds,
    const std::function<double(std::size_t, const Fold&)>& score, bool higher_is_better,
    const std::function<std::string(std::size_t)>& describe) {
  if (grid_size == 0) throw UsageError("crossval: empty parameter grid");
  if (folds.size() < 2) throw UsageError("crossval: need at least 2 folds");
  CrossValResult r;
  r.table.assign(grid_size, std::vector<double>(folds.size(), 0.0));
  r.means.assign(grid_size, 0.0);
  for (std::size_t p = 0; p < grid_size; ++p) {
    for (std::size_t f = 0; f < folds.size(); ++f) {
      try {
        r.table[p][f] = score(p, folds[f]);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "crossval: grid point " << p;
        if (describe) os << " (" << describe(p) << ")";
        os << " failed on fold " << f << ": " << e.what();
        throw NumericalError(os.str());
      }
      r.means[p] += r.table[p][f];
    }
    r.means[p] /= static_cast<double>(folds.size());
  }
  for (std::size_t p = 1; p < grid_size; ++p) {
    const bool better = higher_is_better ? r.means[p] > r.means[r.best]
                                         : r.means[p] < r.means[r.best];
    if (better) r.best = p;
  }
  return r;
}

}  // namespace mvak
