#include "mvak/pipeline.hpp"

#include "mvak/error.hpp"

#include <array>
#include <cmath>

namespace mvak {

namespace {

struct Tag {
  Method method;
  const char* name;
};

constexpr std::array<Tag, 15> kTags{{
    {Method::PCA, "pca"},       {Method::PLS2, "pls2"},     {Method::CCA, "cca"},
    {Method::OPLS, "opls"},     {Method::KPCA, "kpca"},     {Method::KPLS2, "kpls2"},
    {Method::KCCA, "kcca"},     {Method::KOPLS, "kopls"},   {Method::HSCA, "hsca"},
    {Method::RKPCA, "rkpca"},   {Method::RKCCA, "rkcca"},   {Method::RKOPLS, "rkopls"},
    {Method::SMA, "sma"},       {Method::SMC, "smc"},       {Method::SSKCCA, "sskcca"},
}};

LinearMethod linear_of(Method m) {
  switch (m) {
    case Method::PCA: return LinearMethod::PCA;
    case Method::PLS2: return LinearMethod::PLS2;
    case Method::CCA: return LinearMethod::CCA;
    default: return LinearMethod::OPLS;
  }
}

KernelMethod kernel_of(Method m) {
  switch (m) {
    case Method::KPCA: return KernelMethod::KPCA;
    case Method::KPLS2: return KernelMethod::KPLS2;
    case Method::KCCA: return KernelMethod::KCCA;
    case Method::HSCA: return KernelMethod::HSCA;
    default: return KernelMethod::KOPLS;
  }
}

ReducedMethod reduced_of(Method m) {
  switch (m) {
    case Method::RKPCA: return ReducedMethod::RKPCA;
    case Method::RKCCA: return ReducedMethod::RKCCA;
    default: return ReducedMethod::RKOPLS;
  }
}

Kernel resolve_for(const MethodSpec& spec, const Matrix& x, const Matrix* unlabeled) {
  auto [xs, stats] = center_fit_apply(x, spec.standardize);
  if (unlabeled && unlabeled->rows() > 0) {
    const Matrix us = stats.apply(*unlabeled);
    return resolve_kernel(spec.kernel, xs, &us);
  }
  return resolve_kernel(spec.kernel, xs);
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& t : kTags)
    if (t.method == m) return t.name;
  return "?";
}

std::vector<std::string> method_tags() {
  std::vector<std::string> out;
  for (const auto& t : kTags) out.emplace_back(t.name);
  return out;
}

Method parse_method(std::string_view s) {
  for (const auto& t : kTags)
    if (s == t.name) return t.method;
  std::string valid;
  for (const auto& t : kTags) {
    if (!valid.empty()) valid += ", ";
    valid += t.name;
  }
  throw UsageError("unknown method '" + std::string(s) + "' (valid: " + valid + ")");
}

bool is_supervised(Method m) { return m != Method::PCA && m != Method::KPCA && m != Method::RKPCA; }

bool is_kernel_method(Method m) {
  switch (m) {
    case Method::PCA:
    case Method::PLS2:
    case Method::CCA:
    case Method::OPLS: return false;
    default: return true;
  }
}

bool uses_eta(Method m) {
  switch (m) {
    case Method::KCCA:
    case Method::KOPLS:
    case Method::HSCA:
    case Method::RKCCA:
    case Method::RKOPLS: return true;
    default: return false;
  }
}

void MethodSpec::validate() const {
  if (n_f < 1) throw UsageError("n_f must be >= 1");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw UsageError("eta must be >= 0");
  if (r < 1) throw UsageError("r must be >= 1");
  if (pool < 0) throw UsageError("pool must be >= 0");
  kernel.validate();
  linear.solver.validate();
}

Matrix Extractor::transform(const Matrix& x) const {
  return std::visit([&](const auto& m) -> Matrix {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, SparsePLSModel>)
      return m.model.transform(x);
    else
      return m.transform(x);
  }, model);
}

Index Extractor::features() const {
  return std::visit([](const auto& m) { return m.features(); }, model);
}

Index Extractor::input_dims() const {
  return std::visit([](const auto& m) -> Index {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, SparsePLSModel>)
      return m.model.input_dims();
    else
      return m.input_dims();
  }, model);
}

Vector Extractor::eigenvalues() const {
  return std::visit([](const auto& m) -> Vector {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, SparsePLSModel>)
      return m.model.eigenvalues;
    else
      return m.eigenvalues;
  }, model);
}

const std::vector<std::string>& Extractor::warnings() const {
  return std::visit([](const auto& m) -> const std::vector<std::string>& {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, SparsePLSModel>)
      return m.model.warnings;
    else
      return m.warnings;
  }, model);
}

const Kernel* Extractor::kernel() const {
  return std::visit([](const auto& m) -> const Kernel* {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, LinearModel>)
      return nullptr;
    else if constexpr (std::is_same_v<T, SparsePLSModel>)
      return &m.model.kernel;
    else
      return &m.kernel;
  }, model);
}

double constraint_residual(const Extractor& e, const Matrix& x) {
  const auto dev = [](const Matrix& g) {
    return g.size() ? (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() : 0.0;
  };
  const double l = static_cast<double>(x.rows());
  if (const auto* m = std::get_if<LinearModel>(&e.model)) {
    Matrix xp = m->x_stats.apply(x);
    if (m->pre_projection.size()) xp = xp * m->pre_projection;
    switch (m->method) {
      case LinearMethod::PCA: return dev(m->u.transpose() * m->u);
      case LinearMethod::PLS2: return dev(m->weights.transpose() * m->weights);
      default: {
        const Matrix f = xp * m->u;
        return dev(f.transpose() * f / l);
      }
    }
  }
  if (const auto* m = std::get_if<KernelModel>(&e.model)) {
    const Matrix k = center_train(m->kernel.gram(m->basis, m->basis)).k;
    switch (m->method) {
      case KernelMethod::KPCA: return dev(m->a.transpose() * k * m->a);
      case KernelMethod::KPLS2: return dev(m->dual_weights.transpose() * k * m->dual_weights);
      case KernelMethod::SSKCCA: return NAN;
      case KernelMethod::HSCA: {
        // unit norm per direction, orthogonal training features
        const Matrix ka = k * m->a;
        const Matrix b = (ka.transpose() * ka + m->eta * m->a.transpose() * ka) / l;
        Matrix g = ka.transpose() * ka / l;
        g.diagonal() = b.diagonal();
        return dev(g);
      }
      default: {
        const Matrix ka = k * m->a;
        return dev((ka.transpose() * ka + m->eta * m->a.transpose() * ka) / l);
      }
    }
  }
  if (const auto* m = std::get_if<ReducedSetModel>(&e.model)) {
    const Matrix krr = m->kernel.gram(m->basis, m->basis);
    if (m->method == ReducedMethod::RKPCA) return dev(m->beta.transpose() * krr * m->beta);
    Matrix klr = m->kernel.gram(m->x_stats.apply(x), m->basis);
    klr.rowwise() -= m->col_means.transpose();
    const Matrix f = klr * m->beta;
    return dev((f.transpose() * f + m->eta * m->beta.transpose() * krr * m->beta) / l);
  }
  return NAN;
}

Extractor fit_extractor(const MethodSpec& spec, const Matrix& x, const Matrix& y,
                        const Matrix* unlabeled) {
  spec.validate();
  if (x.rows() < 2) throw DataError("fit: need at least two training rows");
  if (is_supervised(spec.method) && y.rows() != x.rows())
    throw DataError(to_string(spec.method) + " needs labels or targets for every row");
  Extractor out;
  out.method = spec.method;
  KernelFitOptions kopts;
  kopts.eta = spec.eta;
  kopts.solver = spec.linear.solver;
  switch (spec.method) {
    case Method::PCA:
    case Method::PLS2:
    case Method::CCA:
    case Method::OPLS:
      out.model = fit_linear(linear_of(spec.method), x, y, spec.n_f, spec.standardize,
                             spec.linear);
      break;
    case Method::KPCA:
    case Method::KPLS2:
    case Method::KCCA:
    case Method::KOPLS:
    case Method::HSCA:
      out.model = fit_kernel(kernel_of(spec.method), resolve_for(spec, x, unlabeled), x, y,
                             spec.n_f, spec.standardize, kopts);
      break;
    case Method::RKPCA:
    case Method::RKCCA:
    case Method::RKOPLS: {
      RkOptions ro;
      ro.r = spec.r;
      ro.seed = spec.seed;
      ro.eta = spec.eta;
      ro.solver = spec.linear.solver;
      out.model = fit_rk(reduced_of(spec.method), resolve_for(spec, x, unlabeled), x, y,
                         spec.n_f, spec.standardize, ro);
      break;
    }
    case Method::SMA:
    case Method::SMC:
      out.model = fit_sparse_pls(spec.method == Method::SMA ? SparseVariant::SMA
                                                            : SparseVariant::SMC,
                                 resolve_for(spec, x, unlabeled), x, y, spec.n_f,
                                 spec.pool > 0 ? std::min(spec.pool, x.rows()) : x.rows(),
                                 spec.seed, spec.standardize);
      break;
    case Method::SSKCCA: {
      const Matrix none(0, x.cols());
      out.model = fit_sskcca(resolve_for(spec, x, unlabeled), x, y,
                             unlabeled ? *unlabeled : none, spec.n_f, spec.standardize,
                             spec.ss);
      break;
    }
  }
  return out;
}

std::vector<std::string> Classifier::predict(const Matrix& x) const {
  return predict_labels(head, extractor.transform(x));
}

Classifier fit_classifier(const MethodSpec& spec, const Dataset& train, double lambda,
                          const Matrix* unlabeled) {
  if (!train.has_labels()) throw DataError("classifier: training data has no labels");
  const LabelEncoding enc = encode_labels(train.labels);
  Classifier c;
  c.extractor = fit_extractor(spec, train.x, enc.indicator, unlabeled);
  c.head = fit_ls_classifier(c.extractor.transform(train.x), enc, lambda);
  return c;
}

MethodSpec resolve_sigma(MethodSpec spec, const Matrix& x) {
  const bool rbf_like = spec.kernel.family == KernelFamily::Rbf ||
                        spec.kernel.family == KernelFamily::Composite;
  if (is_kernel_method(spec.method) && rbf_like && !spec.kernel.sigma)
    spec.kernel.sigma = median_bandwidth(center_fit_apply(x, spec.standardize).first,
                                         spec.kernel.seed);
  return spec;
}

std::vector<double> eta_grid(const MethodSpec& spec, const Matrix& x) {
  std::vector<double> grid{0.0};
  if (!uses_eta(spec.method)) return grid;
  const MethodSpec s = resolve_sigma(spec, x);
  const Matrix xs = center_fit_apply(x, s.standardize).first;
  const Kernel k = resolve_kernel(s.kernel, xs);
  const double scale = center_train(k.gram(xs, xs)).k.trace() / static_cast<double>(x.rows());
  for (double e : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) grid.push_back(e * scale);
  return grid;
}

EtaSelection select_eta(MethodSpec spec, const Dataset& train, int folds, std::uint64_t seed) {
  if (!train.has_labels()) throw DataError("select_eta: training data has no labels");
  spec = resolve_sigma(spec, train.x);
  EtaSelection out;
  out.grid = eta_grid(spec, train.x);
  const auto split = kfold(train.rows(), folds, seed);
  out.cv = crossval_select(
      out.grid.size(), split,
      [&](std::size_t p, const Fold& f) {
        MethodSpec s = spec;
        s.eta = out.grid[p];
        const Dataset tr = subset(train, f.train);
        const Dataset va = subset(train, f.validation);
        const Classifier c = fit_classifier(s, tr);
        return evaluate_labels(c.predict(va.x), va.labels).value;
      },
      true, [&](std::size_t p) { return "eta=" + std::to_string(out.grid[p]); });
  out.eta = out.grid[out.cv.best];
  return out;
}

}  // namespace mvak
