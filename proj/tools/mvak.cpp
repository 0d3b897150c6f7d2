#include "mvak/benchmark.hpp"
#include "mvak/dependence.hpp"
#include "mvak/error.hpp"
#include "mvak/model_io.hpp"
#include "mvak/pipeline.hpp"
#include "mvak/toydata.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

using namespace mvak;
using nlohmann::json;

namespace {

struct DataArgs {
  std::string path;
  std::string delim = ",";
  bool header = false;
  std::optional<int> label_column;
  bool no_labels = false;
  std::string label_file;
  int targets = 0;

  void add(CLI::App* app, const std::string& flag, bool required = true) {
    auto* o = app->add_option(flag, path, "Delimited data file");
    if (required) o->required();
    app->add_option("--delim", delim, "Field delimiter")->capture_default_str();
    app->add_flag("--header", header, "First line is a header");
    app->add_option("--label-column", label_column,
                    "Column holding class labels, negative counts from the end (default -1)");
    app->add_flag("--no-labels", no_labels, "File has no label column");
    app->add_option("--labels", label_file, "Side file with one label per line");
    app->add_option("--targets", targets,
                    "Trailing numeric columns used as regression targets");
  }

  LoadOptions options() const {
    if (delim.size() != 1) throw UsageError("--delim must be a single character");
    LoadOptions o;
    o.delimiter = delim[0];
    o.header = header;
    if (!label_file.empty())
      o.label_file = label_file;
    else if (!no_labels && targets == 0)
      o.label_column = label_column.value_or(-1);
    o.target_columns = targets;
    return o;
  }

  Dataset load() const { return load_delimited(path, options()); }

  /// Without explicit label flags, a file exactly `dims` wide carries no labels.
  Dataset load_for(Index dims) {
    if (!label_column && !no_labels && label_file.empty() && targets == 0 && width() == dims)
      no_labels = true;
    return load();
  }

  Index width() const {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      return static_cast<Index>(std::count(line.begin(), line.end(), delim.empty() ? ',' : delim[0])) + 1;
    }
    return 0;
  }

  json echo() const {
    return {{"path", path}, {"delimiter", delim}, {"header", header},
            {"label_column", no_labels || targets > 0 ? json(nullptr) : json(label_column.value_or(-1))},
            {"label_file", label_file}, {"targets", targets}};
  }
};

struct MethodArgs {
  std::string method = "kopls";
  Index nf = 1;
  std::string kernel = "rbf";
  std::string sigma = "median";
  double eta = 0.0;
  bool cv_eta = false;
  int folds = 10;
  double beta = 0.5;
  Index r = 100;
  std::string variant;
  Index pool = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int q = 1;
  int g = 1;
  SsKccaParams ss;
  bool no_standardize = false;
  bool pre_project = false;
  std::string unlabeled;

  void add(CLI::App* app, bool single = true) {
    if (single) {
      app->add_option("--method", method, "Method tag (" + join_tags() + ")")->capture_default_str();
      app->add_option("--nf", nf, "Number of extracted features")->capture_default_str();
      app->add_flag("--cv-eta", cv_eta, "Cross-validate eta over the default grid");
      app->add_option("--variant", variant, "Sparse PLS variant")
          ->check(CLI::IsMember({"sma", "smc"}));
      app->add_option("--lambda", lambda, "Ridge term of the LS head")->capture_default_str();
      app->add_option("--unlabeled", unlabeled, "Unlabeled rows (ss-kCCA, cluster kernels)");
    }
    app->add_option("--kernel", kernel, "Kernel family")
        ->check(CLI::IsMember({"linear", "rbf", "cluster", "composite"}))
        ->capture_default_str();
    app->add_option("--sigma", sigma, "RBF width or 'median'")->capture_default_str();
    app->add_option("--eta", eta, "Regularization")->capture_default_str();
    app->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
    app->add_option("--beta", beta, "Composite kernel weight")->capture_default_str();
    app->add_option("--r", r, "Reduced-set basis size")->capture_default_str();
    app->add_option("--pool", pool, "Sparse PLS candidate pool (0: all)")->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--q", q, "Cluster kernel EM restarts")->capture_default_str();
    app->add_option("--g", g, "Cluster kernel count settings")->capture_default_str();
    app->add_option("--alpha-x", ss.alpha_x, "ss-kCCA input ridge")->capture_default_str();
    app->add_option("--alpha-y", ss.alpha_y, "ss-kCCA target ridge")->capture_default_str();
    app->add_option("--gamma-x", ss.gamma_x, "ss-kCCA input Laplacian weight")->capture_default_str();
    app->add_option("--gamma-y", ss.gamma_y, "ss-kCCA target Laplacian weight")->capture_default_str();
    app->add_option("--neighbors", ss.neighbors, "ss-kCCA graph neighbours")->capture_default_str();
    app->add_flag("--no-standardize", no_standardize, "Center inputs only");
    app->add_flag("--pre-project", pre_project, "PCA pre-projection for linear CCA/OPLS");
  }

  static std::string join_tags() {
    std::string s;
    for (const auto& t : method_tags()) s += (s.empty() ? "" : ", ") + t;
    return s;
  }

  MethodSpec spec() const {
    MethodSpec s;
    std::string tag = method;
    if (tag == "sparse") tag = variant.empty() ? "sma" : variant;
    s.method = parse_method(tag);
    if (!variant.empty()) {
      if (s.method != Method::SMA && s.method != Method::SMC)
        throw UsageError("--variant applies to sparse PLS only");
      s.method = parse_method(variant);
    }
    s.n_f = nf;
    s.standardize = !no_standardize;
    s.kernel.family = parse_kernel_family(kernel);
    if (sigma != "median") {
      std::size_t used = 0;
      try {
        s.kernel.sigma = std::stod(sigma, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != sigma.size()) throw UsageError("--sigma must be a number or 'median'");
    }
    s.kernel.beta = beta;
    s.kernel.q = q;
    s.kernel.g = g;
    s.kernel.seed = seed;
    s.eta = eta;
    s.linear.pre_project = pre_project;
    s.r = r;
    s.pool = pool;
    s.seed = seed;
    s.ss.alpha_x = ss.alpha_x;
    s.ss.alpha_y = ss.alpha_y;
    s.ss.gamma_x = ss.gamma_x;
    s.ss.gamma_y = ss.gamma_y;
    s.ss.neighbors = ss.neighbors;
    s.validate();
    if (folds < 2) throw UsageError("--folds must be >= 2");
    if (!(lambda >= 0.0)) throw UsageError("--lambda must be >= 0");
    return s;
  }
};

json echo_spec(const MethodSpec& s, double lambda) {
  json j = {{"method", to_string(s.method)},
            {"nf", s.n_f},
            {"standardize", s.standardize},
            {"eta", s.eta},
            {"seed", s.seed},
            {"lambda", lambda}};
  if (is_kernel_method(s.method)) {
    j["kernel"] = to_string(s.kernel.family);
    j["sigma"] = s.kernel.sigma ? json(*s.kernel.sigma) : json(nullptr);
    if (s.kernel.family == KernelFamily::Composite) j["beta"] = s.kernel.beta;
    if (s.kernel.family != KernelFamily::Linear && s.kernel.family != KernelFamily::Rbf) {
      j["q"] = s.kernel.q;
      j["g"] = s.kernel.g;
    }
  }
  if (s.method == Method::RKPCA || s.method == Method::RKCCA || s.method == Method::RKOPLS)
    j["r"] = s.r;
  if (s.method == Method::SMA || s.method == Method::SMC) j["pool"] = s.pool;
  if (s.method == Method::SSKCCA)
    j["ss"] = {{"alpha_x", s.ss.alpha_x}, {"alpha_y", s.ss.alpha_y}, {"gamma_x", s.ss.gamma_x},
               {"gamma_y", s.ss.gamma_y}, {"neighbors", s.ss.neighbors}};
  if (s.method == Method::CCA || s.method == Method::OPLS) j["pre_project"] = s.linear.pre_project;
  return j;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataError("cannot write " + path);
    }
    out().precision(std::numeric_limits<double>::max_digits10);
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_config(std::ostream& os, const json& config) { os << "# config: " << config.dump() << '\n'; }

void write_matrix(std::ostream& os, const Matrix& m, const std::string& prefix) {
  for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << prefix << (j + 1);
  os << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
}

void check_dims(const Extractor& e, const Dataset& ds) {
  if (ds.dims() != e.input_dims())
    throw DataError("data has " + std::to_string(ds.dims()) + " input columns, model expects " +
                    std::to_string(e.input_dims()));
}

Matrix load_numeric(const std::string& path, const std::string& delim, bool header) {
  DataArgs a;
  a.path = path;
  a.delim = delim;
  a.header = header;
  a.no_labels = true;
  return a.load().x;
}

std::vector<std::string> load_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ commands

struct FitArgs {
  DataArgs data;
  MethodArgs method;
  std::string out;
  std::string report;
  std::string encoding = "binary";
};

void cmd_fit(const FitArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  MethodSpec spec = a.method.spec();
  const Dataset train = a.data.load();
  Matrix unlabeled;
  if (!a.method.unlabeled.empty()) unlabeled = load_numeric(a.method.unlabeled, a.data.delim, false);
  const Matrix* ul = unlabeled.size() ? &unlabeled : nullptr;
  if (ul && ul->cols() != train.dims()) throw DataError("unlabeled rows differ in width from training data");
  spec = resolve_sigma(spec, train.x);
  json cv;
  if (a.method.cv_eta && uses_eta(spec.method)) {
    if (!train.has_labels()) throw UsageError("--cv-eta needs class labels");
    const EtaSelection sel = select_eta(spec, train, a.method.folds, spec.seed);
    spec.eta = sel.eta;
    cv = {{"grid", sel.grid}, {"mean_oa", sel.cv.means}, {"folds", a.method.folds}};
  }
  ModelFile mf;
  if (train.has_labels() && a.data.targets == 0) {
    const Classifier c = fit_classifier(spec, train, a.method.lambda, ul);
    mf.extractor = c.extractor;
    mf.head = c.head;
  } else {
    if (is_supervised(spec.method) && train.y.size() == 0)
      throw DataError(to_string(spec.method) + " needs labels or --targets");
    mf.extractor = fit_extractor(spec, train.x, train.y, ul);
    if (train.y.size()) mf.head = fit_ls_targets(mf.extractor.transform(train.x), train.y, a.method.lambda);
  }
  json config = {{"command", "fit"}, {"data", a.data.echo()}, {"spec", echo_spec(spec, a.method.lambda)}};
  if (!a.method.unlabeled.empty()) config["unlabeled"] = a.method.unlabeled;
  mf.config = config;
  if (a.encoding != "binary" && a.encoding != "decimal") throw UsageError("--encoding is binary or decimal");
  save_model(a.out, mf, a.encoding == "binary" ? Encoding::Binary : Encoding::Decimal);

  const double residual = constraint_residual(mf.extractor, train.x);
  const Vector ev = mf.extractor.eigenvalues();
  json report = {{"config", config},
                 {"model", a.out},
                 {"features", mf.extractor.features()},
                 {"eigenvalues", std::vector<double>(ev.data(), ev.data() + ev.size())},
                 {"constraint_residual", std::isnan(residual) ? json(nullptr) : json(residual)},
                 {"warnings", mf.extractor.warnings()},
                 {"seconds", seconds_since(t0)}};
  if (!cv.is_null()) report["eta_cv"] = cv;
  for (const auto& w : mf.extractor.warnings()) std::cerr << "warning: " << w << '\n';
  Output o(a.report);
  o.out() << report.dump(2) << '\n';
}

struct ApplyArgs {
  std::string model;
  DataArgs data;
  std::string out;
};

void cmd_transform(const ApplyArgs& a) {
  const ModelFile mf = load_model(a.model);
  DataArgs d = a.data;
  const Dataset ds = d.load_for(mf.extractor.input_dims());
  check_dims(mf.extractor, ds);
  const Matrix f = mf.extractor.transform(ds.x);
  Output o(a.out);
  write_config(o.out(), {{"command", "transform"}, {"model", a.model}, {"data", d.echo()},
                         {"fit", mf.config}});
  write_matrix(o.out(), f, "f");
}

void cmd_predict(const ApplyArgs& a) {
  const ModelFile mf = load_model(a.model);
  if (!mf.head) throw UsageError("model has no prediction head (fit without labels or targets)");
  DataArgs d = a.data;
  const Dataset ds = d.load_for(mf.extractor.input_dims());
  check_dims(mf.extractor, ds);
  const Matrix f = mf.extractor.transform(ds.x);
  Output o(a.out);
  write_config(o.out(), {{"command", "predict"}, {"model", a.model}, {"data", d.echo()},
                         {"fit", mf.config}});
  if (mf.head->is_classifier()) {
    o.out() << "label\n";
    for (const auto& s : predict_labels(*mf.head, f)) o.out() << s << '\n';
  } else {
    write_matrix(o.out(), mf.head->predict(f), "y");
  }
}

struct EvalArgs {
  std::string model;
  DataArgs data;
  std::string predicted;
  std::string truth;
  std::string metric = "oa";
  std::string out;
};

void cmd_eval(const EvalArgs& a) {
  const Metric metric = parse_metric(a.metric);
  EvalReport r;
  json config = {{"command", "eval"}, {"metric", to_string(metric)}};
  if (!a.model.empty()) {
    if (a.data.path.empty()) throw UsageError("eval --model needs --data");
    const ModelFile mf = load_model(a.model);
    if (!mf.head) throw UsageError("model has no prediction head");
    const Dataset ds = a.data.load();
    check_dims(mf.extractor, ds);
    const Matrix f = mf.extractor.transform(ds.x);
    if (metric == Metric::OA) {
      if (!ds.has_labels()) throw DataError("eval: data has no labels");
      r = evaluate_labels(predict_labels(*mf.head, f), ds.labels);
    } else {
      if (ds.y.size() == 0) throw DataError("eval: data has no --targets columns");
      r = evaluate_values(mf.head->predict(f), ds.y, metric);
    }
    config["model"] = a.model;
    config["data"] = a.data.echo();
  } else {
    if (a.predicted.empty() || a.truth.empty())
      throw UsageError("eval needs --model and --data, or --predicted and --truth");
    if (metric == Metric::OA) {
      r = evaluate_labels(load_lines(a.predicted), load_lines(a.truth));
    } else {
      r = evaluate_values(load_numeric(a.predicted, ",", false), load_numeric(a.truth, ",", false),
                          metric);
    }
    config["predicted"] = a.predicted;
    config["truth"] = a.truth;
  }
  Output o(a.out);
  write_config(o.out(), config);
  o.out() << "metric,value,std,count\n"
          << to_string(r.metric) << ',' << r.value << ',' << r.std_dev << ',' << r.count << '\n';
}

struct CrossvalArgs {
  DataArgs data;
  MethodArgs method;
  std::string out;
};

void cmd_crossval(const CrossvalArgs& a) {
  MethodSpec spec = a.method.spec();
  const Dataset train = a.data.load();
  if (!train.has_labels()) throw DataError("crossval needs class labels");
  spec = resolve_sigma(spec, train.x);
  const EtaSelection sel = select_eta(spec, train, a.method.folds, spec.seed);
  spec.eta = sel.eta;
  Output o(a.out);
  write_config(o.out(), {{"command", "crossval"}, {"data", a.data.echo()},
                         {"spec", echo_spec(spec, a.method.lambda)}, {"folds", a.method.folds}});
  o.out() << "eta,fold,oa,selected\n";
  for (std::size_t p = 0; p < sel.grid.size(); ++p) {
    const int chosen = p == sel.cv.best ? 1 : 0;
    for (std::size_t f = 0; f < sel.cv.table[p].size(); ++f)
      o.out() << sel.grid[p] << ',' << f << ',' << sel.cv.table[p][f] << ',' << chosen << '\n';
    o.out() << sel.grid[p] << ",mean," << sel.cv.means[p] << ',' << chosen << '\n';
  }
}

struct BenchArgs {
  std::vector<std::string> data;
  std::string manifest;
  std::string data_dir = ".";
  std::vector<std::string> methods{"pca", "opls", "kpca", "kopls"};
  std::vector<Index> nf;
  MethodArgs method;
  int repeats = 1;
  double ratio = 0.6;
  Index max_train = 500;
  bool no_stratify = false;
  bool fixed_eta = false;
  bool manifest_cells = false;
  std::string out;
};

void cmd_benchmark(const BenchArgs& a) {
  BenchmarkConfig cfg;
  json sources = json::array();
  for (const auto& item : a.data) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--data expects name=path");
    DataArgs d;
    d.path = item.substr(eq + 1);
    cfg.datasets.push_back({item.substr(0, eq), d.load()});
    sources.push_back({{"name", item.substr(0, eq)}, {"path", d.path}});
  }
  Manifest manifest;
  if (a.manifest_cells && a.manifest.empty()) throw UsageError("--manifest-cells needs --manifest");
  if (!a.manifest.empty()) {
    const Manifest& m = manifest = load_manifest(a.manifest);
    const auto dir = std::filesystem::path(a.manifest).parent_path();
    for (const auto& md : m.datasets) {
      const auto p = resolve_source(md, dir, a.data_dir);
      if (!p) {
        std::cerr << "skipping " << md.name << ": " << md.source << " not found\n";
        continue;
      }
      LoadOptions lo;
      lo.header = md.header;
      lo.label_column = md.label_column;
      cfg.datasets.push_back({md.name, load_delimited(*p, lo)});
      sources.push_back({{"name", md.name}, {"path", p->string()}});
    }
  }
  if (cfg.datasets.empty()) throw DataError("benchmark: no dataset could be loaded");
  for (const auto& t : a.methods) cfg.methods.push_back(parse_method(t));
  cfg.n_f = a.nf;
  cfg.folds = a.method.folds;
  cfg.train_ratio = a.ratio;
  if (a.max_train > 0)
    cfg.max_train = a.max_train;
  else
    cfg.max_train.reset();
  cfg.stratified = !a.no_stratify;
  cfg.seed = a.method.seed;
  cfg.repeats = a.repeats;
  const MethodSpec base = a.method.spec();
  cfg.kernel = base.kernel;
  cfg.r = a.method.r;
  cfg.pool = a.method.pool;
  cfg.cv_eta = !a.fixed_eta;
  cfg.eta = a.method.eta;
  std::vector<BenchRow> rows;
  if (a.manifest_cells) {
    for (const auto& e : manifest.expected) {
      BenchmarkConfig one = cfg;
      one.datasets.clear();
      for (const auto& d : cfg.datasets)
        if (d.name == e.dataset) one.datasets.push_back(d);
      if (one.datasets.empty()) continue;
      one.methods = {parse_method(e.method)};
      one.n_f = {e.n_f};
      const auto part = run_benchmark(one);
      rows.insert(rows.end(), part.begin(), part.end());
    }
  } else {
    rows = run_benchmark(cfg);
  }
  Output o(a.out);
  json methods = a.methods;
  write_config(o.out(), {{"command", "benchmark"},
                         {"datasets", sources},
                         {"methods", a.manifest_cells ? json("manifest") : methods},
                         {"nf", a.nf},
                         {"folds", cfg.folds},
                         {"ratio", cfg.train_ratio},
                         {"max_train", a.max_train},
                         {"stratified", cfg.stratified},
                         {"seed", cfg.seed},
                         {"repeats", cfg.repeats},
                         {"kernel", to_string(cfg.kernel.family)},
                         {"sigma", cfg.kernel.sigma ? json(*cfg.kernel.sigma) : json("median")},
                         {"r", cfg.r},
                         {"pool", cfg.pool},
                         {"cv_eta", cfg.cv_eta},
                         {"eta", cfg.eta}});
  write_rows(o.out(), rows);
  int failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  if (failed) std::cerr << failed << " of " << rows.size() << " cells failed\n";
}

struct VerifyArgs {
  std::string manifest;
  std::string results;
  bool available_only = false;
};

int cmd_verify(const VerifyArgs& a) {
  Manifest m = load_manifest(a.manifest);
  std::ifstream in(a.results);
  if (!in) throw DataError("cannot open " + a.results);
  const auto rows = read_rows(in);
  if (a.available_only) {
    std::erase_if(m.expected, [&](const ManifestExpectation& e) {
      return std::none_of(rows.begin(), rows.end(),
                          [&](const BenchRow& r) { return r.dataset == e.dataset; });
    });
    if (m.expected.empty()) throw DataError("verify: results cover none of the manifest datasets");
  }
  const VerifyReport rep = verify_manifest(m, rows);
  std::cout << "status,dataset,method,n_f,observed,expected,tolerance,delta,provenance\n";
  for (const auto& e : rep.entries) {
    const auto& x = e.expectation;
    std::string prov = x.provenance;
    std::replace(prov.begin(), prov.end(), ',', ';');
    std::cout << (e.pass ? "PASS" : "FAIL") << ',' << x.dataset << ',' << x.method << ',' << x.n_f
              << ',' << e.observed << ',' << x.value << ',' << x.tolerance << ',' << e.delta << ','
              << prov << '\n';
  }
  return rep.pass() ? 0 : 4;
}

struct ToyArgs {
  ToyOptions opts;
  std::string out;
};

void cmd_toydata(const ToyArgs& a) {
  const Dataset ds = make_toy(a.opts);
  if (a.out.empty()) {
    std::cout.precision(std::numeric_limits<double>::max_digits10);
    for (Index i = 0; i < ds.rows(); ++i)
      std::cout << ds.x(i, 0) << ',' << ds.x(i, 1) << ',' << ds.labels[static_cast<std::size_t>(i)]
                << '\n';
  } else {
    save_delimited(a.out, ds);
  }
}

struct HsicArgs {
  std::string x;
  std::string y;
  std::string delim = ",";
  std::string kernel = "rbf";
  std::string sigma = "median";
  int permutations = 0;
  std::uint64_t seed = 0;
  bool no_standardize = false;
};

void cmd_hsic(const HsicArgs& a) {
  if (a.permutations < 0) throw UsageError("--permutations must be >= 0");
  const Matrix x = load_numeric(a.x, a.delim, false);
  const Matrix y = load_numeric(a.y, a.delim, false);
  if (x.rows() != y.rows())
    throw DataError("hsic: " + std::to_string(x.rows()) + " rows in --x but " +
                    std::to_string(y.rows()) + " in --y");
  const auto gram_of = [&](const Matrix& m, double& sigma_out) {
    const Matrix s = center_fit_apply(m, !a.no_standardize).first;
    KernelConfig cfg;
    cfg.family = parse_kernel_family(a.kernel);
    if (cfg.family != KernelFamily::Linear && cfg.family != KernelFamily::Rbf)
      throw UsageError("hsic supports linear and rbf kernels");
    if (a.sigma != "median") cfg.sigma = std::stod(a.sigma);
    cfg.seed = a.seed;
    const Kernel k = resolve_kernel(cfg, s);
    sigma_out = k.sigma();
    return center_train(k.gram(s, s)).k;
  };
  double sx = 0.0, sy = 0.0;
  const Matrix kx = gram_of(x, sx);
  const Matrix ky = gram_of(y, sy);
  const DependenceReport r = hsic(kx, ky);
  std::cout.precision(std::numeric_limits<double>::max_digits10);
  json config = {{"command", "hsic"}, {"x", a.x}, {"y", a.y}, {"kernel", a.kernel},
                 {"standardize", !a.no_standardize}, {"permutations", a.permutations},
                 {"seed", a.seed}};
  if (a.kernel == "rbf") config["sigma"] = {sx, sy};
  write_config(std::cout, config);
  std::cout << "statistic,value\nhsic," << r.value << '\n';
  if (a.permutations > 0)
    std::cout << "p_value," << hsic_permutation_pvalue(kx, ky, a.permutations, a.seed) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate feature extraction: linear, kernel, sparse and semi-supervised"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a feature extractor and save it");
  fit.data.add(fit_cmd, "--data");
  fit.method.add(fit_cmd);
  fit_cmd->add_option("--out", fit.out, "Model file")->required();
  fit_cmd->add_option("--report", fit.report, "Fit report (JSON); stdout when omitted");
  fit_cmd->add_option("--encoding", fit.encoding, "binary or decimal")->capture_default_str();

  ApplyArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "Extract features with a saved model");
  tr_cmd->add_option("--model", tr.model, "Model file")->required();
  tr.data.add(tr_cmd, "--data");
  tr_cmd->add_option("--out", tr.out, "Output table; stdout when omitted");

  ApplyArgs pr;
  auto* pr_cmd = app.add_subcommand("predict", "Predict labels or targets with a saved model");
  pr_cmd->add_option("--model", pr.model, "Model file")->required();
  pr.data.add(pr_cmd, "--data");
  pr_cmd->add_option("--out", pr.out, "Output table; stdout when omitted");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "Score predictions (OA with binomial std, MSE, RMSE)");
  ev_cmd->add_option("--model", ev.model, "Model file");
  ev.data.add(ev_cmd, "--data", false);
  ev_cmd->add_option("--predicted", ev.predicted, "Predicted labels or values");
  ev_cmd->add_option("--truth", ev.truth, "True labels or values");
  ev_cmd->add_option("--metric", ev.metric, "oa, mse or rmse")->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Output table; stdout when omitted");

  CrossvalArgs cv;
  auto* cv_cmd = app.add_subcommand("crossval", "Cross-validate eta for a method");
  cv.data.add(cv_cmd, "--data");
  cv.method.add(cv_cmd);
  cv_cmd->add_option("--out", cv.out, "Output table; stdout when omitted");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run the evaluation protocol over datasets and methods");
  bench_cmd->add_option("--data", bench.data, "name=path of a labelled data file (label last)");
  bench_cmd->add_option("--manifest", bench.manifest, "Benchmark manifest");
  bench_cmd->add_option("--data-dir", bench.data_dir, "Directory of user-supplied datasets")
      ->capture_default_str();
  bench_cmd->add_option("--methods,--method", bench.methods, "Method tags")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--nf", bench.nf, "Feature counts (default c-1)")->delimiter(',');
  bench.method.add(bench_cmd, false);
  bench_cmd->add_option("--repeats", bench.repeats, "Seeds per cell")->capture_default_str();
  bench_cmd->add_option("--ratio", bench.ratio, "Training share")->capture_default_str();
  bench_cmd->add_option("--max-train", bench.max_train, "Training cap (0: none)")->capture_default_str();
  bench_cmd->add_flag("--no-stratify", bench.no_stratify, "Plain random split");
  bench_cmd->add_flag("--fixed-eta", bench.fixed_eta, "Use --eta instead of cross-validating");
  bench_cmd->add_flag("--manifest-cells", bench.manifest_cells,
                      "Run exactly the manifest's expected cells instead of the method sweep");
  bench_cmd->add_option("--out", bench.out, "Output table; stdout when omitted");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Compare benchmark results with manifest envelopes");
  ver_cmd->add_option("--manifest", ver.manifest, "Benchmark manifest")->required();
  ver_cmd->add_option("--results", ver.results, "Table written by benchmark")->required();
  ver_cmd->add_flag("--available-only", ver.available_only,
                    "Skip expectations whose dataset has no result rows");

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toydata", "Generate the three-class sinusoid toy data");
  toy_cmd->add_option("--seed", toy.opts.seed, "Random seed")->capture_default_str();
  toy_cmd->add_option("--per-class", toy.opts.per_class, "Samples per class")->capture_default_str();
  toy_cmd->add_option("--noise", toy.opts.noise, "Gaussian noise std")->capture_default_str();
  toy_cmd->add_option("--out", toy.out, "Output file; stdout when omitted");

  HsicArgs hs;
  auto* hs_cmd = app.add_subcommand("hsic", "Hilbert-Schmidt independence statistic");
  hs_cmd->add_option("--x", hs.x, "First numeric file")->required();
  hs_cmd->add_option("--y", hs.y, "Second numeric file")->required();
  hs_cmd->add_option("--delim", hs.delim, "Field delimiter")->capture_default_str();
  hs_cmd->add_option("--kernel", hs.kernel, "linear or rbf")->capture_default_str();
  hs_cmd->add_option("--sigma", hs.sigma, "RBF width or 'median'")->capture_default_str();
  hs_cmd->add_option("--permutations", hs.permutations, "Permutation count for a p-value")
      ->capture_default_str();
  hs_cmd->add_option("--seed", hs.seed, "Permutation seed")->capture_default_str();
  hs_cmd->add_flag("--no-standardize", hs.no_standardize, "Center inputs only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*fit_cmd) cmd_fit(fit);
    else if (*tr_cmd) cmd_transform(tr);
    else if (*pr_cmd) cmd_predict(pr);
    else if (*ev_cmd) cmd_eval(ev);
    else if (*cv_cmd) cmd_crossval(cv);
    else if (*bench_cmd) cmd_benchmark(bench);
    else if (*ver_cmd) return cmd_verify(ver);
    else if (*toy_cmd) cmd_toydata(toy);
    else if (*hs_cmd) cmd_hsic(hs);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
