#include "mvak/benchmark.hpp"

#include "mvak/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

namespace mvak {

using nlohmann::json;

BenchRow run_cell(const BenchDataset& ds, Method method, Index n_f, std::uint64_t seed,
                  const BenchmarkConfig& cfg) {
  BenchRow row;
  row.dataset = ds.name;
  row.method = to_string(method);
  row.n_f = n_f;
  row.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SplitOptions so;
    so.ratio = cfg.train_ratio;
    so.max_train = cfg.max_train;
    so.stratified = cfg.stratified;
    auto [train, test] = split(ds.data, so, seed);
    row.l_train = train.rows();
    row.l_test = test.rows();
    MethodSpec spec;
    spec.method = method;
    spec.n_f = n_f;
    spec.kernel = cfg.kernel;
    spec.kernel.seed = seed;
    spec.r = std::min<Index>(cfg.r, train.rows());
    spec.pool = cfg.pool;
    spec.seed = seed;
    spec.eta = cfg.eta;
    if (method == Method::CCA || method == Method::OPLS) spec.linear.pre_project = true;
    spec = resolve_sigma(spec, train.x);
    if (spec.kernel.sigma) row.sigma = *spec.kernel.sigma;
    if (cfg.cv_eta && uses_eta(method)) spec.eta = select_eta(spec, train, cfg.folds, seed).eta;
    row.eta = spec.eta;
    const Classifier c = fit_classifier(spec, train);
    row.n_f_used = c.extractor.features();
    const EvalReport r = evaluate_labels(c.predict(test.x), test.labels);
    row.oa = r.value;
    row.std_dev = r.std_dev;
  } catch (const std::exception& e) {
    row.status = "error";
    row.message = e.what();
  }
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::vector<BenchRow> run_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.datasets.empty()) throw UsageError("benchmark: no datasets");
  if (cfg.methods.empty()) throw UsageError("benchmark: no methods");
  if (cfg.repeats < 1) throw UsageError("benchmark: repeats must be >= 1");
  struct Cell {
    const BenchDataset* ds;
    Method method;
    Index n_f;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& ds : cfg.datasets) {
    if (!ds.data.has_labels()) throw DataError("benchmark: dataset " + ds.name + " has no labels");
    std::vector<Index> sweep = cfg.n_f;
    if (sweep.empty()) sweep.push_back(encode_labels(ds.data.labels).num_classes() - 1);
    for (Method m : cfg.methods)
      for (Index nf : sweep)
        for (int rep = 0; rep < cfg.repeats; ++rep)
          cells.push_back({&ds, m, nf, cfg.seed + static_cast<std::uint64_t>(rep)});
  }
  std::vector<BenchRow> rows(cells.size());
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Cell& c = cells[static_cast<std::size_t>(i)];
    rows[static_cast<std::size_t>(i)] = run_cell(*c.ds, c.method, c.n_f, c.seed, cfg);
  }
  return rows;
}

void write_rows(std::ostream& out, const std::vector<BenchRow>& rows, char d) {
  out << "dataset" << d << "method" << d << "n_f" << d << "n_f_used" << d << "seed" << d
      << "l_train" << d << "l_test" << d << "oa" << d << "oa_std" << d << "eta" << d
      << "sigma" << d << "seconds" << d << "status" << d << "message\n";
  const auto old = out.precision(10);
  for (const auto& r : rows) {
    std::string msg = r.message;
    for (char& ch : msg)
      if (ch == d || ch == '\n') ch = ' ';
    out << r.dataset << d << r.method << d << r.n_f << d << r.n_f_used << d << r.seed << d
        << r.l_train << d << r.l_test << d << r.oa << d << r.std_dev << d << r.eta << d
        << r.sigma << d << r.seconds << d << r.status << d << msg << '\n';
  }
  out.precision(old);
}

std::vector<BenchRow> read_rows(std::istream& in, char d) {
  std::vector<BenchRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, d)) f.push_back(field);
    if (!line.empty() && line.back() == d) f.emplace_back();
    if (f.size() != 14)
      throw DataError("results line " + std::to_string(line_no) + ": expected 14 fields");
    try {
      BenchRow r;
      r.dataset = f[0];
      r.method = f[1];
      r.n_f = std::stol(f[2]);
      r.n_f_used = std::stol(f[3]);
      r.seed = std::stoull(f[4]);
      r.l_train = std::stol(f[5]);
      r.l_test = std::stol(f[6]);
      r.oa = std::stod(f[7]);
      r.std_dev = std::stod(f[8]);
      r.eta = std::stod(f[9]);
      r.sigma = std::stod(f[10]);
      r.seconds = std::stod(f[11]);
      r.status = f[12];
      r.message = f[13];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("results line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

Manifest parse_manifest(const json& j) {
  Manifest m;
  try {
    for (const auto& d : j.at("datasets")) {
      ManifestDataset md;
      md.name = d.at("name").get<std::string>();
      md.source = d.at("source").get<std::string>();
      md.l = d.value("l", Index{0});
      md.d = d.value("d", Index{0});
      md.c = d.value("c", Index{0});
      md.header = d.value("header", false);
      md.label_column = d.value("label_column", -1);
      m.datasets.push_back(md);
    }
    for (const auto& e : j.at("expected")) {
      ManifestExpectation me;
      me.dataset = e.at("dataset").get<std::string>();
      me.method = e.at("method").get<std::string>();
      me.n_f = e.at("n_f").get<Index>();
      me.metric = e.value("metric", std::string("OA"));
      me.value = e.at("value").get<double>();
      me.tolerance = e.at("tolerance").get<double>();
      me.provenance = e.value("provenance", std::string());
      m.expected.push_back(me);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  for (const auto& e : m.expected) {
    if (e.provenance.empty())
      throw DataError("manifest: expectation " + e.dataset + "/" + e.method +
                      " has no provenance tag");
    if (e.metric != "OA")
      throw DataError("manifest: only OA expectations are supported (got " + e.metric + ")");
    if (!(e.tolerance >= 0.0)) throw DataError("manifest: negative tolerance");
    bool known = false;
    for (const auto& d : m.datasets) known = known || d.name == e.dataset;
    if (!known) throw DataError("manifest: expectation names unknown dataset " + e.dataset);
    parse_method(e.method);
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  try {
    return parse_manifest(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
}

bool VerifyReport::pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

VerifyReport verify_manifest(const Manifest& m, const std::vector<BenchRow>& rows) {
  std::map<std::tuple<std::string, std::string, Index>, std::pair<double, int>> acc;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    auto& a = acc[{r.dataset, r.method, r.n_f}];
    a.first += r.oa;
    a.second += 1;
  }
  VerifyReport rep;
  std::string missing;
  for (const auto& e : m.expected) {
    const auto it = acc.find({e.dataset, e.method, e.n_f});
    if (it == acc.end()) {
      missing += (missing.empty() ? "" : ", ") + e.dataset + "/" + e.method + "/" +
                 std::to_string(e.n_f);
      continue;
    }
    VerifyEntry v;
    v.expectation = e;
    v.observed = it->second.first / it->second.second;
    v.delta = v.observed - e.value;
    v.pass = std::abs(v.delta) <= e.tolerance;
    rep.entries.push_back(v);
  }
  if (!missing.empty()) throw DataError("verify: no results for " + missing);
  return rep;
}

std::optional<std::filesystem::path> resolve_source(const ManifestDataset& d,
                                                    const std::filesystem::path& manifest_dir,
                                                    const std::filesystem::path& user_dir) {
  const auto colon = d.source.find(':');
  if (colon == std::string::npos) throw DataError("manifest: malformed source " + d.source);
  const std::string kind = d.source.substr(0, colon);
  const std::string rest = d.source.substr(colon + 1);
  std::filesystem::path p;
  if (kind == "bundled")
    p = manifest_dir / rest;
  else if (kind == "user")
    p = user_dir / rest;
  else
    throw DataError("manifest: unknown source kind " + kind);
  if (std::filesystem::exists(p)) return p;
  return std::nullopt;
}

}  // namespace mvak
