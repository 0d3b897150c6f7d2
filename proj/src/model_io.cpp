#include "mvak/model_io.hpp"

#include "mvak/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mvak {

static_assert(std::endian::native == std::endian::little,
              "binary model encoding assumes a little-endian host");

using nlohmann::json;

namespace {

constexpr char kMagic[] = "MVAKBIN1";
constexpr std::size_t kMagicLen = 8;

class Writer {
 public:
  explicit Writer(Encoding enc) : enc_(enc) {}

  json mat(const Matrix& m) {
    json j{{"rows", m.rows()}, {"cols", m.cols()}};
    if (enc_ == Encoding::Binary) {
      j["offset"] = payload_.size();
      for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) payload_.push_back(m(r, c));
    } else {
      json data = json::array();
      for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
      j["data"] = std::move(data);
    }
    return j;
  }

  json vec(const Vector& v) { return mat(Matrix(v)); }

  const std::vector<double>& payload() const { return payload_; }

 private:
  Encoding enc_;
  std::vector<double> payload_;
};

class Reader {
 public:
  Reader(const double* payload, std::size_t size) : payload_(payload), size_(size) {}

  Matrix mat(const json& j) const {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    if (rows < 0 || cols < 0) throw DataError("model file: negative matrix shape");
    Matrix m(rows, cols);
    const std::size_t n = static_cast<std::size_t>(rows * cols);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.size() != n) throw DataError("model file: matrix data length mismatch");
      for (Index r = 0, k = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c, ++k) m(r, c) = d[static_cast<std::size_t>(k)].get<double>();
    } else {
      const std::size_t off = j.at("offset").get<std::size_t>();
      if (!payload_ || off + n > size_) throw DataError("model file: matrix block out of range");
      for (Index r = 0, k = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c, ++k) m(r, c) = payload_[off + static_cast<std::size_t>(k)];
    }
    return m;
  }

  Vector vec(const json& j) const {
    const Matrix m = mat(j);
    if (m.cols() != 1 && m.size() != 0) throw DataError("model file: expected a vector");
    return m.size() ? Vector(m.col(0)) : Vector();
  }

 private:
  const double* payload_;
  std::size_t size_;
};

json stats_to(Writer& w, const CenteringStats& s) {
  return {{"mean", w.vec(s.mean)}, {"scale", w.vec(s.scale)}, {"standardized", s.standardized}};
}

CenteringStats stats_from(const Reader& r, const json& j) {
  CenteringStats s;
  s.mean = r.vec(j.at("mean"));
  s.scale = r.vec(j.at("scale"));
  s.standardized = j.at("standardized").get<bool>();
  return s;
}

json cluster_to(Writer& w, const ClusterModel& c) {
  json mixtures = json::array();
  for (const auto& gm : c.mixtures) {
    json chol = json::array();
    for (const auto& l : gm.chol) chol.push_back(w.mat(l));
    mixtures.push_back({{"weights", w.vec(gm.weights)},
                        {"means", w.mat(gm.means)},
                        {"chol", chol},
                        {"iterations", gm.iterations},
                        {"log_likelihood", gm.log_likelihood}});
  }
  return {{"q", c.q}, {"g", c.g}, {"mixtures", mixtures}};
}

ClusterModel cluster_from(const Reader& r, const json& j) {
  ClusterModel c;
  c.q = j.at("q").get<int>();
  c.g = j.at("g").get<int>();
  for (const auto& m : j.at("mixtures")) {
    GaussianMixture gm;
    gm.weights = r.vec(m.at("weights"));
    gm.means = r.mat(m.at("means"));
    for (const auto& l : m.at("chol")) gm.chol.push_back(r.mat(l));
    gm.iterations = m.at("iterations").get<int>();
    gm.log_likelihood = m.at("log_likelihood").get<double>();
    c.mixtures.push_back(std::move(gm));
  }
  return c;
}

json kernel_to(Writer& w, const Kernel& k) {
  json j{{"family", to_string(k.family())}, {"sigma", k.sigma()}, {"beta", k.beta()}};
  if (k.cluster_model()) j["cluster"] = cluster_to(w, *k.cluster_model());
  return j;
}

Kernel kernel_from(const Reader& r, const json& j) {
  const KernelFamily f = parse_kernel_family(j.at("family").get<std::string>());
  std::shared_ptr<const ClusterModel> cm;
  if (j.contains("cluster")) cm = std::make_shared<const ClusterModel>(cluster_from(r, j.at("cluster")));
  switch (f) {
    case KernelFamily::Linear: return Kernel::linear();
    case KernelFamily::Rbf: return Kernel::rbf(j.at("sigma").get<double>());
    case KernelFamily::Cluster:
      if (!cm) throw DataError("model file: cluster kernel without mixtures");
      return Kernel::cluster(cm);
    case KernelFamily::Composite:
      if (!cm) throw DataError("model file: composite kernel without mixtures");
      return Kernel::composite(j.at("sigma").get<double>(), j.at("beta").get<double>(), cm);
  }
  throw DataError("model file: unknown kernel family");
}

json kernel_model_to(Writer& w, const KernelModel& m) {
  return {{"method", to_string(m.method)},
          {"a", w.mat(m.a)},
          {"v", w.mat(m.v)},
          {"dual_weights", w.mat(m.dual_weights)},
          {"eigenvalues", w.vec(m.eigenvalues)},
          {"eta", m.eta},
          {"basis", w.mat(m.basis)},
          {"kernel", kernel_to(w, m.kernel)},
          {"centering", {{"col_means", w.vec(m.centering.col_means)},
                         {"grand_mean", m.centering.grand_mean}}},
          {"x_stats", stats_to(w, m.x_stats)},
          {"y_stats", stats_to(w, m.y_stats)},
          {"warnings", m.warnings}};
}

KernelMethod kernel_method_from(const std::string& s) {
  for (auto m : {KernelMethod::KPCA, KernelMethod::KPLS2, KernelMethod::KCCA,
                 KernelMethod::KOPLS, KernelMethod::HSCA, KernelMethod::SSKCCA})
    if (to_string(m) == s) return m;
  throw DataError("model file: unknown kernel method '" + s + "'");
}

KernelModel kernel_model_from(const Reader& r, const json& j) {
  KernelModel m;
  m.method = kernel_method_from(j.at("method").get<std::string>());
  m.a = r.mat(j.at("a"));
  m.v = r.mat(j.at("v"));
  m.dual_weights = r.mat(j.at("dual_weights"));
  m.eigenvalues = r.vec(j.at("eigenvalues"));
  m.eta = j.at("eta").get<double>();
  m.basis = r.mat(j.at("basis"));
  m.kernel = kernel_from(r, j.at("kernel"));
  m.centering.col_means = r.vec(j.at("centering").at("col_means"));
  m.centering.grand_mean = j.at("centering").at("grand_mean").get<double>();
  m.x_stats = stats_from(r, j.at("x_stats"));
  m.y_stats = stats_from(r, j.at("y_stats"));
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  return m;
}

json extractor_to(Writer& w, const Extractor& e) {
  json j{{"method", to_string(e.method)}};
  std::visit([&](const auto& m) {
    using T = std::decay_t<decltype(m)>;
    if constexpr (std::is_same_v<T, LinearModel>) {
      j["linear"] = {{"u", w.mat(m.u)},
                     {"v", w.mat(m.v)},
                     {"weights", w.mat(m.weights)},
                     {"eigenvalues", w.vec(m.eigenvalues)},
                     {"x_stats", stats_to(w, m.x_stats)},
                     {"y_stats", stats_to(w, m.y_stats)},
                     {"pre_projection", w.mat(m.pre_projection)},
                     {"warnings", m.warnings}};
    } else if constexpr (std::is_same_v<T, KernelModel>) {
      j["kernel_model"] = kernel_model_to(w, m);
    } else if constexpr (std::is_same_v<T, ReducedSetModel>) {
      j["reduced"] = {{"basis_indices", m.basis_indices},
                      {"basis", w.mat(m.basis)},
                      {"beta", w.mat(m.beta)},
                      {"v", w.mat(m.v)},
                      {"eigenvalues", w.vec(m.eigenvalues)},
                      {"eta", m.eta},
                      {"kernel", kernel_to(w, m.kernel)},
                      {"col_means", w.vec(m.col_means)},
                      {"x_stats", stats_to(w, m.x_stats)},
                      {"y_stats", stats_to(w, m.y_stats)},
                      {"kernel_evaluations", m.kernel_evaluations},
                      {"warnings", m.warnings}};
    } else {
      j["sparse"] = {{"selected", m.selected},
                     {"scalars", w.vec(m.scalars)},
                     {"objectives", w.vec(m.objectives)},
                     {"pool", m.pool},
                     {"model", kernel_model_to(w, m.model)}};
    }
  }, e.model);
  return j;
}

Extractor extractor_from(const Reader& r, const json& j) {
  Extractor e;
  e.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("linear")) {
    const auto& l = j.at("linear");
    LinearModel m;
    switch (e.method) {
      case Method::PCA: m.method = LinearMethod::PCA; break;
      case Method::PLS2: m.method = LinearMethod::PLS2; break;
      case Method::CCA: m.method = LinearMethod::CCA; break;
      case Method::OPLS: m.method = LinearMethod::OPLS; break;
      default: throw DataError("model file: linear block for a kernel method");
    }
    m.u = r.mat(l.at("u"));
    m.v = r.mat(l.at("v"));
    m.weights = r.mat(l.at("weights"));
    m.eigenvalues = r.vec(l.at("eigenvalues"));
    m.x_stats = stats_from(r, l.at("x_stats"));
    m.y_stats = stats_from(r, l.at("y_stats"));
    m.pre_projection = r.mat(l.at("pre_projection"));
    m.warnings = l.at("warnings").get<std::vector<std::string>>();
    e.model = std::move(m);
  } else if (j.contains("kernel_model")) {
    e.model = kernel_model_from(r, j.at("kernel_model"));
  } else if (j.contains("reduced")) {
    const auto& s = j.at("reduced");
    ReducedSetModel m;
    switch (e.method) {
      case Method::RKPCA: m.method = ReducedMethod::RKPCA; break;
      case Method::RKCCA: m.method = ReducedMethod::RKCCA; break;
      case Method::RKOPLS: m.method = ReducedMethod::RKOPLS; break;
      default: throw DataError("model file: reduced-set block for another method");
    }
    m.basis_indices = s.at("basis_indices").get<std::vector<Index>>();
    m.basis = r.mat(s.at("basis"));
    m.beta = r.mat(s.at("beta"));
    m.v = r.mat(s.at("v"));
    m.eigenvalues = r.vec(s.at("eigenvalues"));
    m.eta = s.at("eta").get<double>();
    m.kernel = kernel_from(r, s.at("kernel"));
    m.col_means = r.vec(s.at("col_means"));
    m.x_stats = stats_from(r, s.at("x_stats"));
    m.y_stats = stats_from(r, s.at("y_stats"));
    m.kernel_evaluations = s.at("kernel_evaluations").get<Index>();
    m.warnings = s.at("warnings").get<std::vector<std::string>>();
    e.model = std::move(m);
  } else if (j.contains("sparse")) {
    const auto& s = j.at("sparse");
    SparsePLSModel m;
    m.variant = e.method == Method::SMC ? SparseVariant::SMC : SparseVariant::SMA;
    m.selected = s.at("selected").get<std::vector<Index>>();
    m.scalars = r.vec(s.at("scalars"));
    m.objectives = r.vec(s.at("objectives"));
    m.pool = s.at("pool").get<Index>();
    m.model = kernel_model_from(r, s.at("model"));
    e.model = std::move(m);
  } else {
    throw DataError("model file: no extractor block");
  }
  return e;
}

json head_to(Writer& w, const LSHead& h) {
  return {{"w", w.mat(h.w)}, {"lambda", h.lambda}, {"y_mean", w.vec(h.y_mean)},
          {"classes", h.classes}};
}

LSHead head_from(const Reader& r, const json& j) {
  LSHead h;
  h.w = r.mat(j.at("w"));
  h.lambda = j.at("lambda").get<double>();
  h.y_mean = r.vec(j.at("y_mean"));
  h.classes = j.at("classes").get<std::vector<std::string>>();
  return h;
}

json document(Writer& w, const ModelFile& m, Encoding enc) {
  json j{{"format", "mvak-model"},
         {"version", m.version},
         {"encoding", enc == Encoding::Binary ? "binary" : "decimal"},
         {"config", m.config},
         {"extractor", extractor_to(w, m.extractor)}};
  if (m.head) j["head"] = head_to(w, *m.head);
  return j;
}

ModelFile from_document(const Reader& r, const json& j) {
  if (j.value("format", "") != "mvak-model") throw DataError("model file: not an mvak model");
  const int version = j.at("version").get<int>();
  if (version != kModelFormatVersion)
    throw DataError("model file: format version " + std::to_string(version) +
                    " is not supported (this build reads version " +
                    std::to_string(kModelFormatVersion) + ")");
  ModelFile m;
  m.version = version;
  m.config = j.value("config", json::object());
  m.extractor = extractor_from(r, j.at("extractor"));
  if (j.contains("head")) m.head = head_from(r, j.at("head"));
  return m;
}

}  // namespace

std::string serialize_model(const ModelFile& m, Encoding enc) {
  Writer w(enc);
  const std::string header = document(w, m, enc).dump(enc == Encoding::Binary ? -1 : 1);
  if (enc == Encoding::Decimal) return header + "\n";
  std::string out(kMagic, kMagicLen);
  const std::uint64_t len = header.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += header;
  const auto& p = w.payload();
  out.append(reinterpret_cast<const char*>(p.data()), p.size() * sizeof(double));
  return out;
}

ModelFile parse_model(const std::string& bytes) {
  try {
    if (bytes.size() >= kMagicLen && bytes.compare(0, kMagicLen, kMagic) == 0) {
      std::uint64_t len = 0;
      if (bytes.size() < kMagicLen + sizeof len) throw DataError("model file: truncated header");
      std::memcpy(&len, bytes.data() + kMagicLen, sizeof len);
      const std::size_t start = kMagicLen + sizeof len;
      if (bytes.size() < start + len) throw DataError("model file: truncated header");
      const json j = json::parse(bytes.substr(start, len));
      const std::size_t body = start + len;
      const std::size_t count = (bytes.size() - body) / sizeof(double);
      std::vector<double> payload(count);
      if (count) std::memcpy(payload.data(), bytes.data() + body, count * sizeof(double));
      return from_document(Reader(payload.data(), payload.size()), j);
    }
    return from_document(Reader(nullptr, 0), json::parse(bytes));
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& m, Encoding enc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  const std::string bytes = serialize_model(m, enc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model file " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace mvak
