#include "mvak/data.hpp"

#include "mvak/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace mvak {

void Dataset::validate() const {
  if (x.rows() < 2) throw DataError("dataset needs at least 2 rows");
  if (x.cols() < 1) throw DataError("dataset needs at least 1 feature column");
  if (y.size() > 0 && y.rows() != x.rows())
    throw DataError("X and Y row counts differ");
  if (!labels.empty() && static_cast<Index>(labels.size()) != x.rows())
    throw DataError("label count differs from row count");
  if (!x.allFinite() || !y.allFinite())
    throw DataError("dataset contains non-finite values");
}

Matrix CenteringStats::apply(const Matrix& m) const {
  if (m.cols() != mean.size()) {
    std::ostringstream os;
    os << "centering: expected " << mean.size() << " columns, got " << m.cols();
    throw DataError(os.str());
  }
  Matrix out = m.rowwise() - mean.transpose();
  if (standardized) out = out.array().rowwise() / scale.transpose().array();
  return out;
}

std::pair<Matrix, CenteringStats> center_fit_apply(const Matrix& m,
                                                   bool standardize) {
  if (m.rows() < 2) throw DataError("centering needs at least 2 rows");
  CenteringStats stats;
  stats.standardized = standardize;
  stats.mean = m.colwise().mean().transpose();
  stats.scale = Vector::Ones(m.cols());
  if (standardize) {
    const Matrix c = m.rowwise() - stats.mean.transpose();
    for (Index j = 0; j < m.cols(); ++j) {
      const double var =
          c.col(j).squaredNorm() / static_cast<double>(m.rows() - 1);
      const double sd = std::sqrt(var);
      const double ref = std::max(1.0, std::abs(stats.mean(j)));
      stats.scale(j) = sd > 1e-12 * ref ? sd : 1.0;
    }
  }
  return {stats.apply(m), stats};
}

std::vector<std::string> LabelEncoding::decode(std::span<const int> cs) const {
  std::vector<std::string> out;
  out.reserve(cs.size());
  for (int c : cs) {
    if (c < 0 || c >= static_cast<int>(classes.size()))
      throw DataError("decode: class code out of range");
    out.push_back(classes[static_cast<std::size_t>(c)]);
  }
  return out;
}

int LabelEncoding::code_of(const std::string& label) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == label) return static_cast<int>(i);
  return -1;
}

Matrix LabelEncoding::indicator_for(std::span<const std::string> labels) const {
  Matrix out = Matrix::Zero(static_cast<Index>(labels.size()), num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = code_of(labels[i]);
    if (c >= 0) out(static_cast<Index>(i), c) = 1.0;
  }
  return out;
}

LabelEncoding encode_labels(std::span<const std::string> labels) {
  LabelEncoding enc;
  std::unordered_map<std::string, int> index;
  enc.codes.reserve(labels.size());
  for (const auto& lab : labels) {
    auto [it, inserted] =
        index.emplace(lab, static_cast<int>(enc.classes.size()));
    if (inserted) enc.classes.push_back(lab);
    enc.codes.push_back(it->second);
  }
  if (enc.classes.size() < 2)
    throw DataError("label encoding needs at least 2 distinct classes");
  enc.indicator =
      Matrix::Zero(static_cast<Index>(labels.size()), enc.num_classes());
  for (std::size_t i = 0; i < enc.codes.size(); ++i)
    enc.indicator(static_cast<Index>(i), enc.codes[i]) = 1.0;
  return enc;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    // trim surrounding whitespace and a trailing CR
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string()
                                         : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last && std::isfinite(v);
}

}  // namespace

Dataset load_delimited(const std::filesystem::path& path,
                       const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto fields = split_line(line, options.delimiter);
    if (header_pending) {
      header = std::move(fields);
      header_pending = false;
      continue;
    }
    rows.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw DataError(path.string() + ": empty file");

  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      std::ostringstream os;
      os << path.string() << ": ragged row at line " << line_numbers[r]
         << " (" << rows[r].size() << " fields, expected " << width << ")";
      throw DataError(os.str());
    }
  }

  std::optional<std::size_t> label_col;
  if (options.label_name) {
    if (header.empty())
      throw UsageError("label column by name requires a header row");
    auto it = std::find(header.begin(), header.end(), *options.label_name);
    if (it == header.end())
      throw DataError("label column '" + *options.label_name + "' not in header");
    label_col = static_cast<std::size_t>(it - header.begin());
  } else if (options.label_column) {
    int c = *options.label_column;
    if (c < 0) c += static_cast<int>(width);
    if (c < 0 || c >= static_cast<int>(width))
      throw UsageError("label column index out of range");
    label_col = static_cast<std::size_t>(c);
  }

  std::vector<std::size_t> numeric_cols;
  for (std::size_t c = 0; c < width; ++c)
    if (!label_col || c != *label_col) numeric_cols.push_back(c);
  const auto n_targets = static_cast<std::size_t>(std::max(0, options.target_columns));
  if (n_targets >= numeric_cols.size())
    throw UsageError("target column count leaves no input features");
  const std::size_t n_inputs = numeric_cols.size() - n_targets;

  Dataset ds;
  const auto l = static_cast<Index>(rows.size());
  ds.x.resize(l, static_cast<Index>(n_inputs));
  ds.y.resize(n_targets > 0 ? l : 0, static_cast<Index>(n_targets));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < numeric_cols.size(); ++k) {
      const std::size_t c = numeric_cols[k];
      double v = 0.0;
      if (!parse_double(rows[r][c], v)) {
        std::ostringstream os;
        os << path.string() << ": cannot parse '" << rows[r][c]
           << "' as a number at line " << line_numbers[r] << ", column "
           << (c + 1);
        throw DataError(os.str());
      }
      if (k < n_inputs)
        ds.x(static_cast<Index>(r), static_cast<Index>(k)) = v;
      else
        ds.y(static_cast<Index>(r), static_cast<Index>(k - n_inputs)) = v;
    }
    if (label_col) ds.labels.push_back(rows[r][*label_col]);
  }

  if (options.label_file) {
    std::ifstream lf(*options.label_file);
    if (!lf) throw DataError("cannot open " + options.label_file->string());
    std::vector<std::string> labels;
    while (std::getline(lf, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t\r");
      labels.push_back(line.substr(b, e - b + 1));
    }
    if (static_cast<Index>(labels.size()) != l)
      throw DataError("label file row count differs from data file");
    ds.labels = std::move(labels);
  }
  return ds;
}

void save_delimited(const std::filesystem::path& path, const Dataset& ds,
                    char delimiter) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.x.cols(); ++j) {
      if (j > 0) out << delimiter;
      out << ds.x(i, j);
    }
    for (Index j = 0; j < ds.y.cols(); ++j) out << delimiter << ds.y(i, j);
    if (ds.has_labels()) out << delimiter << ds.labels[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

std::vector<Index> seeded_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

Matrix take_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Dataset subset(const Dataset& ds, std::span<const Index> rows) {
  Dataset out;
  out.x = take_rows(ds.x, rows);
  if (ds.y.size() > 0) out.y = take_rows(ds.y, rows);
  else out.y.resize(0, ds.y.cols());
  for (Index r : rows) {
    if (ds.has_labels()) out.labels.push_back(ds.labels[static_cast<std::size_t>(r)]);
    if (!ds.ids.empty()) out.ids.push_back(ds.ids[static_cast<std::size_t>(r)]);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitOptions& options,
                                  std::uint64_t seed) {
  if (!(options.ratio > 0.0 && options.ratio < 1.0))
    throw UsageError("split ratio must lie in (0, 1)");
  if (options.max_train && *options.max_train < 2)
    throw UsageError("split max_train must be >= 2");
  const Index l = ds.rows();
  Index n_train = static_cast<Index>(std::llround(options.ratio * static_cast<double>(l)));
  if (options.max_train) n_train = std::min(n_train, *options.max_train);
  if (n_train < 1 || n_train >= l)
    throw DataError("split would leave an empty train or test side");

  std::vector<Index> train;
  if (options.stratified && ds.has_labels()) {
    // group rows by class in order of first appearance
    std::vector<std::string> order;
    std::map<std::string, std::vector<Index>> groups;
    for (Index i = 0; i < l; ++i) {
      const auto& lab = ds.labels[static_cast<std::size_t>(i)];
      auto& g = groups[lab];
      if (g.empty()) order.push_back(lab);
      g.push_back(i);
    }
    // largest-remainder allocation so the total is exactly n_train
    const double frac = static_cast<double>(n_train) / static_cast<double>(l);
    std::vector<Index> take(order.size());
    std::vector<std::pair<double, std::size_t>> rem;
    Index total = 0;
    for (std::size_t c = 0; c < order.size(); ++c) {
      const double want = frac * static_cast<double>(groups[order[c]].size());
      take[c] = static_cast<Index>(std::floor(want));
      total += take[c];
      rem.emplace_back(want - std::floor(want), c);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; total < n_train && i < rem.size(); ++i, ++total)
      ++take[rem[i].second];
    for (std::size_t c = 0; c < order.size(); ++c) {
      const auto& g = groups[order[c]];
      const auto perm = seeded_permutation(static_cast<Index>(g.size()),
                                           seed + 0x9e3779b97f4a7c15ULL * (c + 1));
      for (Index k = 0; k < take[c]; ++k)
        train.push_back(g[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])]);
    }
  } else {
    const auto perm = seeded_permutation(l, seed);
    train.assign(perm.begin(), perm.begin() + n_train);
  }
  std::sort(train.begin(), train.end());
  std::vector<Index> test;
  std::size_t t = 0;
  for (Index i = 0; i < l; ++i) {
    if (t < train.size() && train[t] == i) {
      ++t;
      continue;
    }
    test.push_back(i);
  }
  if (test.empty()) throw DataError("split would leave an empty test side");
  return {subset(ds, train), subset(ds, test)};
}

std::vector<Fold> kfold(Index rows, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("kfold: k must be >= 2");
  if (k > rows) throw UsageError("kfold: k exceeds the number of rows");
  const auto perm = seeded_permutation(rows, seed);
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Index base = rows / k;
  const Index extra = rows % k;
  Index pos = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    auto& v = folds[static_cast<std::size_t>(f)].validation;
    v.assign(perm.begin() + pos, perm.begin() + pos + size);
    std::sort(v.begin(), v.end());
    pos += size;
  }
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    std::vector<char> in_val(static_cast<std::size_t>(rows), 0);
    for (Index i : fold.validation) in_val[static_cast<std::size_t>(i)] = 1;
    for (Index i = 0; i < rows; ++i)
      if (!in_val[static_cast<std::size_t>(i)]) fold.train.push_back(i);
  }
  return folds;
}

}  // namespace mvak
