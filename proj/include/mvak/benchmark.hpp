#pragma once

#include "mvak/data.hpp"
#include "mvak/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvak {

struct BenchDataset {
  std::string name;
  Dataset data;
};

struct BenchmarkConfig {
  std::vector<BenchDataset> datasets;
  std::vector<Method> methods;
  // Empty means c - 1 per dataset.
  std::vector<Index> n_f;
  int folds = 10;
  double train_ratio = 0.6;
  std::optional<Index> max_train = 500;
  bool stratified = true;
  std::uint64_t seed = 0;
  int repeats = 1;
  KernelConfig kernel;
  Index r = 100;
  Index pool = 0;
  // Cross-validate eta for methods that take one; otherwise use `eta`.
  bool cv_eta = true;
  double eta = 0.0;
};

struct BenchRow {
  std::string dataset;
  std::string method;
  Index n_f = 0;
  Index n_f_used = 0;
  std::uint64_t seed = 0;
  Index l_train = 0;
  Index l_test = 0;
  double oa = 0.0;
  double std_dev = 0.0;
  double eta = 0.0;
  double sigma = 0.0;
  double seconds = 0.0;
  std::string status = "ok";
  std::string message;
};

/// One row per (dataset, method, n_f, repeat) in that nesting order. Cells
/// run concurrently; a failing cell records its error and the run continues.
std::vector<BenchRow> run_benchmark(const BenchmarkConfig& cfg);

/// Single cell of the protocol: stratified split, standardized inputs,
/// median-sigma kernel, cross-validated eta, LS head with winner-takes-all.
BenchRow run_cell(const BenchDataset& ds, Method method, Index n_f, std::uint64_t seed,
                  const BenchmarkConfig& cfg);

void write_rows(std::ostream& out, const std::vector<BenchRow>& rows, char delim = ',');

/// Reads a table produced by write_rows. Lines starting with '#' are skipped.
std::vector<BenchRow> read_rows(std::istream& in, char delim = ',');

// ------------------------------------------------------------ manifest

struct ManifestDataset {
  std::string name;
  std::string source;  // "bundled:<relative path>" or "user:<file name>"
  Index l = 0;
  Index d = 0;
  Index c = 0;
  bool header = false;
  int label_column = -1;
};

struct ManifestExpectation {
  std::string dataset;
  std::string method;
  Index n_f = 0;
  std::string metric = "OA";
  double value = 0.0;
  double tolerance = 0.0;
  std::string provenance;
};

struct Manifest {
  std::vector<ManifestDataset> datasets;
  std::vector<ManifestExpectation> expected;
};

/// Rejects expectations without a provenance tag or naming unknown datasets.
Manifest parse_manifest(const nlohmann::json& j);
Manifest load_manifest(const std::filesystem::path& path);

struct VerifyEntry {
  ManifestExpectation expectation;
  double observed = 0.0;
  double delta = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  bool pass() const;
};

/// Compares the mean OA over repeats of each expected (dataset, method, n_f)
/// cell. Throws DataError naming any expectation without result rows.
VerifyReport verify_manifest(const Manifest& m, const std::vector<BenchRow>& rows);

/// Resolves a manifest source against the manifest directory and a user
/// data directory; empty when the file is absent.
std::optional<std::filesystem::path> resolve_source(const ManifestDataset& d,
                                                    const std::filesystem::path& manifest_dir,
                                                    const std::filesystem::path& user_dir);

}  // namespace mvak
