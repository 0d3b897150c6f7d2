#pragma once

#include "mvak/numcore.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvak {

/// Raw samples as loaded: X is l x d, Y (regression targets) is l x m or
/// empty, labels holds one class identifier per row when present.
struct Dataset {
  Matrix x;
  Matrix y;
  std::vector<std::string> labels;
  std::vector<std::string> ids;

  Index rows() const { return x.rows(); }
  Index dims() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }

  void validate() const;
};

/// Per-column statistics captured on training data and reused on held-out
/// rows. Constant columns keep scale 1.
struct CenteringStats {
  Vector mean;
  Vector scale;
  bool standardized = false;

  Matrix apply(const Matrix& m) const;
  Index dims() const { return mean.size(); }
};

std::pair<Matrix, CenteringStats> center_fit_apply(const Matrix& m,
                                                   bool standardize);

/// 1-of-c coding. Classes are kept in order of first appearance.
struct LabelEncoding {
  std::vector<std::string> classes;
  std::vector<int> codes;
  Matrix indicator;

  Index num_classes() const { return static_cast<Index>(classes.size()); }
  std::vector<std::string> decode(std::span<const int> codes) const;
  /// -1 for an identifier not seen at fit time.
  int code_of(const std::string& label) const;
  Matrix indicator_for(std::span<const std::string> labels) const;
};

LabelEncoding encode_labels(std::span<const std::string> labels);

struct LoadOptions {
  char delimiter = ',';
  bool header = false;
  // Column index holding class labels; negative counts from the end.
  std::optional<int> label_column;
  // Header name of the label column (requires header = true).
  std::optional<std::string> label_name;
  // Side file with one label per line, used instead of a label column.
  std::optional<std::filesystem::path> label_file;
  // Number of trailing numeric columns treated as regression targets.
  int target_columns = 0;
};

/// Blank lines and lines starting with '#' are skipped.
Dataset load_delimited(const std::filesystem::path& path,
                       const LoadOptions& options = {});

/// Writes X (and labels as the last column, when present).
void save_delimited(const std::filesystem::path& path, const Dataset& ds,
                    char delimiter = ',');

struct SplitOptions {
  double ratio = 0.6;
  std::optional<Index> max_train;
  bool stratified = true;
};

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitOptions& options,
                                  std::uint64_t seed);

struct Fold {
  std::vector<Index> train;
  std::vector<Index> validation;
};

std::vector<Fold> kfold(Index rows, int k, std::uint64_t seed);

Dataset subset(const Dataset& ds, std::span<const Index> rows);
Matrix take_rows(const Matrix& m, std::span<const Index> rows);

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<Index> seeded_permutation(Index n, std::uint64_t seed);

}  // namespace mvak
