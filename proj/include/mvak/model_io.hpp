#pragma once

#include "mvak/pipeline.hpp"
#include "mvak/predict.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mvak {

inline constexpr int kModelFormatVersion = 1;

enum class Encoding { Decimal, Binary };

/// Everything needed to transform (and optionally classify) new rows.
struct ModelFile {
  int version = kModelFormatVersion;
  Extractor extractor;
  std::optional<LSHead> head;
  // Resolved run settings, echoed verbatim.
  nlohmann::json config = nlohmann::json::object();
};

/// Decimal files are plain JSON with row-major matrices. Binary files are
///   "MVAKBIN1" | u64 header length | JSON header | little-endian doubles
/// where each matrix in the header points into the trailing block.
std::string serialize_model(const ModelFile& m, Encoding enc);
ModelFile parse_model(const std::string& bytes);

void save_model(const std::filesystem::path& path, const ModelFile& m, Encoding enc);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace mvak
