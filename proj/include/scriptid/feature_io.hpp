#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scriptid/features.hpp"

namespace scriptid::feat {

/// In-memory batch of feature vectors with their sample labels.  Values
/// are kept as f32, matching the on-disk format, so a round trip through
/// disk is lossless and in-memory pipelines match staged ones.
struct FeatureSet {
  Extractor extractor = Extractor::Lbp;
  std::uint32_t dim = 0;
  std::vector<float> values;              ///< row-major, count x dim
  std::vector<std::string> ids;           ///< sample_id per row
  std::vector<std::string> scripts;       ///< abbreviation per row
  std::vector<std::string> levels;        ///< doc|line|word
  std::vector<std::string> modalities;    ///< handwritten|printed

  std::size_t count() const { return ids.size(); }
  const float* row(std::size_t i) const {
    return values.data() + i * static_cast<std::size_t>(dim);
  }
  void append(const std::vector<double>& vector, std::string id,
              std::string script, std::string level, std::string modality);
};

/// Writes the MDFV container plus the `<path>.csv` label sidecar.
void save_features(const std::string& path, const FeatureSet& set);

/// Reads an MDFV container and its sidecar.
FeatureSet load_features(const std::string& path);

}  // namespace scriptid::feat
