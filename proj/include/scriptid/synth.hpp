#pragma once

#include <cstdint>
#include <string>

#include "scriptid/corpus.hpp"

namespace scriptid::synth {

/// Desk-scale synthetic corpus: each class is a distinct stroke texture
/// (orientation class*180/k degrees with class-specific stroke width and
/// curvature) rendered as dark-on-white words, assembled into line and
/// document images under the standard naming convention.
struct SynthOptions {
  int classes = 4;  ///< uses the first `classes` registry scripts (max 13)
  int docs_per_class = 5;
  int lines_per_doc = 8;
  int words_per_line = 6;
  std::uint64_t seed = 13;
};

/// Writes the corpus tree plus `manifest.csv` under `root` and returns
/// the manifest.  Odd documents land in handwritten/, even in printed/.
/// Fully deterministic for a given (options, seed).
corpus::Manifest generate(const std::string& root, const SynthOptions& opt);

}  // namespace scriptid::synth
