#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scriptid/imageops.hpp"

namespace scriptid::corpus {

constexpr int kScriptCount = 13;

enum class Level : int { Document = 0, Line = 1, Word = 2 };
enum class Modality : int { Handwritten = 0, Printed = 1 };

struct ScriptInfo {
  std::string_view abbrev;
  std::string_view full_name;
  bool pseudo_words;  ///< script segments into pseudo-words, not words
};

/// Fixed 13-script registry; index order is the class-id order used
/// everywhere else (score vectors, confusion matrices, model slots).
const std::array<ScriptInfo, kScriptCount>& script_registry();

/// Case-insensitive, prefix-tolerant lookup ("roma" and "ROM" both map
/// to Rom).  Throws "unknown-script" otherwise.
int script_index(std::string_view token);

std::string_view level_name(Level level);      // doc | line | word
std::string_view modality_name(Modality m);    // handwritten | printed
Level parse_level(std::string_view token);
Modality parse_modality(std::string_view token);

/// Indices are 1-based; 0 marks an absent component.
struct ParsedName {
  int script = 0;
  Level level = Level::Document;
  int doc = 0;
  int line = 0;
  int word = 0;

  bool operator==(const ParsedName&) const = default;
};

/// Parses `Abbrev(_idx){1,3}.png` basenames; level follows from the
/// index count (doc / doc_line / doc_line_word).  Throws "parse-error"
/// naming the offending token.
ParsedName parse_name(const std::string& filename);

/// Canonical basename with zero-padded 3-digit indices;
/// parse_name(render_name(x)) == x.
std::string render_name(const ParsedName& name);

struct ManifestRow {
  std::string path;  ///< relative to the corpus root, '/'-separated
  int script = 0;
  Level level = Level::Document;
  Modality modality = Modality::Handwritten;
  int doc = 0;
  int line = 0;  ///< 0 when absent
  int word = 0;  ///< 0 when absent
  std::uint64_t fg_pixels = 0;

  bool operator==(const ManifestRow&) const = default;
};

struct Manifest {
  std::string root;  ///< not serialized; set by build/load
  std::vector<ManifestRow> rows;
};

/// Orders rows by (script, doc, line, word), then modality and path.
void sort_manifest(Manifest& m);

struct BuildOptions {
  std::optional<Modality> modality_override;
  img::BinarizeOptions binarize;
};

struct BuildResult {
  Manifest manifest;
  /// (relative path, reason) for files that could not be ingested.
  std::vector<std::pair<std::string, std::string>> skipped;
};

/// Recursively scans `root` for PNGs, parses names, infers modality
/// from the top-level handwritten/ or printed/ directory (unless
/// overridden) and counts foreground pixels with the default binarizer.
/// Bad files are reported in `skipped`; the scan continues.
BuildResult build_manifest(const std::string& root,
                           const BuildOptions& opts = {});

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

/// Absolute (or root-relative) location of one manifest entry.
std::string row_path(const Manifest& m, const ManifestRow& row);

/// Sample counts per (script, level, modality) cell.
using CellCounts =
    std::array<std::array<std::array<std::size_t, 2>, 3>, kScriptCount>;
CellCounts summarize(const Manifest& m);

}  // namespace scriptid::corpus
