#include "scriptid/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include "scriptid/png_io.hpp"
#include "scriptid/raster.hpp"

namespace scriptid::corpus {

namespace fs = std::filesystem;
using img::PipelineError;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(s);
  while (std::getline(in, token, sep)) out.push_back(token);
  return out;
}

}  // namespace

const std::array<ScriptInfo, kScriptCount>& script_registry() {
  static const std::array<ScriptInfo, kScriptCount> registry = {{
      {"Arab", "Arabic", false},
      {"Ban", "Bangla", false},
      {"Guj", "Gujarati", false},
      {"Gurm", "Gurmukhi", false},
      {"Hind", "Hindi", false},
      {"Jap", "Japanese", true},
      {"Kan", "Kannada", false},
      {"Mal", "Malayalam", false},
      {"Ori", "Oriya", false},
      {"Rom", "Roman", false},
      {"Tam", "Tamil", false},
      {"Tel", "Telugu", false},
      {"Tha", "Thai", true},
  }};
  return registry;
}

int script_index(std::string_view token) {
  const std::string low = lower(token);
  for (int i = 0; i < kScriptCount; ++i) {
    const std::string abbrev =
        lower(script_registry()[static_cast<std::size_t>(i)].abbrev);
    if (low.size() >= abbrev.size() && low.compare(0, abbrev.size(), abbrev) == 0)
      return i;
  }
  throw PipelineError("unknown-script",
                      "unknown script token '" + std::string(token) + "'");
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Document: return "doc";
    case Level::Line: return "line";
    case Level::Word: return "word";
  }
  throw PipelineError("bad-argument", "invalid level");
}

std::string_view modality_name(Modality m) {
  return m == Modality::Handwritten ? "handwritten" : "printed";
}

Level parse_level(std::string_view token) {
  if (token == "doc") return Level::Document;
  if (token == "line") return Level::Line;
  if (token == "word") return Level::Word;
  throw PipelineError("parse-error",
                      "unknown level '" + std::string(token) + "'");
}

Modality parse_modality(std::string_view token) {
  const std::string low = lower(token);
  if (low == "handwritten") return Modality::Handwritten;
  if (low == "printed") return Modality::Printed;
  throw PipelineError("parse-error",
                      "unknown modality '" + std::string(token) + "'");
}

ParsedName parse_name(const std::string& filename) {
  const std::string base = fs::path(filename).filename().string();
  const std::string low = lower(base);
  if (low.size() < 4 || low.compare(low.size() - 4, 4, ".png") != 0)
    throw PipelineError("parse-error", "'" + base + "' is not a .png name");
  const std::string stem = base.substr(0, base.size() - 4);
  if (!stem.empty() && stem.back() == '_')
    throw PipelineError("parse-error", "trailing '_' in '" + base + "'");
  const std::vector<std::string> tokens = split(stem, '_');
  if (tokens.empty() || tokens.front().empty())
    throw PipelineError("parse-error", "empty script token in '" + base + "'");
  ParsedName name;
  try {
    name.script = script_index(tokens.front());
  } catch (const PipelineError&) {
    throw PipelineError(
        "parse-error", "unknown script token '" + tokens.front() + "' in '" +
                           base + "'");
  }
  if (tokens.size() < 2)
    throw PipelineError("parse-error", "missing document index in '" + base + "'");
  if (tokens.size() > 4)
    throw PipelineError("parse-error",
                        "unexpected token '" + tokens[4] + "' in '" + base + "'");
  int* slots[3] = {&name.doc, &name.line, &name.word};
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (!all_digits(tok) || tok.size() > 9)
      throw PipelineError("parse-error",
                          "malformed index '" + tok + "' in '" + base + "'");
    const int value = std::stoi(tok);
    if (value < 1)
      throw PipelineError("parse-error",
                          "index '" + tok + "' must be positive in '" + base + "'");
    *slots[i - 1] = value;
  }
  name.level = static_cast<Level>(tokens.size() - 2);
  return name;
}

std::string render_name(const ParsedName& name) {
  std::ostringstream out;
  out << script_registry()[static_cast<std::size_t>(name.script)].abbrev;
  const int indices[3] = {name.doc, name.line, name.word};
  const int count = static_cast<int>(name.level) + 1;
  for (int i = 0; i < count; ++i) {
    out << '_';
    out.width(3);
    out.fill('0');
    out << indices[i];
  }
  out << ".png";
  return out.str();
}

void sort_manifest(Manifest& m) {
  std::sort(m.rows.begin(), m.rows.end(),
            [](const ManifestRow& a, const ManifestRow& b) {
              return std::tie(a.script, a.doc, a.line, a.word, a.modality,
                              a.path) < std::tie(b.script, b.doc, b.line,
                                                 b.word, b.modality, b.path);
            });
}

BuildResult build_manifest(const std::string& root, const BuildOptions& opts) {
  BuildResult result;
  result.manifest.root = root;
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw PipelineError("io-error", "corpus root '" + root + "' is not a directory");

  std::vector<fs::path> files;
  for (fs::recursive_directory_iterator it(root, ec), end; it != end;
       it.increment(ec)) {
    if (ec) throw PipelineError("io-error", "scan failed under '" + root + "'");
    if (!it->is_regular_file()) continue;
    if (lower(it->path().extension().string()) != ".png") continue;
    files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  for (const fs::path& file : files) {
    const std::string rel =
        fs::relative(file, root).generic_string();
    const auto skip = [&](const std::string& reason) {
      result.skipped.emplace_back(rel, reason);
    };
    ManifestRow row;
    row.path = rel;
    try {
      const ParsedName name = parse_name(file.filename().string());
      row.script = name.script;
      row.level = name.level;
      row.doc = name.doc;
      row.line = name.line;
      row.word = name.word;
    } catch (const PipelineError& err) {
      skip(err.what());
      continue;
    }
    if (opts.modality_override) {
      row.modality = *opts.modality_override;
    } else {
      const fs::path relpath(rel);
      const std::string top =
          relpath.begin() == relpath.end() ? "" : lower(relpath.begin()->string());
      if (top == "handwritten") row.modality = Modality::Handwritten;
      else if (top == "printed") row.modality = Modality::Printed;
      else {
        skip("no handwritten/ or printed/ ancestor and no override");
        continue;
      }
    }
    try {
      const img::RasterImage page = img::load_png(file.string());
      row.fg_pixels = img::binarize(page, opts.binarize).foreground_count();
    } catch (const PipelineError& err) {
      skip(err.what());
      continue;
    }
    if (row.fg_pixels == 0 && row.level != Level::Document) {
      skip("blank image");
      continue;
    }
    result.manifest.rows.push_back(std::move(row));
  }
  sort_manifest(result.manifest);
  std::sort(result.skipped.begin(), result.skipped.end());
  return result;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("io-error", "cannot write " + path);
  out << "path,script,level,modality,doc,line,word,fg_pixels\n";
  for (const ManifestRow& row : m.rows) {
    out << row.path << ','
        << script_registry()[static_cast<std::size_t>(row.script)].abbrev << ','
        << level_name(row.level) << ',' << modality_name(row.modality) << ','
        << row.doc << ',';
    if (row.line > 0) out << row.line;
    out << ',';
    if (row.word > 0) out << row.word;
    out << ',' << row.fg_pixels << '\n';
  }
  if (!out) throw PipelineError("io-error", "short write to " + path);
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("io-error", "cannot open " + path);
  Manifest m;
  m.root = fs::path(path).parent_path().string();
  std::string line;
  if (!std::getline(in, line))
    throw PipelineError("format-error", path + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path,script,level,modality,doc,line,word,fg_pixels")
    throw PipelineError("format-error", path + ": unexpected header");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 8)
      throw PipelineError("format-error", path + ": bad row '" + line + "'");
    ManifestRow row;
    row.path = cols[0];
    row.script = script_index(cols[1]);
    row.level = parse_level(cols[2]);
    row.modality = parse_modality(cols[3]);
    const auto index_of = [&](const std::string& tok) {
      if (tok.empty()) return 0;
      if (!all_digits(tok))
        throw PipelineError("format-error",
                            path + ": bad index '" + tok + "'");
      return std::stoi(tok);
    };
    row.doc = index_of(cols[4]);
    row.line = index_of(cols[5]);
    row.word = index_of(cols[6]);
    if (!all_digits(cols[7]))
      throw PipelineError("format-error",
                          path + ": bad pixel count '" + cols[7] + "'");
    row.fg_pixels = std::stoull(cols[7]);
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::string row_path(const Manifest& m, const ManifestRow& row) {
  if (m.root.empty()) return row.path;
  return (fs::path(m.root) / row.path).string();
}

CellCounts summarize(const Manifest& m) {
  CellCounts counts{};
  for (const ManifestRow& row : m.rows)
    ++counts[static_cast<std::size_t>(row.script)]
            [static_cast<std::size_t>(row.level)]
            [static_cast<std::size_t>(row.modality)];
  return counts;
}

}  // namespace scriptid::corpus
