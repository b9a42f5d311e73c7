#include "scriptid/feature_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "wire.hpp"

namespace scriptid::feat {

using img::PipelineError;
using namespace scriptid::wire;

namespace {

constexpr char kMagic[4] = {'M', 'D', 'F', 'V'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void FeatureSet::append(const std::vector<double>& vector, std::string id,
                        std::string script, std::string level,
                        std::string modality) {
  if (vector.size() != dim)
    throw PipelineError("bad-argument", "FeatureSet::append: dimension mismatch");
  for (const double v : vector) values.push_back(static_cast<float>(v));
  ids.push_back(std::move(id));
  scripts.push_back(std::move(script));
  levels.push_back(std::move(level));
  modalities.push_back(std::move(modality));
}

void save_features(const std::string& path, const FeatureSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("io-error", "cannot write " + path);
  out.write(kMagic, 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<std::uint16_t>(set.extractor));
  put_u32(out, set.dim);
  put_u32(out, static_cast<std::uint32_t>(set.count()));
  for (const float v : set.values) put_f32(out, v);
  if (!out) throw PipelineError("io-error", "short write to " + path);

  std::ofstream csv(path + ".csv", std::ios::binary);
  if (!csv) throw PipelineError("io-error", "cannot write " + path + ".csv");
  csv << "sample_id,script,level,modality\n";
  for (std::size_t i = 0; i < set.count(); ++i)
    csv << set.ids[i] << ',' << set.scripts[i] << ',' << set.levels[i] << ','
        << set.modalities[i] << '\n';
}

FeatureSet load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("io-error", "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw PipelineError("format-error", path + ": not a feature file");
  if (get_u16(in) != kVersion)
    throw PipelineError("format-error", path + ": unsupported version");

  FeatureSet set;
  set.extractor = static_cast<Extractor>(get_u16(in));
  set.dim = get_u32(in);
  const std::uint32_t count = get_u32(in);
  set.values.resize(static_cast<std::size_t>(count) * set.dim);
  for (float& v : set.values) v = get_f32(in);
  if (!in) throw PipelineError("format-error", path + ": truncated payload");

  std::ifstream csv(path + ".csv", std::ios::binary);
  if (!csv) throw PipelineError("io-error", "cannot open " + path + ".csv");
  std::string line;
  std::getline(csv, line);  // header
  while (std::getline(csv, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, script, level, modality;
    std::getline(row, id, ',');
    std::getline(row, script, ',');
    std::getline(row, level, ',');
    std::getline(row, modality, ',');
    set.ids.push_back(id);
    set.scripts.push_back(script);
    set.levels.push_back(level);
    set.modalities.push_back(modality);
  }
  if (set.ids.size() != count)
    throw PipelineError("format-error", path + ": sidecar row count mismatch");
  return set;
}

}  // namespace scriptid::feat
