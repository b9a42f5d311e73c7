#include "scriptid/model_io.hpp"

#include <cstring>
#include <fstream>

#include "scriptid/raster.hpp"
#include "wire.hpp"

namespace scriptid::cls {

using img::PipelineError;
using namespace scriptid::wire;

namespace {

constexpr char kMagic[4] = {'M', 'D', 'S', 'V'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void save_model(const std::string& path, const MultiModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("io-error", "cannot write " + path);
  out.write(kMagic, 4);
  put_u16(out, kVersion);
  put_u16(out, static_cast<std::uint16_t>(m.extractor));
  put_u32(out, m.dim);
  put_u32(out, static_cast<std::uint32_t>(m.support.rows));
  out.put(static_cast<char>(m.kernel.kind));
  put_f64(out, m.kernel.gamma);
  put_f64(out, m.kernel.reg);
  for (double v : m.mean) put_f64(out, v);
  for (double v : m.scale) put_f64(out, v);
  for (double v : m.support.values) put_f64(out, v);
  for (int s = 0; s < kScriptCount; ++s) {
    const auto& head = m.heads[static_cast<std::size_t>(s)];
    out.put(head.live ? 1 : 0);
    put_u16(out, static_cast<std::uint16_t>(s));
    if (!head.live) continue;
    put_f64(out, head.bias);
    for (double v : head.alphas) put_f64(out, v);
  }
  if (!out) throw PipelineError("io-error", "short write to " + path);
}

MultiModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("io-error", "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw PipelineError("format-error", path + ": not a model file");
  if (get_u16(in) != kVersion)
    throw PipelineError("format-error", path + ": unsupported version");
  MultiModel m;
  m.extractor = static_cast<feat::Extractor>(get_u16(in));
  m.dim = get_u32(in);
  const std::uint32_t count = get_u32(in);
  m.kernel.kind = static_cast<KernelConfig::Kind>(in.get());
  m.kernel.gamma = get_f64(in);
  m.kernel.reg = get_f64(in);
  m.mean.resize(m.dim);
  for (double& v : m.mean) v = get_f64(in);
  m.scale.resize(m.dim);
  for (double& v : m.scale) v = get_f64(in);
  m.support = DataMatrix(count, m.dim);
  for (double& v : m.support.values) v = get_f64(in);
  for (int s = 0; s < kScriptCount; ++s) {
    auto& head = m.heads[static_cast<std::size_t>(s)];
    head.live = in.get() == 1;
    if (get_u16(in) != static_cast<std::uint16_t>(s))
      throw PipelineError("format-error", path + ": script slot out of order");
    if (!head.live) continue;
    head.bias = get_f64(in);
    head.alphas.resize(count);
    for (double& v : head.alphas) v = get_f64(in);
  }
  if (!in) throw PipelineError("format-error", path + ": truncated payload");
  return m;
}

}  // namespace scriptid::cls
