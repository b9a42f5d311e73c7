#include "scriptid/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "scriptid/imageops.hpp"

namespace scriptid::feat {

using img::BinaryImage;
using img::Box;
using img::PipelineError;
using img::RasterImage;

namespace {

// clockwise ring, starting at the top-left neighbour
constexpr int kRingDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
constexpr int kRingDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};

void check_same_shape(const RasterImage& gray, const BinaryImage& mask,
                      const char* who) {
  if (gray.width != mask.width() || gray.height != mask.height())
    throw PipelineError("bad-argument",
                        std::string(who) + ": image and mask sizes differ");
}

}  // namespace

CodeMap lbp_map(const RasterImage& gray, const BinaryImage& ink) {
  check_same_shape(gray, ink, "lbp_map");
  CodeMap map;
  map.width = gray.width;
  map.height = gray.height;
  map.codes.assign(static_cast<std::size_t>(gray.width) * gray.height, -1);
  for (int y = 1; y < gray.height - 1; ++y)
    for (int x = 1; x < gray.width - 1; ++x) {
      if (!ink.at(x, y)) continue;
      const int centre = gray.at(x, y);
      int code = 0;
      for (int p = 0; p < 8; ++p)
        if (gray.at(x + kRingDx[p], y + kRingDy[p]) >= centre) code |= 1 << p;
      map.codes[static_cast<std::size_t>(y) * map.width + x] =
          static_cast<std::int16_t>(code);
    }
  return map;
}

namespace {

std::vector<double> histogram_without_flat(const std::vector<std::size_t>& bins) {
  std::size_t total = 0;
  for (int c = 0; c < 255; ++c) total += bins[c];
  if (total == 0)
    throw PipelineError("degenerate-flat-region",
                        "lbp histogram: no non-flat codes to normalize");
  std::vector<double> hist(255);
  for (int c = 0; c < 255; ++c)
    hist[c] = static_cast<double>(bins[c]) / static_cast<double>(total);
  return hist;
}

}  // namespace

std::vector<double> lbp_histogram(const CodeMap& map) {
  std::vector<std::size_t> bins(256, 0);
  for (const std::int16_t code : map.codes)
    if (code >= 0) ++bins[code];
  return histogram_without_flat(bins);
}

namespace {

/// Cosine bases cached per transform size; map nodes are stable, so a
/// returned table stays valid while other threads insert new sizes.
const std::vector<double>& dct_table(std::size_t n) {
  static std::mutex gate;
  static std::map<std::size_t, std::vector<double>> tables;
  const std::scoped_lock lock(gate);
  const auto it = tables.find(n);
  if (it != tables.end()) return it->second;
  std::vector<double> table(n * n);
  const double base = M_PI / (2.0 * static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      table[k * n + i] = std::cos(base * static_cast<double>(k) *
                                  static_cast<double>(2 * i + 1));
  return tables.emplace(n, std::move(table)).first->second;
}

}  // namespace

std::vector<double> dct2(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const std::vector<double>& table = dct_table(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    const double* row = table.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) acc += values[i] * row[i];
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                                : std::sqrt(2.0 / static_cast<double>(n));
    out[k] = scale * acc;
  }
  return out;
}

std::vector<double> lbp_feature(const RasterImage& gray,
                                const BinaryImage& ink) {
  check_same_shape(gray, ink, "lbp_feature");
  const CodeMap map = lbp_map(gray, ink);
  const int h = gray.height;
  const int band_height =
      static_cast<int>(std::max(1L, std::lround(0.4 * h)));

  std::vector<double> stacked;
  stacked.reserve(765);
  for (int band = 0; band < 3; ++band) {
    const int top = static_cast<int>(std::lround(0.3 * band * h));
    const int bottom = std::min(h, top + band_height);
    std::vector<std::size_t> bins(256, 0);
    for (int y = std::min(top, bottom); y < bottom; ++y)
      for (int x = 0; x < map.width; ++x) {
        const std::int16_t code = map.at(x, y);
        if (code >= 0) ++bins[code];
      }
    try {
      const std::vector<double> hist = histogram_without_flat(bins);
      stacked.insert(stacked.end(), hist.begin(), hist.end());
    } catch (const PipelineError&) {
      stacked.insert(stacked.end(), 255, 0.0);  // flat band: zero histogram
    }
  }

  const std::vector<double> spectrum = dct2(stacked);
  return std::vector<double>(spectrum.begin() + 1, spectrum.begin() + 256);
}

const TemplateSet& hot_templates() {
  static const TemplateSet set = [] {
    TemplateSet s{};
    int at = 0;
    for (int a = 0; a < 8; ++a)
      for (int b = a + 1; b < 8; ++b) {
        const bool adjacent = (b - a == 1) || (a == 0 && b == 7);
        if (adjacent) continue;
        s.pairs[at++] = {a, b};
      }
    return s;
  }();
  return set;
}

std::array<double, 40> hot_region(const RasterImage& gray,
                                  const BinaryImage& ink,
                                  const TemplateSet& templates) {
  check_same_shape(gray, ink, "hot_region");
  std::array<double, 40> feature{};
  if (ink.foreground_count() == 0) return feature;
  const int w = gray.width, h = gray.height;

  // A pixel's 8 centre-greater-than-neighbour comparisons form one byte;
  // template counts are folded out of the byte histogram afterwards.
  std::array<unsigned, 20> wanted{};
  for (int t = 0; t < 20; ++t)
    wanted[t] =
        (1u << templates.pairs[t][0]) | (1u << templates.pairs[t][1]);
  const int off[8] = {-w - 1, -w, -w + 1, 1, w + 1, w, w - 1, -1};
  const auto fold = [&](const std::array<std::uint32_t, 256>& hist,
                        int base) {
    for (int t = 0; t < 20; ++t) {
      std::uint64_t n = 0;
      for (unsigned m = 0; m < 256; ++m)
        if ((m & wanted[t]) == wanted[t]) n += hist[m];
      feature[base + t] = static_cast<double>(n);
    }
  };

  const std::uint8_t* px = gray.pixels.data();
  std::array<std::uint32_t, 256> hist{};
  for (int y = 1; y < h - 1; ++y) {
    const std::uint8_t* row = px + static_cast<std::size_t>(y) * w;
    for (int x = 1; x < w - 1; ++x) {
      const int centre = row[x];
      unsigned m = 0;
      for (int p = 0; p < 8; ++p)
        m |= static_cast<unsigned>(centre > row[x + off[p]]) << p;
      ++hist[m];
    }
  }
  fold(hist, 0);

  if (w >= 5 && h >= 5) {
    // Squared Sobel magnitude keeps integer comparisons; the ordering
    // matches the true magnitude since squaring is monotone.
    std::vector<int> mag2(static_cast<std::size_t>(w) * h, 0);
    for (int y = 1; y < h - 1; ++y) {
      const std::uint8_t* r0 = px + static_cast<std::size_t>(y - 1) * w;
      const std::uint8_t* r1 = r0 + w;
      const std::uint8_t* r2 = r1 + w;
      int* out = mag2.data() + static_cast<std::size_t>(y) * w;
      for (int x = 1; x < w - 1; ++x) {
        const int gx = r0[x + 1] + 2 * r1[x + 1] + r2[x + 1] - r0[x - 1] -
                       2 * r1[x - 1] - r2[x - 1];
        const int gy = r2[x - 1] + 2 * r2[x] + r2[x + 1] - r0[x - 1] -
                       2 * r0[x] - r0[x + 1];
        out[x] = gx * gx + gy * gy;
      }
    }
    std::array<std::uint32_t, 256> ghist{};
    for (int y = 2; y < h - 2; ++y) {
      const int* row = mag2.data() + static_cast<std::size_t>(y) * w;
      for (int x = 2; x < w - 2; ++x) {
        const int centre = row[x];
        unsigned m = 0;
        for (int p = 0; p < 8; ++p)
          m |= static_cast<unsigned>(centre > row[x + off[p]]) << p;
        ++ghist[m];
      }
    }
    fold(ghist, 20);
  }

  double norm = 0.0;
  for (const double v : feature) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : feature) v /= norm;
  }
  return feature;
}

std::pair<int, int> equi_mass_split(const BinaryImage& ink) {
  if (ink.foreground_count() == 0)
    throw PipelineError("blank-image", "equi_mass_split: no ink");
  const int w = ink.width(), h = ink.height();
  long long sx = 0, sy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (ink.at(x, y)) {
        sx += x;
        sy += y;
      }
  const double n = static_cast<double>(ink.foreground_count());
  int cx = static_cast<int>(std::lround(sx / n));
  int cy = static_cast<int>(std::lround(sy / n));
  cx = w >= 3 ? std::clamp(cx, 1, w - 2) : w / 2;
  cy = h >= 3 ? std::clamp(cy, 1, h - 2) : h / 2;
  return {cx, cy};
}

std::vector<double> quadtree_hot(const RasterImage& gray,
                                 const BinaryImage& ink) {
  check_same_shape(gray, ink, "quadtree_hot");
  std::vector<double> feature(200, 0.0);
  if (ink.foreground_count() == 0) return feature;

  const TemplateSet& templates = hot_templates();
  const int w = gray.width, h = gray.height;
  const auto emit = [&](int slot, const Box& box) {
    if (box.empty()) return;
    const std::array<double, 40> response = hot_region(
        img::crop(gray, box), img::crop(ink, box), templates);
    std::copy(response.begin(), response.end(), feature.begin() + 40 * slot);
  };

  emit(0, Box{0, 0, w, h});
  const auto [cx, cy] = equi_mass_split(ink);
  emit(1, Box{0, 0, cx, cy});
  emit(2, Box{cx, 0, w, cy});
  emit(3, Box{0, cy, cx, h});
  emit(4, Box{cx, cy, w, h});
  return feature;
}

CodeMap mblbp_map(const RasterImage& gray, int block) {
  if (block < 1 || block > 4)
    throw PipelineError("bad-argument", "mblbp_map: block must be in {1,2,3,4}");
  const int w = gray.width, h = gray.height, b = block;
  if (w < 3 * b || h < 3 * b)
    throw PipelineError("bad-argument", "mblbp_map: image smaller than 3*block");
  CodeMap map;
  map.width = w;
  map.height = h;
  map.codes.assign(static_cast<std::size_t>(w) * h, -1);

  // block sums via a summed-area table with a zero border
  std::vector<std::uint64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::uint64_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += gray.at(x, y);
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  const auto block_sum = [&](int x0, int y0) {
    return sat[static_cast<std::size_t>(y0 + b) * (w + 1) + x0 + b] -
           sat[static_cast<std::size_t>(y0) * (w + 1) + x0 + b] -
           sat[static_cast<std::size_t>(y0 + b) * (w + 1) + x0] +
           sat[static_cast<std::size_t>(y0) * (w + 1) + x0];
  };

  for (int y = b; y <= h - 2 * b; ++y)
    for (int x = b; x <= w - 2 * b; ++x) {
      const std::uint64_t centre = block_sum(x, y);
      int code = 0;
      for (int p = 0; p < 8; ++p)
        if (block_sum(x + b * kRingDx[p], y + b * kRingDy[p]) >= centre)
          code |= 1 << p;
      map.codes[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::int16_t>(code);
    }
  return map;
}

std::vector<double> dense_mblbp_feature(const RasterImage& gray,
                                        const BinaryImage& ink,
                                        const MblbpConfig& config) {
  check_same_shape(gray, ink, "dense_mblbp_feature");
  if (config.grid < 0 || config.scales.empty())
    throw PipelineError("bad-argument", "dense_mblbp_feature: bad config");
  const int w = gray.width, h = gray.height;

  std::vector<Box> patches;
  if (config.whole_patch) patches.push_back(Box{0, 0, w, h});
  const int g = config.grid;
  const double step_x = static_cast<double>(w) / (g + 1);
  const double step_y = static_cast<double>(h) / (g + 1);
  for (int row = 0; row < g; ++row)
    for (int col = 0; col < g; ++col) {
      const int x0 = static_cast<int>(std::lround(col * step_x));
      const int y0 = static_cast<int>(std::lround(row * step_y));
      const int x1 = std::min(w, x0 + static_cast<int>(std::lround(2 * step_x)));
      const int y1 = std::min(h, y0 + static_cast<int>(std::lround(2 * step_y)));
      patches.push_back(Box{x0, y0, x1, y1});
    }

  const std::size_t dim = patches.size() * config.scales.size() * 256;
  std::vector<double> feature(dim, 0.0);
  if (ink.foreground_count() == 0) return feature;

  std::size_t at = 0;
  for (const Box& patch : patches) {
    RasterImage cell;
    if (!patch.empty()) cell = img::crop(gray, patch);
    for (const int scale : config.scales) {
      if (!patch.empty() && cell.width >= 3 * scale && cell.height >= 3 * scale) {
        const CodeMap map = mblbp_map(cell, scale);
        std::vector<std::size_t> bins(256, 0);
        std::size_t total = 0;
        for (const std::int16_t code : map.codes)
          if (code >= 0) {
            ++bins[code];
            ++total;
          }
        if (total > 0)
          for (int c = 0; c < 256; ++c)
            feature[at + c] =
                static_cast<double>(bins[c]) / static_cast<double>(total);
      }
      at += 256;
    }
  }
  return feature;
}

int extractor_dim(Extractor e) {
  switch (e) {
    case Extractor::Lbp: return 255;
    case Extractor::Hot: return 200;
    case Extractor::Dmb: return 10240;
  }
  throw PipelineError("bad-argument", "extractor_dim: unknown extractor");
}

const char* extractor_name(Extractor e) {
  switch (e) {
    case Extractor::Lbp: return "lbp";
    case Extractor::Hot: return "hot";
    case Extractor::Dmb: return "dmb";
  }
  throw PipelineError("bad-argument", "extractor_name: unknown extractor");
}

std::vector<double> extract(Extractor e, const RasterImage& gray,
                            const BinaryImage& ink) {
  switch (e) {
    case Extractor::Lbp: return lbp_feature(gray, ink);
    case Extractor::Hot: return quadtree_hot(gray, ink);
    case Extractor::Dmb: return dense_mblbp_feature(gray, ink);
  }
  throw PipelineError("bad-argument", "extract: unknown extractor");
}

}  // namespace scriptid::feat
