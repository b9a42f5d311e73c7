#include "scriptid/imageops.hpp"

#include <algorithm>
#include <cmath>

#include <map>

namespace scriptid::img {

namespace {

// Summed-area table with a leading zero row/column, so the sum over
// [x0,x1) x [y0,y1) is S(x1,y1)-S(x0,y1)-S(x1,y0)+S(x0,y0).
std::vector<std::uint64_t> integral(const RasterImage& image) {
  const int w = image.width, h = image.height;
  std::vector<std::uint64_t> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::uint64_t row = 0;
    const std::uint8_t* src = image.pixels.data() + static_cast<std::size_t>(y) * w;
    std::uint64_t* above = sat.data() + static_cast<std::size_t>(y) * (w + 1);
    std::uint64_t* here = above + (w + 1);
    for (int x = 0; x < w; ++x) {
      row += src[x];
      here[x + 1] = above[x + 1] + row;
    }
  }
  return sat;
}

}  // namespace

BinaryImage binarize(const RasterImage& image, const BinarizeOptions& opt) {
  if (image.empty())
    throw PipelineError("empty-raster", "binarize: empty input image");
  if (opt.window < 3 || opt.window % 2 == 0)
    throw PipelineError("bad-argument", "binarize: window must be odd and >= 3");
  if (opt.sensitivity <= 0.0 || opt.sensitivity >= 1.0)
    throw PipelineError("bad-argument", "binarize: sensitivity must be in (0,1)");

  const int w = image.width, h = image.height, r = opt.window / 2;
  const std::vector<std::uint64_t> sat = integral(image);
  BinaryImage mask(w, h, image.dpi);

  const double scale = 1.0 - opt.sensitivity;
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    const std::uint64_t* s0 = sat.data() + static_cast<std::size_t>(y0) * stride;
    const std::uint64_t* s1 = sat.data() + static_cast<std::size_t>(y1) * stride;
    const std::uint8_t* px = image.pixels.data() + static_cast<std::size_t>(y) * w;
    const int rows = y1 - y0;
    const auto clipped = [&](int x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const std::uint64_t sum = s1[x1] - s0[x1] - s1[x0] + s0[x0];
      const double mean = static_cast<double>(sum) / (rows * (x1 - x0));
      if (px[x] < mean * scale) mask.set(x, y, true);
    };
    for (int x = 0; x < std::min(r, w); ++x) clipped(x);
    for (int x = r; x <= w - r - 1; ++x) {
      const std::uint64_t sum =
          s1[x + r + 1] - s0[x + r + 1] - s1[x - r] + s0[x - r];
      const double mean = static_cast<double>(sum) / (rows * opt.window);
      if (px[x] < mean * scale) mask.set(x, y, true);
    }
    for (int x = std::max(r, w - r); x < w; ++x) clipped(x);
  }

  if (!opt.refine || mask.foreground_count() == 0) return mask;

  const double limit = estimate_stroke_width(mask) / 2.0;
  const ComponentSet comps = connected_components(mask);
  std::vector<char> drop(comps.components.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < comps.components.size(); ++i) {
    const Box& b = comps.components[i].box;
    if (b.width() < limit && b.height() < limit) {
      drop[i] = 1;
      any = true;
    }
  }
  if (!any) return mask;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::int32_t id = comps.label_at(x, y);
      if (id && drop[id - 1]) mask.set(x, y, false);
    }
  return mask;
}

int estimate_stroke_width(const BinaryImage& mask) {
  if (mask.foreground_count() == 0)
    throw PipelineError("blank-image", "estimate_stroke_width: no foreground");
  std::map<int, std::size_t> runs;
  for (int y = 0; y < mask.height(); ++y) {
    int len = 0;
    for (int x = 0; x <= mask.width(); ++x) {
      if (x < mask.width() && mask.at(x, y)) {
        ++len;
      } else if (len) {
        ++runs[len];
        len = 0;
      }
    }
  }
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [len, count] : runs)
    if (count > best_count) {  // map iterates lengths ascending: ties stay small
      best = len;
      best_count = count;
    }
  return best;
}

RasterImage equalize_ink(const BinaryImage& mask) {
  if (mask.empty())
    throw PipelineError("empty-raster", "equalize_ink: empty input mask");
  const int w = mask.width(), h = mask.height();
  RasterImage out(w, h, mask.dpi());
  if (mask.foreground_count() == 0) return out;  // stays uniform background

  const double sigma = (0.2 * mask.dpi() / 25.4) / 2.0;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i)
    total += kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (double& k : kernel) k /= total;

  // separable blur of the ink indicator, zero padded
  std::vector<double> pass1(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      double* row = pass1.data() + static_cast<std::size_t>(y) * w;
      const int k0 = std::max(-radius, -x), k1 = std::min(radius, w - 1 - x);
      for (int k = k0; k <= k1; ++k) row[x + k] += kernel[k + radius];
    }
  std::vector<double> density(static_cast<std::size_t>(w) * h, 0.0);
  for (int x = 0; x < w; ++x)
    for (int y = 0; y < h; ++y) {
      const double v = pass1[static_cast<std::size_t>(y) * w + x];
      if (v == 0.0) continue;
      const int k0 = std::max(-radius, -y), k1 = std::min(radius, h - 1 - y);
      for (int k = k0; k <= k1; ++k)
        density[static_cast<std::size_t>(y + k) * w + x] += v * kernel[k + radius];
    }

  const auto [lo_it, hi_it] = std::minmax_element(density.begin(), density.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) {
    std::fill(out.pixels.begin(), out.pixels.end(), 0);
    return out;
  }
  for (std::size_t i = 0; i < density.size(); ++i)
    out.pixels[i] = static_cast<std::uint8_t>(
        std::lround(255.0 * (hi - density[i]) / (hi - lo)));
  return out;
}

namespace {

std::int32_t find_root(std::vector<std::int32_t>& parent, std::int32_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

ComponentSet connected_components(const BinaryImage& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8)
    throw PipelineError("bad-argument",
                        "connected_components: connectivity must be 4 or 8");
  const int w = mask.width(), h = mask.height();
  ComponentSet set;
  set.width = w;
  set.height = h;
  set.labels.assign(static_cast<std::size_t>(w) * h, 0);
  if (w <= 0 || h <= 0) return set;

  // Two-pass labelling on row runs: collect [x0,x1) runs, union runs that
  // touch between neighbouring rows, then number the classes in raster
  // order of their first run.
  struct Run {
    int y, x0, x1;
  };
  const std::uint8_t* fg = mask.data().data();
  std::vector<Run> runs;
  std::vector<std::size_t> row_at(static_cast<std::size_t>(h) + 1, 0);
  for (int y = 0; y < h; ++y) {
    row_at[y] = runs.size();
    const std::uint8_t* row = fg + static_cast<std::size_t>(y) * w;
    int x = 0;
    while (x < w) {
      if (!row[x]) {
        ++x;
        continue;
      }
      int e = x;
      while (e < w && row[e]) ++e;
      runs.push_back({y, x, e});
      x = e;
    }
  }
  row_at[h] = runs.size();

  std::vector<std::int32_t> parent(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i)
    parent[i] = static_cast<std::int32_t>(i);
  const int slack = connectivity == 8 ? 1 : 0;
  for (int y = 1; y < h; ++y) {
    std::size_t a = row_at[y - 1];
    const std::size_t a_end = row_at[y];
    for (std::size_t b = row_at[y]; b < row_at[y + 1]; ++b) {
      while (a < a_end && runs[a].x1 + slack <= runs[b].x0) ++a;
      for (std::size_t t = a;
           t < a_end && runs[t].x0 < runs[b].x1 + slack; ++t) {
        const std::int32_t ra = find_root(parent, static_cast<std::int32_t>(t));
        const std::int32_t rb = find_root(parent, static_cast<std::int32_t>(b));
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }

  std::vector<std::int32_t> id_of(runs.size(), 0);
  std::int32_t* lab = set.labels.data();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::int32_t root = find_root(parent, static_cast<std::int32_t>(i));
    std::int32_t id = id_of[root];
    if (id == 0) {
      id = set.count() + 1;
      id_of[root] = id;
      ComponentInfo info;
      info.box = Box{runs[i].x0, runs[i].y, runs[i].x1, runs[i].y + 1};
      set.components.push_back(info);
    }
    ComponentInfo& info = set.components[id - 1];
    info.pixels += static_cast<std::size_t>(runs[i].x1 - runs[i].x0);
    info.box.x0 = std::min(info.box.x0, runs[i].x0);
    info.box.x1 = std::max(info.box.x1, runs[i].x1);
    info.box.y1 = std::max(info.box.y1, runs[i].y + 1);
    std::fill_n(lab + static_cast<std::size_t>(runs[i].y) * w + runs[i].x0,
                runs[i].x1 - runs[i].x0, id);
  }
  return set;
}

namespace {

long long cross(const std::pair<int, int>& o, const std::pair<int, int>& a,
                const std::pair<int, int>& b) {
  return static_cast<long long>(a.first - o.first) * (b.second - o.second) -
         static_cast<long long>(a.second - o.second) * (b.first - o.first);
}

// Andrew's monotone chain; returns the hull vertices in boundary order
// with collinear points dropped.
std::vector<std::pair<int, int>> hull_of(std::vector<std::pair<int, int>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n <= 2) return pts;
  std::vector<std::pair<int, int>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

BinaryImage convex_hull_mask(const BinaryImage& mask) {
  const int w = mask.width(), h = mask.height();
  BinaryImage out(w, h, mask.dpi());
  // Only the leftmost/rightmost pixel of each row can be a hull vertex.
  std::vector<std::pair<int, int>> pts;
  const std::uint8_t* fg = mask.data().data();
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = fg + static_cast<std::size_t>(y) * w;
    int lo = -1, hi = -1;
    for (int x = 0; x < w; ++x)
      if (row[x]) {
        if (lo < 0) lo = x;
        hi = x;
      }
    if (lo < 0) continue;
    pts.emplace_back(lo, y);
    if (hi != lo) pts.emplace_back(hi, y);
  }
  if (pts.empty()) return out;

  const std::vector<std::pair<int, int>> hull = hull_of(std::move(pts));
  if (hull.size() == 1) {
    out.set(hull[0].first, hull[0].second, true);
    return out;
  }
  if (hull.size() == 2) {  // collinear foreground: rasterize the segment
    const auto [x0, y0] = hull[0];
    const auto [x1, y1] = hull[1];
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    for (int i = 0; i <= steps; ++i) {
      const int x = x0 + static_cast<int>(std::lround(i * double(x1 - x0) / steps));
      const int y = y0 + static_cast<int>(std::lround(i * double(y1 - y0) / steps));
      out.set(x, y, true);
    }
    return out;
  }

  constexpr double eps = 1e-7;
  int ymin = h, ymax = -1;
  for (const auto& [px, py] : hull) {
    ymin = std::min(ymin, py);
    ymax = std::max(ymax, py);
  }
  for (int y = ymin; y <= ymax; ++y) {
    double lo = 1e18, hi = -1e18;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const auto [ax, ay] = hull[i];
      const auto [bx, by] = hull[(i + 1) % hull.size()];
      if ((ay <= y && by >= y) || (by <= y && ay >= y)) {
        if (ay == by) {
          lo = std::min(lo, double(std::min(ax, bx)));
          hi = std::max(hi, double(std::max(ax, bx)));
        } else {
          const double x = ax + double(y - ay) * (bx - ax) / (by - ay);
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
    }
    if (hi < lo) continue;
    const int x0 = std::max(0, static_cast<int>(std::ceil(lo - eps)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(hi + eps)));
    for (int x = x0; x <= x1; ++x) out.set(x, y, true);
  }
  return out;
}

namespace {

void check_crop(int w, int h, const Box& box) {
  if (box.empty() || box.x0 < 0 || box.y0 < 0 || box.x1 > w || box.y1 > h)
    throw PipelineError("bad-argument", "crop: box outside the image");
}

}  // namespace

BinaryImage crop(const BinaryImage& mask, const Box& box) {
  check_crop(mask.width(), mask.height(), box);
  BinaryImage out(box.width(), box.height(), mask.dpi());
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x)
      if (mask.at(x, y)) out.set(x - box.x0, y - box.y0, true);
  return out;
}

RasterImage crop(const RasterImage& image, const Box& box) {
  check_crop(image.width, image.height, box);
  RasterImage out(box.width(), box.height(), image.dpi);
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x)
      out.at(x - box.x0, y - box.y0) = image.at(x, y);
  return out;
}

BinaryImage dilate_h(const BinaryImage& mask, int radius) {
  if (radius < 1)
    throw PipelineError("bad-argument", "dilate_h: radius must be >= 1");
  const int w = mask.width(), h = mask.height();
  BinaryImage out(w, h, mask.dpi());
  std::vector<int> prefix(w + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.at(x, y) ? 1 : 0);
    for (int x = 0; x < w; ++x) {
      const int a = std::max(0, x - radius), b = std::min(w, x + radius + 1);
      if (prefix[b] - prefix[a] > 0) out.set(x, y, true);
    }
  }
  return out;
}

BinaryImage erode_h(const BinaryImage& mask, int radius) {
  if (radius < 1)
    throw PipelineError("bad-argument", "erode_h: radius must be >= 1");
  const int w = mask.width(), h = mask.height();
  BinaryImage out(w, h, mask.dpi());
  std::vector<int> prefix(w + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.at(x, y) ? 1 : 0);
    for (int x = 0; x < w; ++x) {
      const int a = std::max(0, x - radius), b = std::min(w, x + radius + 1);
      if (prefix[b] - prefix[a] == b - a) out.set(x, y, true);
    }
  }
  return out;
}

}  // namespace scriptid::img
