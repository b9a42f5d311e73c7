#include "scriptid/segmentation.hpp"

#include <algorithm>
#include <numeric>

namespace scriptid::seg {

using img::BinaryImage;
using img::Box;
using img::ComponentSet;
using img::PipelineError;

Profile project(const BinaryImage& mask, const Box& box, Axis axis) {
  if (box.empty() || box.x0 < 0 || box.y0 < 0 || box.x1 > mask.width() ||
      box.y1 > mask.height())
    throw PipelineError("bad-argument", "project: box outside the mask");
  Profile p;
  p.axis = axis;
  p.counts.assign(axis == Axis::Rows ? box.height() : box.width(), 0);
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x)
      if (mask.at(x, y))
        ++p.counts[axis == Axis::Rows ? y - box.y0 : x - box.x0];
  return p;
}

int count_peaks(const Profile& profile, int window) {
  if (window < 1 || window % 2 == 0)
    throw PipelineError("bad-argument", "count_peaks: window must be odd");
  const int n = static_cast<int>(profile.counts.size());
  if (n == 0) return 0;
  const int r = window / 2;
  std::vector<long long> smooth(n, 0);
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - r), b = std::min(n - 1, i + r);
    for (int j = a; j <= b; ++j) smooth[i] += profile.counts[j];
  }
  int peaks = 0;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && smooth[j + 1] == smooth[i]) ++j;
    const long long left = i > 0 ? smooth[i - 1] : -1;
    const long long right = j + 1 < n ? smooth[j + 1] : -1;
    if (smooth[i] > 0 && smooth[i] > left && smooth[i] > right) ++peaks;
    i = j + 1;
  }
  return peaks;
}

namespace {

// Pixels of one labelled component, cropped to its bounding box.
BinaryImage component_mask(const ComponentSet& comps, int id, const Box& box,
                           double dpi) {
  BinaryImage m(box.width(), box.height(), dpi);
  for (int y = box.y0; y < box.y1; ++y)
    for (int x = box.x0; x < box.x1; ++x)
      if (comps.label_at(x, y) == id) m.set(x - box.x0, y - box.y0, true);
  return m;
}

int topmost(const ComponentSet& comps) {
  int best = 1;
  for (int id = 2; id <= comps.count(); ++id) {
    const Box& a = comps.components[id - 1].box;
    const Box& b = comps.components[best - 1].box;
    if (a.y0 < b.y0 || (a.y0 == b.y0 && a.x0 < b.x0)) best = id;
  }
  return best;
}

Region make_region(const BinaryImage& cut) {
  Region r;
  r.box = cut.foreground_box();
  r.mask = img::crop(cut, r.box);
  return r;
}

}  // namespace

std::vector<Region> segment_lines(const BinaryImage& page) {
  std::vector<Region> lines;
  if (page.foreground_count() == 0) return lines;
  const int w = page.width(), h = page.height();
  const double dpi = page.dpi();
  const int sw = img::estimate_stroke_width(page);
  const int smooth_window = sw | 1;

  BinaryImage remaining = page;

  while (remaining.foreground_count() > 0) {
    // Rebuild merged objects from what is left: convex hulls of the
    // remaining components, bridged horizontally so characters of one
    // line fuse while neighbouring lines stay apart.
    const ComponentSet comps = img::connected_components(remaining);
    BinaryImage hulls(w, h, dpi);
    for (int id = 1; id <= comps.count(); ++id) {
      const Box& cb = comps.components[id - 1].box;
      const BinaryImage local = img::convex_hull_mask(
          component_mask(comps, id, cb, dpi));
      for (int y = 0; y < local.height(); ++y)
        for (int x = 0; x < local.width(); ++x)
          if (local.at(x, y)) hulls.set(cb.x0 + x, cb.y0 + y, true);
    }
    const BinaryImage merged = img::dilate_h(hulls, 2 * sw);
    const ComponentSet objects = img::connected_components(merged);
    const int obj = topmost(objects);
    const Box& ob = objects.components[obj - 1].box;

    BinaryImage object_mask(w, h, dpi);
    BinaryImage candidate(w, h, dpi);
    for (int y = ob.y0; y < ob.y1; ++y)
      for (int x = ob.x0; x < ob.x1; ++x)
        if (objects.label_at(x, y) == obj) {
          object_mask.set(x, y, true);
          if (remaining.at(x, y)) candidate.set(x, y, true);
        }

    // The merged object is close to convex, so its own row profile is
    // normally unimodal; several peaks mean several lines were fused.
    BinaryImage cut = candidate;
    const Profile prof = project(object_mask, ob, Axis::Rows);
    if (count_peaks(prof, smooth_window) > 1) {
      // Over-merged object: peel it by eroding until the topmost piece
      // spans a single line, then grow that piece back.
      int acc = 0;
      while (true) {
        acc += sw;
        if (acc > ob.width()) break;  // keep the whole object
        const BinaryImage eroded = img::erode_h(object_mask, acc);
        if (eroded.foreground_count() == 0) break;
        const ComponentSet pieces = img::connected_components(eroded);
        const int piece = topmost(pieces);
        const Box& pb = pieces.components[piece - 1].box;
        BinaryImage piece_mask(w, h, dpi);
        for (int y = pb.y0; y < pb.y1; ++y)
          for (int x = pb.x0; x < pb.x1; ++x)
            if (pieces.label_at(x, y) == piece) piece_mask.set(x, y, true);
        const Profile piece_prof = project(piece_mask, pb, Axis::Rows);
        if (count_peaks(piece_prof, smooth_window) != 1) continue;
        const BinaryImage grown = img::dilate_h(piece_mask, acc);
        BinaryImage carved(w, h, dpi);
        for (int y = ob.y0; y < ob.y1; ++y)
          for (int x = ob.x0; x < ob.x1; ++x)
            if (grown.at(x, y) && candidate.at(x, y)) carved.set(x, y, true);
        if (carved.foreground_count() > 0) cut = carved;
        break;
      }
    }

    Region region = make_region(cut);
    const Box done = region.box;
    lines.push_back(std::move(region));
    for (int y = done.y0; y < done.y1; ++y)
      for (int x = done.x0; x < done.x1; ++x)
        if (cut.at(x, y)) remaining.set(x, y, false);
  }

  std::sort(lines.begin(), lines.end(), [](const Region& a, const Region& b) {
    if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
    return a.box.x0 < b.box.x0;
  });
  for (std::size_t i = 0; i < lines.size(); ++i)
    lines[i].index = static_cast<int>(i) + 1;
  return lines;
}

std::vector<Region> segment_words(const BinaryImage& line) {
  std::vector<Region> words;
  if (line.foreground_count() == 0) return words;
  const int w = line.width(), h = line.height();
  const Profile cols = project(line, Box{0, 0, w, h}, Axis::Columns);

  // A zero-column run separates words when it is wider than a third of
  // the line height.
  std::vector<char> separator(w, 0);
  for (int x = 0; x < w;) {
    if (cols.counts[x] != 0) {
      ++x;
      continue;
    }
    int e = x;
    while (e < w && cols.counts[e] == 0) ++e;
    if (3 * (e - x) > h)
      for (int i = x; i < e; ++i) separator[i] = 1;
    x = e;
  }

  for (int x = 0; x < w;) {
    if (separator[x]) {
      ++x;
      continue;
    }
    int e = x;
    while (e < w && !separator[e]) ++e;
    int a = x, b = e;
    while (a < b && cols.counts[a] == 0) ++a;
    while (b > a && cols.counts[b - 1] == 0) --b;
    if (a < b) {
      const Profile rows = project(line, Box{a, 0, b, h}, Axis::Rows);
      int r0 = 0, r1 = h;
      while (rows.counts[r0] == 0) ++r0;
      while (rows.counts[r1 - 1] == 0) --r1;
      Region reg;
      reg.box = Box{a, r0, b, r1};
      reg.mask = img::crop(line, reg.box);
      words.push_back(std::move(reg));
    }
    x = e;
  }
  for (std::size_t i = 0; i < words.size(); ++i)
    words[i].index = static_cast<int>(i) + 1;
  return words;
}

std::vector<Region> pseudo_segment(const BinaryImage& line) {
  std::vector<Region> groups;
  if (line.foreground_count() == 0) return groups;
  const ComponentSet comps = img::connected_components(line);
  std::vector<int> order(comps.count());
  std::iota(order.begin(), order.end(), 1);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Box& ba = comps.components[a - 1].box;
    const Box& bb = comps.components[b - 1].box;
    if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
    if (ba.y0 != bb.y0) return ba.y0 < bb.y0;
    return a < b;
  });

  static constexpr int cycle[3] = {2, 3, 4};
  std::size_t at = 0;
  int phase = 0;
  while (at < order.size()) {
    const std::size_t take =
        std::min<std::size_t>(cycle[phase], order.size() - at);
    BinaryImage group(line.width(), line.height(), line.dpi());
    for (std::size_t i = at; i < at + take; ++i) {
      const int id = order[i];
      const Box& cb = comps.components[id - 1].box;
      for (int y = cb.y0; y < cb.y1; ++y)
        for (int x = cb.x0; x < cb.x1; ++x)
          if (comps.label_at(x, y) == id) group.set(x, y, true);
    }
    groups.push_back(make_region(group));
    at += take;
    phase = (phase + 1) % 3;
  }
  for (std::size_t i = 0; i < groups.size(); ++i)
    groups[i].index = static_cast<int>(i) + 1;
  return groups;
}

}  // namespace scriptid::seg
