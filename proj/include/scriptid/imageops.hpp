#pragma once

#include <cstdint>
#include <vector>

#include "scriptid/raster.hpp"

namespace scriptid::img {

struct BinarizeOptions {
  int window = 31;          ///< odd local-mean window edge, >= 3
  double sensitivity = 0.15;
  bool refine = true;       ///< drop speckles smaller than half a stroke
};

/// Adaptive binarization against the local mean: a pixel is ink when its
/// intensity falls below mean * (1 - sensitivity).  The averaging window is
/// clipped at the borders.  Throws "empty-raster" for degenerate input.
BinaryImage binarize(const RasterImage& image, const BinarizeOptions& opt = {});

/// Dominant stroke width, estimated as the mode of the horizontal
/// foreground run lengths (ties resolved toward the smaller width).
/// Throws "blank-image" when the mask has no foreground.
int estimate_stroke_width(const BinaryImage& mask);

/// Ink-density equalization: Gaussian ink density (sigma = half of 0.2 mm
/// at the mask dpi), min-max normalized and inverted so dense ink is dark
/// and empty background is 255.
RasterImage equalize_ink(const BinaryImage& mask);

struct ComponentInfo {
  Box box;
  std::size_t pixels = 0;
};

struct ComponentSet {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;      ///< 0 background, else component id
  std::vector<ComponentInfo> components; ///< id i stored at components[i-1]

  int count() const { return static_cast<int>(components.size()); }
  std::int32_t label_at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

/// Connected components under 4- or 8-connectivity; ids are dense,
/// 1..count, in raster-scan order of each component's first pixel.
ComponentSet connected_components(const BinaryImage& mask, int connectivity = 8);

/// Filled convex hull of the foreground, rendered into a same-sized mask.
BinaryImage convex_hull_mask(const BinaryImage& mask);

/// Copies the sub-rectangle `box` (which must lie inside the image).
BinaryImage crop(const BinaryImage& mask, const Box& box);
RasterImage crop(const RasterImage& image, const Box& box);

/// Horizontal dilation by `radius` (window 2r+1); beyond the border counts
/// as background.
BinaryImage dilate_h(const BinaryImage& mask, int radius);

/// Horizontal erosion by `radius`; beyond the border counts as foreground,
/// so strokes touching the edge erode the same as interior ones.
BinaryImage erode_h(const BinaryImage& mask, int radius);

}  // namespace scriptid::img
