#pragma once

#include <string>

#include "scriptid/raster.hpp"

namespace scriptid::img {

/// Loads an 8-bit grayscale raster from a PNG file.  Color inputs are
/// converted; the dpi is taken from the pHYs chunk when present, otherwise
/// `fallback_dpi` is used.
RasterImage load_png(const std::string& path, double fallback_dpi = 300.0);

/// Writes an 8-bit grayscale PNG with a pHYs chunk recording the dpi.
void save_png(const std::string& path, const RasterImage& image);

/// Writes a binary image as a two-level PNG (ink 0, background 255).
void save_png(const std::string& path, const BinaryImage& image);

/// Interprets a raster as a mask: every pixel darker than 128 is ink.
BinaryImage threshold_dark(const RasterImage& image);

/// Renders a mask as a two-level raster (ink 0, background 255).
RasterImage to_raster(const BinaryImage& image);

}  // namespace scriptid::img
