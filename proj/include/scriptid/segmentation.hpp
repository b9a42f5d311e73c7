#pragma once

#include <vector>

#include "scriptid/imageops.hpp"
#include "scriptid/raster.hpp"

namespace scriptid::seg {

enum class Axis { Rows, Columns };

/// Foreground projection profile along one axis of a rectangle.
struct Profile {
  Axis axis = Axis::Rows;
  std::vector<int> counts;
};

/// Counts foreground pixels per row (or per column) of `box`.
Profile project(const img::BinaryImage& mask, const img::Box& box, Axis axis);

/// Number of local maxima of the profile after smoothing with a centered
/// window of odd width (windowed sums, zero padded outside the profile).
/// Plateaus count once; entries that smooth to zero never form a peak.
int count_peaks(const Profile& profile, int window);

/// A connected piece of a page: tight bounding box in the parent's
/// coordinates plus the box-sized foreground mask of exactly the pixels
/// that belong to the piece.
struct Region {
  img::Box box;
  img::BinaryImage mask;
  int index = 0;  ///< 1-based reading-order position within the parent
};

/// Splits a page mask into text lines.  Every foreground pixel of the page
/// lands in exactly one returned region; regions are ordered top to bottom
/// (ties left to right).  A blank page yields no regions.
std::vector<Region> segment_lines(const img::BinaryImage& page);

/// Splits a text-line mask into words at column gaps wider than a third of
/// the line height.  Words are ordered left to right; a blank line yields
/// no regions.
std::vector<Region> segment_words(const img::BinaryImage& line);

/// Pseudo-word grouping for scripts without reliable inter-word gaps:
/// connected components, taken left to right, are bundled into groups of
/// 2, 3 and 4 components in a repeating cycle (the final group may be
/// short).
std::vector<Region> pseudo_segment(const img::BinaryImage& line);

}  // namespace scriptid::seg
