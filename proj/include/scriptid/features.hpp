#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "scriptid/raster.hpp"

namespace scriptid::feat {

/// Per-pixel code plane; -1 marks positions where no code is defined.
struct CodeMap {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> codes;

  std::int16_t at(int x, int y) const {
    return codes[static_cast<std::size_t>(y) * width + x];
  }
};

/// 8-neighbour local binary patterns.  A code exists at interior ink
/// pixels only; each neighbour contributes its bit when it is at least as
/// bright as the centre.  Bits run clockwise from the top-left neighbour.
CodeMap lbp_map(const img::RasterImage& gray, const img::BinaryImage& ink);

/// 255-bin L1-normalized histogram of a code map.  The all-ones code 255
/// (produced by flat regions) is discarded.  Throws
/// "degenerate-flat-region" when nothing remains to normalize; callers
/// that need totality substitute a zero vector.
std::vector<double> lbp_histogram(const CodeMap& map);

/// Orthonormal DCT-II of a vector.
std::vector<double> dct2(const std::vector<double>& values);

/// Texture descriptor: three overlapping horizontal bands (top edges at
/// 0, 30% and 60% of the height, each 40% tall), one LBP histogram per
/// band (zero vector for degenerate bands), concatenated to 765 values
/// and compressed with the DCT; the DC coefficient is dropped, keeping
/// 255 dimensions.
std::vector<double> lbp_feature(const img::RasterImage& gray,
                                const img::BinaryImage& ink);

/// The 20 homogeneity templates: unordered pairs of distinct
/// non-adjacent positions on the 8-neighbour ring, enumerated in
/// lexicographic order of the (clockwise) position indices.
struct TemplateSet {
  std::array<std::array<int, 2>, 20> pairs;
};
const TemplateSet& hot_templates();

/// 40-dimensional homogeneity response of one rectangular region: per
/// template, the number of interior pixels strictly brighter than both
/// template neighbours, counted once on intensity and once on the 3x3
/// Sobel gradient magnitude, then L2-normalized together.  A region with
/// no ink yields the zero vector.
std::array<double, 40> hot_region(const img::RasterImage& gray,
                                  const img::BinaryImage& ink,
                                  const TemplateSet& templates);

/// Ink centroid rounded to the nearest pixel and clamped so both sides of
/// each axis stay non-empty.  Throws "blank-image" for an empty mask.
std::pair<int, int> equi_mass_split(const img::BinaryImage& ink);

/// Two-level pyramid of homogeneity responses: the whole region plus the
/// four cells obtained by splitting at the equi-mass point, each cell
/// evaluated on its own crop.  Cells without ink contribute zeros.
/// 5 x 40 = 200 dimensions.
std::vector<double> quadtree_hot(const img::RasterImage& gray,
                                 const img::BinaryImage& ink);

/// Multi-block LBP: cells are block x block sums; the code compares the
/// eight ring cells against the centre cell, bits clockwise from the
/// top-left.  Codes exist where all nine cells fit inside the image;
/// block must be in {1,2,3,4} and the image at least 3*block on each
/// side.  block=1 coincides with lbp_map under an all-true ink mask.
CodeMap mblbp_map(const img::RasterImage& gray, int block);

struct MblbpConfig {
  bool whole_patch = true;       ///< include the full region as a patch
  int grid = 3;                  ///< grid x grid half-size patches
  std::vector<int> scales{1, 2, 3, 4};
};

/// Dense multi-block descriptor: the whole region plus a grid of
/// half-size patches whose corners sit at quarter fractions of the
/// region, each encoded at every scale with a 256-bin L1 histogram (no
/// bin dropped).  Undersized patch/scale combinations contribute zeros,
/// as does a region with no ink.  Default layout: 10 patches x 4 scales
/// x 256 bins = 10240 dimensions.
std::vector<double> dense_mblbp_feature(const img::RasterImage& gray,
                                        const img::BinaryImage& ink,
                                        const MblbpConfig& config = {});

enum class Extractor : std::uint16_t { Lbp = 1, Hot = 2, Dmb = 3 };

int extractor_dim(Extractor e);
const char* extractor_name(Extractor e);

/// Runs one of the three extractors on a region crop.
std::vector<double> extract(Extractor e, const img::RasterImage& gray,
                            const img::BinaryImage& ink);

}  // namespace scriptid::feat
