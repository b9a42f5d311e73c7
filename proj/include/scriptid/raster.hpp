#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scriptid::img {

/// Thrown by image/segmentation/classification routines on contract
/// violations.  `code` carries a stable machine-readable tag.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool operator==(const Box&) const = default;
};

/// 8-bit grayscale raster, row-major, 0 = black ink, 255 = white paper.
struct RasterImage {
  int width = 0;
  int height = 0;
  double dpi = 300.0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int w, int h, double d, std::uint8_t fill = 255)
      : width(w), height(h), dpi(d),
        pixels(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

/// Binary raster; true = foreground (ink).  Keeps a foreground-pixel count
/// that is updated on every write, so counting is O(1).
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(int w, int h, double d)
      : width_(w), height_(h), dpi_(d),
        mask_(static_cast<std::size_t>(w) * h, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double dpi() const { return dpi_; }
  bool empty() const { return width_ <= 0 || height_ <= 0; }

  bool at(int x, int y) const {
    return mask_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    std::uint8_t& cell = mask_[static_cast<std::size_t>(y) * width_ + x];
    fg_ += static_cast<std::size_t>(v) - static_cast<std::size_t>(cell != 0);
    cell = v ? 1 : 0;
  }
  std::size_t foreground_count() const { return fg_; }

  const std::vector<std::uint8_t>& data() const { return mask_; }

  /// Tight bounding box of the foreground; empty box when blank.
  Box foreground_box() const;

  bool operator==(const BinaryImage& o) const {
    return width_ == o.width_ && height_ == o.height_ && mask_ == o.mask_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double dpi_ = 300.0;
  std::vector<std::uint8_t> mask_;
  std::size_t fg_ = 0;
};

}  // namespace scriptid::img
