#include "scriptid/raster.hpp"

namespace scriptid::img {

Box BinaryImage::foreground_box() const {
  Box b{width_, height_, 0, 0};
  for (int y = 0; y < height_; ++y) {
    const std::uint8_t* row = mask_.data() + static_cast<std::size_t>(y) * width_;
    for (int x = 0; x < width_; ++x) {
      if (!row[x]) continue;
      if (x < b.x0) b.x0 = x;
      if (y < b.y0) b.y0 = y;
      if (x >= b.x1) b.x1 = x + 1;
      if (y >= b.y1) b.y1 = y + 1;
    }
  }
  if (b.x1 <= b.x0) return Box{};
  return b;
}

}  // namespace scriptid::img
