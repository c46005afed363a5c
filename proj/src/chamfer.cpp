#include <algorithm>

#include "gaze2seg/interp.hpp"

namespace g2s {

Image2D<std::int32_t> chamfer_distance(const SliceMask& sources) {
  const int w = sources.width;
  const int h = sources.height;
  Image2D<std::int32_t> d(w, h, kChamferUnreachable);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources.data[i]) d.data[i] = 0;
  }

  auto relax = [&](int x, int y, int nx, int ny, std::int32_t cost) {
    if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
    const std::int32_t cand = d(nx, ny) + cost;
    if (cand < d(x, y)) d(x, y) = cand;
  };

  // Forward pass: top-left to bottom-right, causal half of the 3x3 kernel.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      relax(x, y, x - 1, y, kChamferAxial);
      relax(x, y, x - 1, y - 1, kChamferDiagonal);
      relax(x, y, x, y - 1, kChamferAxial);
      relax(x, y, x + 1, y - 1, kChamferDiagonal);
    }
  }
  // Backward pass: bottom-right to top-left, anti-causal half.
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      relax(x, y, x + 1, y, kChamferAxial);
      relax(x, y, x + 1, y + 1, kChamferDiagonal);
      relax(x, y, x, y + 1, kChamferAxial);
      relax(x, y, x - 1, y + 1, kChamferDiagonal);
    }
  }
  return d;
}

std::vector<double> SignedDistanceMap::values() const {
  std::vector<double> out(thirds.size());
  std::transform(thirds.data.begin(), thirds.data.end(), out.begin(), [](std::int32_t v) { return v / 3.0; });
  return out;
}

SignedDistanceMap chamfer_sdt(const SliceMask& mask) {
  const std::size_t fg = count_foreground(mask);
  if (fg == 0 || fg == mask.size()) {
    fail(Errc::kAllSameClass, fg == 0 ? "mask has no foreground" : "mask has no background");
  }
  SliceMask background(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) background.data[i] = mask.data[i] ? 0 : 1;

  const auto to_background = chamfer_distance(background);  // meaningful on foreground pixels
  const auto to_foreground = chamfer_distance(mask);        // meaningful on background pixels

  SignedDistanceMap out{Image2D<std::int32_t>(mask.width, mask.height)};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    out.thirds.data[i] = mask.data[i] ? to_background.data[i] : -to_foreground.data[i];
  }
  return out;
}

}  // namespace g2s
