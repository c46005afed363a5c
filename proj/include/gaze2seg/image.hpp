#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gaze2seg/error.hpp"

namespace g2s {

/// Dense row-major 2D grid, x fastest.
template <class T>
struct Image2D {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image2D() = default;
  Image2D(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  T& operator()(int x, int y) { return data[index(x, y)]; }
  const T& operator()(int x, int y) const { return data[index(x, y)]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Image2D& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const Image2D&, const Image2D&) = default;
};

/// Binary slice mask, values in {0,1}.
using SliceMask = Image2D<std::uint8_t>;
/// CT intensities of one axial slice.
using SliceImage = Image2D<float>;

inline std::size_t count_foreground(const SliceMask& m) {
  std::size_t n = 0;
  for (auto v : m.data) n += v != 0;
  return n;
}

}  // namespace g2s
