#pragma once

#include <cstdint>
#include <string>

#include "gaze2seg/image.hpp"

namespace g2s {

/// 8-bit grayscale PNG (color type 0), filter 0 on every row, zlib level 6.
/// Output is a pure function of the pixels.
std::string encode_png_gray8(const Image2D<std::uint8_t>& img);

/// Inverse of encode_png_gray8 for the same restricted layout.
Image2D<std::uint8_t> decode_png_gray8(std::string_view png);

}  // namespace g2s
