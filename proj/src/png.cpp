#include "png.hpp"

#include <cstring>

#include <zlib.h>

#include "gaze2seg/error.hpp"

namespace g2s {

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  s += static_cast<char>((v >> 24) & 0xff);
  s += static_cast<char>((v >> 16) & 0xff);
  s += static_cast<char>((v >> 8) & 0xff);
  s += static_cast<char>(v & 0xff);
}

std::uint32_t get_u32(std::string_view s, std::size_t off) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data() + off);
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_chunk(std::string& out, const char type[4], std::string_view data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body.append(data);
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

}  // namespace

std::string encode_png_gray8(const Image2D<std::uint8_t>& img) {
  std::string raw;
  raw.reserve(img.size() + static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    raw += '\0';
    raw.append(reinterpret_cast<const char*>(&img.data[img.index(0, y)]), static_cast<std::size_t>(img.width));
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    fail(Errc::kInternal, "zlib compression failed");
  }
  z.resize(zlen);

  std::string out(reinterpret_cast<const char*>(kSignature), 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += '\x08';  // bit depth
  ihdr += '\x00';  // grayscale
  ihdr += '\x00';  // deflate
  ihdr += '\x00';  // adaptive filtering
  ihdr += '\x00';  // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

Image2D<std::uint8_t> decode_png_gray8(std::string_view png) {
  if (png.size() < 8 || std::memcmp(png.data(), kSignature, 8) != 0) fail(Errc::kBadMagic, "not a PNG");
  std::size_t pos = 8;
  int w = 0, h = 0;
  std::string idat;
  while (pos + 12 <= png.size()) {
    const std::uint32_t len = get_u32(png, pos);
    const std::string_view type = png.substr(pos + 4, 4);
    if (pos + 12 + len > png.size()) fail(Errc::kSizeMismatch, "truncated PNG chunk");
    const std::string_view data = png.substr(pos + 8, len);
    if (type == "IHDR") {
      w = static_cast<int>(get_u32(data, 0));
      h = static_cast<int>(get_u32(data, 4));
      if (data[8] != 8 || data[9] != 0 || data[12] != 0) fail(Errc::kUnsupportedDtype, "only 8-bit gray PNG");
    } else if (type == "IDAT") {
      idat.append(data);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  Image2D<std::uint8_t> img(w, h);
  std::string raw(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h), '\0');
  uLongf rlen = static_cast<uLongf>(raw.size());
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &rlen, reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      rlen != raw.size()) {
    fail(Errc::kSizeMismatch, "PNG payload does not inflate to width*height");
  }
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1);
    if (raw[row] != '\0') fail(Errc::kUnsupportedDtype, "only filter type 0 rows are supported");
    std::memcpy(&img.data[img.index(0, y)], raw.data() + row + 1, static_cast<std::size_t>(w));
  }
  return img;
}

}  // namespace g2s
