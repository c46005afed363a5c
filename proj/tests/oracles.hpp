#pragma once

// Test-only reference implementations. They share no code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <tuple>
#include <unistd.h>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "gaze2seg/image.hpp"

namespace oracle {

using g2s::SliceMask;

/// Dijkstra over the 8-neighbour grid, edge weights 3 (axial) and 4
/// (diagonal), multi-source from every pixel whose class differs from p's.
/// Returns signed thirds: +d on foreground, -d on background.
inline std::vector<std::int64_t> dijkstra_signed_thirds(const SliceMask& m) {
  const int w = m.width, h = m.height;
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  auto run = [&](bool source_value) {
    std::vector<std::int64_t> dist(n, std::numeric_limits<std::int64_t>::max());
    using Item = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (std::size_t i = 0; i < n; ++i) {
      if ((m.data[i] != 0) == source_value) {
        dist[i] = 0;
        pq.push({0, i});
      }
    }
    while (!pq.empty()) {
      auto [d, i] = pq.top();
      pq.pop();
      if (d != dist[i]) continue;
      const int x = static_cast<int>(i % static_cast<std::size_t>(w));
      const int y = static_cast<int>(i / static_cast<std::size_t>(w));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy) continue;
          const int qx = x + dx, qy = y + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          const std::int64_t nd = d + ((dx && dy) ? 4 : 3);
          const auto j = static_cast<std::size_t>(qy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(qx);
          if (nd < dist[j]) {
            dist[j] = nd;
            pq.push({nd, j});
          }
        }
      }
    }
    return dist;
  };
  const auto to_bg = run(false);
  const auto to_fg = run(true);
  std::vector<std::int64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = m.data[i] ? to_bg[i] : -to_fg[i];
  return out;
}

/// Exact Euclidean distance from each pixel to the nearest opposite-class pixel (brute force).
inline std::vector<double> euclidean_opposite(const SliceMask& m) {
  const int w = m.width, h = m.height;
  std::vector<double> out(m.size(), std::numeric_limits<double>::infinity());
  std::vector<std::pair<int, int>> fg, bg;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) (m(x, y) ? fg : bg).push_back({x, y});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& other = m(x, y) ? bg : fg;
      double best = std::numeric_limits<double>::infinity();
      for (auto [ox, oy] : other) best = std::min(best, std::hypot(double(x - ox), double(y - oy)));
      out[m.index(x, y)] = best;
    }
  }
  return out;
}

/// Signed exact Euclidean field, same sign convention as the chamfer map.
inline std::vector<double> euclidean_signed(const SliceMask& m) {
  auto d = euclidean_opposite(m);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!m.data[i]) d[i] = -d[i];
  return d;
}

inline SliceMask disk(int w, int h, double cx, double cy, double r) {
  SliceMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(x, y) = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  return m;
}

inline SliceMask random_blobs(int w, int h, std::mt19937_64& rng, int blobs = 4) {
  SliceMask m(w, h);
  std::uniform_real_distribution<double> ux(0, w - 1), uy(0, h - 1), ur(2.0, w / 5.0);
  for (int b = 0; b < blobs; ++b) {
    const double cx = ux(rng), cy = uy(rng), r = ur(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m(x, y) = 1;
  }
  // salt noise so shapes are not purely convex
  std::bernoulli_distribution flip(0.02);
  for (auto& v : m.data)
    if (flip(rng)) v ^= 1;
  return m;
}

/// Union-find component count and tight boxes (8-connectivity).
struct Box {
  int x0, y0, x1, y1;
  bool operator<(const Box& o) const { return std::tie(y0, x0, y1, x1) < std::tie(o.y0, o.x0, o.y1, o.x1); }
  bool operator==(const Box&) const = default;
};
inline std::vector<Box> brute_force_boxes(const SliceMask& m) {
  const int w = m.width, h = m.height;
  std::vector<int> parent(m.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
    return i;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h || !m(qx, qy)) continue;
          const int a = find(static_cast<int>(m.index(x, y))), b = find(static_cast<int>(m.index(qx, qy)));
          if (a != b) parent[static_cast<std::size_t>(a)] = b;
        }
    }
  std::map<int, Box> boxes;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m(x, y)) continue;
      const int r = find(static_cast<int>(m.index(x, y)));
      auto [it, fresh] = boxes.try_emplace(r, Box{x, y, x, y});
      if (!fresh) {
        it->second.x0 = std::min(it->second.x0, x);
        it->second.y0 = std::min(it->second.y0, y);
        it->second.x1 = std::max(it->second.x1, x);
        it->second.y1 = std::max(it->second.y1, y);
      }
    }
  std::vector<Box> out;
  for (auto& [k, b] : boxes) out.push_back(b);
  std::sort(out.begin(), out.end());
  return out;
}

// --- NIfTI-1 fixtures, written field by field ---------------------------------

struct NiftiFixture {
  std::int16_t dim[8] = {3, 1, 1, 1, 1, 1, 1, 1};
  float pixdim[8] = {1, 1, 1, 1, 1, 1, 1, 1};
  std::int16_t datatype = 2;
  std::int16_t bitpix = 8;
  float vox_offset = 352.0f;
  char magic[4] = {'n', '+', '1', '\0'};
  std::vector<std::uint8_t> payload;  // already in file byte order
  bool big_endian = false;
};

inline void put_bytes(std::vector<std::uint8_t>& buf, std::size_t off, const void* src, std::size_t n, bool swap) {
  std::vector<std::uint8_t> tmp(static_cast<const std::uint8_t*>(src), static_cast<const std::uint8_t*>(src) + n);
  if (swap) std::reverse(tmp.begin(), tmp.end());
  std::copy(tmp.begin(), tmp.end(), buf.begin() + static_cast<std::ptrdiff_t>(off));
}

inline std::vector<std::uint8_t> build_nifti(const NiftiFixture& f) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(f.vox_offset), 0);
  const bool sw = f.big_endian;
  const std::int32_t sizeof_hdr = 348;
  put_bytes(buf, 0, &sizeof_hdr, 4, sw);
  for (int i = 0; i < 8; ++i) put_bytes(buf, 40 + 2 * static_cast<std::size_t>(i), &f.dim[i], 2, sw);
  put_bytes(buf, 70, &f.datatype, 2, sw);
  put_bytes(buf, 72, &f.bitpix, 2, sw);
  for (int i = 0; i < 8; ++i) put_bytes(buf, 76 + 4 * static_cast<std::size_t>(i), &f.pixdim[i], 4, sw);
  put_bytes(buf, 108, &f.vox_offset, 4, sw);
  const float slope = 1.0f;
  put_bytes(buf, 112, &slope, 4, sw);
  std::memcpy(buf.data() + 344, f.magic, 4);
  buf.insert(buf.end(), f.payload.begin(), f.payload.end());
  return buf;
}

/// Element bytes in the requested byte order.
template <class T>
inline std::vector<std::uint8_t> encode_elems(const std::vector<T>& v, bool big_endian) {
  std::vector<std::uint8_t> out;
  for (const T& x : v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &x, sizeof(T));
    if (big_endian) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("g2s_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
