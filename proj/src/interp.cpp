#include <algorithm>

#include "gaze2seg/interp.hpp"
#include "gaze2seg/parallel.hpp"

namespace g2s {

const char* slice_tag_name(SliceTag t) noexcept {
  switch (t) {
    case SliceTag::kSegmented: return "segmented";
    case SliceTag::kInterpolated: return "interpolated";
    case SliceTag::kEmpty: return "empty";
  }
  return "?";
}

namespace {

enum class ShapeKind { kEmpty, kFull, kRegular };

struct PreparedShape {
  ShapeKind kind = ShapeKind::kEmpty;
  int width = 0, height = 0;
  Image2D<std::int32_t> sdt;  // only for kRegular
  std::int32_t max_inside = 0;
  std::int32_t max_outside = 0;
};

PreparedShape prepare(const SliceMask& m) {
  PreparedShape p;
  p.width = m.width;
  p.height = m.height;
  const std::size_t fg = count_foreground(m);
  if (fg == 0) return p;
  if (fg == m.size()) {
    p.kind = ShapeKind::kFull;
    return p;
  }
  p.kind = ShapeKind::kRegular;
  p.sdt = chamfer_sdt(m).thirds;
  const auto [lo, hi] = std::minmax_element(p.sdt.data.begin(), p.sdt.data.end());
  p.max_inside = *hi;
  p.max_outside = -*lo;
  return p;
}

// Signed field for one side of a pair. Degenerate sides borrow the other
// side's field, shifted so they are all-negative (empty) or all-positive (full).
Image2D<std::int32_t> side_field(const PreparedShape& self, const PreparedShape& other) {
  if (self.kind == ShapeKind::kRegular) return self.sdt;
  if (other.kind != ShapeKind::kRegular) {
    return Image2D<std::int32_t>(self.width, self.height, self.kind == ShapeKind::kFull ? 1 : -1);
  }
  Image2D<std::int32_t> f = other.sdt;
  const std::int32_t shift = self.kind == ShapeKind::kEmpty ? -(other.max_inside + 1) : other.max_outside + 1;
  for (auto& v : f.data) v += shift;
  return f;
}

SliceMask interpolate_prepared(const PreparedShape& a, const PreparedShape& b, double t) {
  SliceMask out(a.width, a.height);
  if (a.kind == ShapeKind::kEmpty && b.kind == ShapeKind::kEmpty) return out;
  if (a.kind == ShapeKind::kFull && b.kind == ShapeKind::kFull) {
    std::fill(out.data.begin(), out.data.end(), 1);
    return out;
  }
  const auto fa = side_field(a, b);
  const auto fb = side_field(b, a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double va = fa.data[i];
    const double v = va + t * (static_cast<double>(fb.data[i]) - va);
    out.data[i] = v >= 0.0 ? 1 : 0;
  }
  return out;
}

}  // namespace

SliceMask interpolate_masks(const SliceMask& a, const SliceMask& b, double t) {
  if (!a.same_shape(b)) fail(Errc::kDimMismatch, "interpolated masks must have identical dims");
  if (!(t >= 0.0 && t <= 1.0)) fail(Errc::kInvalidArgument, "t must lie in [0,1]");
  return interpolate_prepared(prepare(a), prepare(b), t);
}

MaskVolume Masklet::to_mask_volume(const Dims& dims, const Spacing& spacing, std::string label) const {
  MaskVolume mv(dims, spacing, std::move(label));
  for (std::int64_t z = z_lo; z <= z_hi; ++z) {
    if (z < 0 || z >= dims.nz) continue;
    mv.set_slice(z, mask_at(z));
  }
  return mv;
}

Masklet fill_masklet(const std::map<std::int64_t, SliceMask>& segmented, std::int64_t z_lo, std::int64_t z_hi,
                     const FillOptions& opts) {
  if (segmented.empty()) fail(Errc::kNoPrompts, "fill_masklet needs at least one prompted slice");
  if (z_lo > z_hi) fail(Errc::kInvalidArgument, "empty z range");
  const auto& first = segmented.begin()->second;
  for (const auto& [z, m] : segmented) {
    if (z < z_lo || z > z_hi) fail(Errc::kInvalidArgument, "prompted slice " + std::to_string(z) + " outside z range");
    if (!m.same_shape(first)) fail(Errc::kDimMismatch, "prompted masks differ in dims");
  }
  if (opts.slice_positions_mm && static_cast<std::int64_t>(opts.slice_positions_mm->size()) <= z_hi) {
    fail(Errc::kInvalidArgument, "slice_positions_mm does not cover the z range");
  }

  Masklet out;
  out.z_lo = z_lo;
  out.z_hi = z_hi;
  const auto n = static_cast<std::size_t>(z_hi - z_lo + 1);
  out.masks.assign(n, SliceMask(first.width, first.height));
  out.tags.assign(n, SliceTag::kEmpty);

  std::vector<std::int64_t> keys;
  for (const auto& [z, m] : segmented) {
    keys.push_back(z);
    out.masks[static_cast<std::size_t>(z - z_lo)] = m;
    out.tags[static_cast<std::size_t>(z - z_lo)] = SliceTag::kSegmented;
  }

  std::vector<PreparedShape> shapes(keys.size());
  parallel_for(keys.size(), opts.threads, [&](std::size_t i) { shapes[i] = prepare(segmented.at(keys[i])); });

  auto weight = [&](std::int64_t z, std::int64_t zi, std::int64_t zj) {
    if (opts.slice_positions_mm) {
      const auto& p = *opts.slice_positions_mm;
      const double span = p[static_cast<std::size_t>(zj)] - p[static_cast<std::size_t>(zi)];
      if (span == 0.0) return 0.0;
      return std::clamp((p[static_cast<std::size_t>(z)] - p[static_cast<std::size_t>(zi)]) / span, 0.0, 1.0);
    }
    return static_cast<double>(z - zi) / static_cast<double>(zj - zi);
  };

  const std::size_t gaps = keys.size() - 1;
  parallel_for(gaps, opts.threads, [&](std::size_t g) {
    const std::int64_t zi = keys[g];
    const std::int64_t zj = keys[g + 1];
    for (std::int64_t z = zi + 1; z < zj; ++z) {
      const auto idx = static_cast<std::size_t>(z - z_lo);
      out.masks[idx] = interpolate_prepared(shapes[g], shapes[g + 1], weight(z, zi, zj));
      out.tags[idx] = SliceTag::kInterpolated;
    }
  });
  return out;
}

}  // namespace g2s
