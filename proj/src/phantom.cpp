#include <cmath>

#include "gaze2seg/harness.hpp"
#include "gaze2seg/rng.hpp"

namespace g2s {

namespace {

struct Slab {
  double cx, cy, rx, ry, zfrac;
};

Slab slab_at(const PhantomParams& p, double z) {
  const double dz = z - p.center[2];
  const double scale = 1.0 + p.taper * dz / p.radii[2];
  return {p.center[0] + p.drift_per_slice[0] * dz, p.center[1] + p.drift_per_slice[1] * dz, p.radii[0] * scale,
          p.radii[1] * scale, dz / p.radii[2]};
}

void check_params(const PhantomParams& p) {
  validate_geometry(p.dims, p.spacing);
  for (double r : p.radii) {
    if (!(r > 0.0)) fail(Errc::kInvalidArgument, "phantom radii must be > 0");
  }
  if (!(std::abs(p.taper) < 1.0)) fail(Errc::kInvalidArgument, "phantom taper must satisfy |taper| < 1");
  if (!(p.noise_sd >= 0.0)) fail(Errc::kInvalidArgument, "noise_sd must be >= 0");
  const double zlo = p.center[2] - p.radii[2];
  const double zhi = p.center[2] + p.radii[2];
  if (zlo < 0.0 || zhi > static_cast<double>(p.dims.nz - 1)) fail(Errc::kInvalidArgument, "phantom leaves the z range");
  for (double z : {zlo, p.center[2], zhi}) {
    const auto s = slab_at(p, z);
    const double rx = p.radii[0] * (1.0 + std::abs(p.taper));
    const double ry = p.radii[1] * (1.0 + std::abs(p.taper));
    if (s.cx - rx < 0.0 || s.cx + rx > static_cast<double>(p.dims.nx - 1) || s.cy - ry < 0.0 ||
        s.cy + ry > static_cast<double>(p.dims.ny - 1)) {
      fail(Errc::kInvalidArgument, "phantom leaves the in-plane grid");
    }
  }
}

}  // namespace

Phantom make_phantom(const PhantomParams& p, std::uint64_t seed) {
  check_params(p);
  const Dims& d = p.dims;
  std::vector<std::uint8_t> mask(d.voxel_count(), 0);
  std::vector<std::int16_t> image(d.voxel_count());
  SplitMix64 rng(seed);
  for (std::int64_t z = 0; z < d.nz; ++z) {
    const auto s = slab_at(p, static_cast<double>(z));
    const double zz = s.zfrac * s.zfrac;
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t x = 0; x < d.nx; ++x) {
        const double ux = (static_cast<double>(x) - s.cx) / s.rx;
        const double uy = (static_cast<double>(y) - s.cy) / s.ry;
        const bool inside = zz <= 1.0 && ux * ux + uy * uy + zz <= 1.0;
        const std::size_t i = d.linear(x, y, z);
        mask[i] = inside;
        double v = inside ? p.inside_hu : p.outside_hu;
        if (p.noise_sd > 0.0) v += p.noise_sd * rng.normal();
        image[i] = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
      }
    }
  }
  return {Volume(d, p.spacing, std::move(image)), MaskVolume(d, p.spacing, std::move(mask), p.label)};
}

std::vector<PhantomParams> phantom_suite(const PhantomSuiteParams& sp) {
  if (sp.count < 1) fail(Errc::kInvalidArgument, "phantom count must be >= 1");
  validate_geometry(sp.dims, Spacing{});
  SplitMix64 rng(sp.seed);
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); };
  const double nx = static_cast<double>(sp.dims.nx);
  const double ny = static_cast<double>(sp.dims.ny);
  const double nz = static_cast<double>(sp.dims.nz);

  std::vector<PhantomParams> out;
  for (int i = 0; i < sp.count; ++i) {
    PhantomParams p;
    p.dims = sp.dims;
    p.inside_hu = sp.inside_hu;
    p.outside_hu = sp.outside_hu;
    p.noise_sd = sp.noise_sd;
    p.label = "phantom";
    p.radii = {uniform(0.14, 0.23) * nx, uniform(0.14, 0.23) * ny, uniform(0.41, 0.45) * nz};
    p.center = {nx / 2.0 + uniform(-0.05, 0.05) * nx, ny / 2.0 + uniform(-0.05, 0.05) * ny, (nz - 1.0) / 2.0};
    p.drift_per_slice = {uniform(-0.08, 0.08), uniform(-0.08, 0.08)};
    p.taper = uniform(-0.3, 0.3);
    out.push_back(p);
  }
  return out;
}

}  // namespace g2s
