#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gaze2seg/image.hpp"

namespace g2s {

enum class DType { kU8, kI16, kF32 };

std::size_t dtype_size(DType t) noexcept;
/// Short names used by the mvol header: "u8", "i16", "f32".
const char* dtype_name(DType t) noexcept;

struct Dims {
  std::int64_t nx = 0, ny = 0, nz = 0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  std::size_t slice_size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + nx * (y + ny * z));
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
  double sx = 1.0, sy = 1.0, sz = 1.0;
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

void validate_geometry(const Dims& dims, const Spacing& spacing);

/// Scalar CT volume. Immutable once built; safe to share across threads.
class Volume {
 public:
  using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::int16_t>, std::vector<float>>;

  Volume() = default;
  /// Validates geometry and voxel count.
  Volume(Dims dims, Spacing spacing, Storage voxels);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  DType dtype() const;
  const Storage& storage() const { return voxels_; }

  double at(std::int64_t x, std::int64_t y, std::int64_t z) const;

  /// Lightweight view of slice z; pixel (x,y) is voxel (x,y,z).
  class SliceView {
   public:
    SliceView(const Volume& v, std::int64_t z) : vol_(&v), z_(z) {}
    double operator()(std::int64_t x, std::int64_t y) const { return vol_->at(x, y, z_); }
    std::int64_t width() const { return vol_->dims_.nx; }
    std::int64_t height() const { return vol_->dims_.ny; }

   private:
    const Volume* vol_;
    std::int64_t z_;
  };

  SliceView slice(std::int64_t z) const;
  SliceImage slice_image(std::int64_t z) const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  Storage voxels_;
};

/// Binary organ mask aligned with a Volume.
class MaskVolume {
 public:
  MaskVolume() = default;
  /// Empty (all-zero) mask.
  MaskVolume(Dims dims, Spacing spacing, std::string label = {});
  /// Throws SizeMismatch. Voxel values are checked by save/load, not here.
  MaskVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> voxels, std::string label = {});

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  const std::string& label() const { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }
  std::span<const std::uint8_t> voxels() const { return voxels_; }

  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t z) const { return voxels_[dims_.linear(x, y, z)]; }
  void set(std::int64_t x, std::int64_t y, std::int64_t z, bool on) { voxels_[dims_.linear(x, y, z)] = on ? 1 : 0; }

  SliceMask slice(std::int64_t z) const;
  void set_slice(std::int64_t z, const SliceMask& m);
  std::size_t count() const;
  /// Inclusive [z_lo, z_hi] of slices with foreground, or nullopt when empty.
  std::optional<std::array<std::int64_t, 2>> z_extent() const;

  friend bool operator==(const MaskVolume&, const MaskVolume&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<std::uint8_t> voxels_;
  std::string label_;
};

using AnyVolume = std::variant<Volume, MaskVolume>;

// --- mvol ---------------------------------------------------------------
//
// "MVOL1\n", u32 LE header length, UTF-8 JSON header
// {"dims":[nx,ny,nz],"spacing_mm":[sx,sy,sz],"dtype":"u8|i16|f32","kind":"image|mask","label":...},
// then the raw little-endian payload in x-fastest, z-slowest order.

inline constexpr std::string_view kMvolMagic = "MVOL1\n";

AnyVolume parse_mvol(std::span<const std::byte> bytes);
std::vector<std::byte> serialize_mvol(const AnyVolume& v);
AnyVolume load_mvol(const std::filesystem::path& path);
void save_mvol(const AnyVolume& v, const std::filesystem::path& path);

/// Convenience loaders that also check the stored kind.
Volume load_image_mvol(const std::filesystem::path& path);
MaskVolume load_mask_mvol(const std::filesystem::path& path);

// --- NIfTI-1 (uncompressed .nii subset) ---------------------------------

struct NiftiOptions {
  bool as_mask = false;
  /// With as_mask: voxels equal to this id become 1. Without it, any nonzero voxel becomes 1.
  std::optional<std::int64_t> label_id;
  std::string label_name;
};

AnyVolume parse_nifti(std::span<const std::byte> bytes, const NiftiOptions& opts = {});
AnyVolume load_nifti(const std::filesystem::path& path, const NiftiOptions& opts = {});

/// Dispatches on content: gzip/NIfTI/mvol.
AnyVolume load_any(const std::filesystem::path& path, const NiftiOptions& opts = {});

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

}  // namespace g2s
