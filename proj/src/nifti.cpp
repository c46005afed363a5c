#include <algorithm>
#include <cmath>
#include <cstring>

#include "gaze2seg/volume_io.hpp"

namespace g2s {

namespace {

constexpr std::size_t kHeaderSize = 348;

// Byte offsets into the NIfTI-1 header.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffMagic = 344;

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

template <class T>
T read_scalar(std::span<const std::byte> b, std::size_t off, bool swap) {
  std::array<std::byte, sizeof(T)> raw;
  std::memcpy(raw.data(), b.data() + off, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

template <class T>
std::vector<T> read_payload(std::span<const std::byte> b, std::size_t count, bool swap) {
  std::vector<T> v(count);
  if (count) std::memcpy(v.data(), b.data(), count * sizeof(T));
  if (swap && sizeof(T) > 1) {
    for (auto& x : v) {
      std::array<std::byte, sizeof(T)> raw;
      std::memcpy(raw.data(), &x, sizeof(T));
      std::reverse(raw.begin(), raw.end());
      std::memcpy(&x, raw.data(), sizeof(T));
    }
  }
  return v;
}

}  // namespace

AnyVolume parse_nifti(std::span<const std::byte> bytes, const NiftiOptions& opts) {
  if (bytes.size() >= 2 && bytes[0] == std::byte{0x1f} && bytes[1] == std::byte{0x8b}) {
    fail(Errc::kUnsupportedCompressed, "gzip-compressed NIfTI is not supported; decompress first");
  }
  if (bytes.size() < kHeaderSize) fail(Errc::kSizeMismatch, "file shorter than the 348-byte NIfTI-1 header");

  bool swap = false;
  if (read_scalar<std::int32_t>(bytes, 0, false) != 348) {
    if (read_scalar<std::int32_t>(bytes, 0, true) != 348) fail(Errc::kBadHeader, "sizeof_hdr is not 348");
    swap = true;
  }
  if (std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) != 0) {
    fail(Errc::kBadMagic, "NIfTI magic is not \"n+1\" (only single-file .nii is supported)");
  }

  std::array<std::int16_t, 8> dim{};
  for (std::size_t i = 0; i < 8; ++i) dim[i] = read_scalar<std::int16_t>(bytes, kOffDim + 2 * i, swap);
  if (dim[0] < 1 || dim[0] > 7) fail(Errc::kBadHeader, "dim[0] out of range");
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[static_cast<std::size_t>(i)] > 1) fail(Errc::kUnsupportedDims, "4D+ NIfTI volumes are not supported");
  }

  const auto datatype = read_scalar<std::int16_t>(bytes, kOffDatatype, swap);
  if (datatype != kDtUint8 && datatype != kDtInt16 && datatype != kDtFloat32) {
    fail(Errc::kUnsupportedDatatype, "NIfTI datatype " + std::to_string(datatype) + " is not supported");
  }

  Dims dims{1, 1, 1};
  Spacing sp{1.0, 1.0, 1.0};
  std::int64_t* dptr[3] = {&dims.nx, &dims.ny, &dims.nz};
  double* sptr[3] = {&sp.sx, &sp.sy, &sp.sz};
  for (int i = 1; i <= 3 && i <= dim[0]; ++i) {
    *dptr[i - 1] = dim[static_cast<std::size_t>(i)];
    *sptr[i - 1] = read_scalar<float>(bytes, kOffPixdim + 4 * static_cast<std::size_t>(i), swap);
  }
  validate_geometry(dims, sp);

  const float vox_offset_f = read_scalar<float>(bytes, kOffVoxOffset, swap);
  if (!(vox_offset_f >= static_cast<float>(kHeaderSize))) fail(Errc::kBadHeader, "vox_offset before end of header");
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);

  const std::size_t elem = datatype == kDtUint8 ? 1 : datatype == kDtInt16 ? 2 : 4;
  const std::size_t need = dims.voxel_count() * elem;
  if (bytes.size() < vox_offset || bytes.size() - vox_offset < need) {
    fail(Errc::kSizeMismatch, "NIfTI payload shorter than dims*bitpix");
  }
  const auto payload = bytes.subspan(vox_offset, need);
  const std::size_t n = dims.voxel_count();

  Volume::Storage storage;
  switch (datatype) {
    case kDtUint8: storage = read_payload<std::uint8_t>(payload, n, false); break;
    case kDtInt16: storage = read_payload<std::int16_t>(payload, n, swap); break;
    default: storage = read_payload<float>(payload, n, swap); break;
  }

  if (!opts.as_mask) return Volume(dims, sp, std::move(storage));

  std::vector<std::uint8_t> bin(n);
  std::visit(
      [&](const auto& v) {
        for (std::size_t i = 0; i < n; ++i) {
          const double x = static_cast<double>(v[i]);
          bin[i] = opts.label_id ? (x == static_cast<double>(*opts.label_id)) : (x != 0.0);
        }
      },
      storage);
  return MaskVolume(dims, sp, std::move(bin), opts.label_name);
}

AnyVolume load_nifti(const std::filesystem::path& path, const NiftiOptions& opts) {
  return parse_nifti(read_file(path), opts);
}

}  // namespace g2s
