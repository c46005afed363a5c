#include "gaze2seg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace g2s {

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

using nlohmann::json;

std::size_t dtype_size(DType t) noexcept {
  switch (t) {
    case DType::kU8: return 1;
    case DType::kI16: return 2;
    case DType::kF32: return 4;
  }
  return 0;
}

const char* dtype_name(DType t) noexcept {
  switch (t) {
    case DType::kU8: return "u8";
    case DType::kI16: return "i16";
    case DType::kF32: return "f32";
  }
  return "?";
}

void validate_geometry(const Dims& d, const Spacing& s) {
  if (d.nx < 1 || d.ny < 1 || d.nz < 1) {
    fail(Errc::kInvalidDims, "dims must be >= 1, got (" + std::to_string(d.nx) + "," + std::to_string(d.ny) + "," +
                                 std::to_string(d.nz) + ")");
  }
  for (double v : {s.sx, s.sy, s.sz}) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::kInvalidSpacing, "spacing components must be finite and > 0");
  }
}

// --- Volume ---------------------------------------------------------------

Volume::Volume(Dims dims, Spacing spacing, Storage voxels)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
  validate_geometry(dims_, spacing_);
  const std::size_t n = std::visit([](const auto& v) { return v.size(); }, voxels_);
  if (n != dims_.voxel_count()) {
    fail(Errc::kSizeMismatch,
         "voxel count " + std::to_string(n) + " != nx*ny*nz = " + std::to_string(dims_.voxel_count()));
  }
}

DType Volume::dtype() const {
  switch (voxels_.index()) {
    case 0: return DType::kU8;
    case 1: return DType::kI16;
    default: return DType::kF32;
  }
}

double Volume::at(std::int64_t x, std::int64_t y, std::int64_t z) const {
  const std::size_t i = dims_.linear(x, y, z);
  return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, voxels_);
}

Volume::SliceView Volume::slice(std::int64_t z) const {
  if (z < 0 || z >= dims_.nz) fail(Errc::kSliceOutOfRange, "slice " + std::to_string(z) + " out of range");
  return SliceView(*this, z);
}

SliceImage Volume::slice_image(std::int64_t z) const {
  if (z < 0 || z >= dims_.nz) fail(Errc::kSliceOutOfRange, "slice " + std::to_string(z) + " out of range");
  SliceImage img(static_cast<int>(dims_.nx), static_cast<int>(dims_.ny));
  const std::size_t off = dims_.linear(0, 0, z);
  std::visit(
      [&](const auto& v) {
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<float>(v[off + i]);
      },
      voxels_);
  return img;
}

// --- MaskVolume -------------------------------------------------------------

MaskVolume::MaskVolume(Dims dims, Spacing spacing, std::string label)
    : dims_(dims), spacing_(spacing), voxels_(dims.voxel_count(), 0), label_(std::move(label)) {}

MaskVolume::MaskVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> voxels, std::string label)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)), label_(std::move(label)) {
  if (voxels_.size() != dims_.voxel_count()) {
    fail(Errc::kSizeMismatch, "mask voxel count does not match dims");
  }
}

SliceMask MaskVolume::slice(std::int64_t z) const {
  if (z < 0 || z >= dims_.nz) fail(Errc::kSliceOutOfRange, "slice " + std::to_string(z) + " out of range");
  SliceMask m(static_cast<int>(dims_.nx), static_cast<int>(dims_.ny));
  const auto off = static_cast<std::ptrdiff_t>(dims_.linear(0, 0, z));
  std::copy_n(voxels_.begin() + off, m.size(), m.data.begin());
  return m;
}

void MaskVolume::set_slice(std::int64_t z, const SliceMask& m) {
  if (z < 0 || z >= dims_.nz) fail(Errc::kSliceOutOfRange, "slice " + std::to_string(z) + " out of range");
  if (m.width != dims_.nx || m.height != dims_.ny) fail(Errc::kDimMismatch, "slice mask dims differ from volume");
  const auto off = static_cast<std::ptrdiff_t>(dims_.linear(0, 0, z));
  std::transform(m.data.begin(), m.data.end(), voxels_.begin() + off, [](std::uint8_t v) { return v ? 1 : 0; });
}

std::size_t MaskVolume::count() const {
  return static_cast<std::size_t>(std::count_if(voxels_.begin(), voxels_.end(), [](auto v) { return v != 0; }));
}

std::optional<std::array<std::int64_t, 2>> MaskVolume::z_extent() const {
  std::optional<std::array<std::int64_t, 2>> out;
  const std::size_t plane = dims_.slice_size();
  for (std::int64_t z = 0; z < dims_.nz; ++z) {
    const auto* p = voxels_.data() + static_cast<std::size_t>(z) * plane;
    if (std::any_of(p, p + plane, [](auto v) { return v != 0; })) {
      if (!out) out = std::array<std::int64_t, 2>{z, z};
      (*out)[1] = z;
    }
  }
  return out;
}

// --- file helpers -------------------------------------------------------------

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> buf(size);
  if (size && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size))) {
    fail(Errc::kIo, "read failed: " + path.string());
  }
  return buf;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::kIo, "write failed: " + path.string());
}

// --- mvol -------------------------------------------------------------

namespace {

std::optional<DType> dtype_from_name(std::string_view s) {
  if (s == "u8") return DType::kU8;
  if (s == "i16") return DType::kI16;
  if (s == "f32") return DType::kF32;
  return std::nullopt;
}

template <class T>
std::vector<T> copy_payload(std::span<const std::byte> payload) {
  std::vector<T> v(payload.size() / sizeof(T));
  if (!v.empty()) std::memcpy(v.data(), payload.data(), v.size() * sizeof(T));
  return v;
}

void check_mask_values(std::span<const std::uint8_t> v) {
  auto bad = std::find_if(v.begin(), v.end(), [](std::uint8_t b) { return b > 1; });
  if (bad != v.end()) {
    fail(Errc::kInvalidMaskValue, "mask voxel " + std::to_string(bad - v.begin()) + " has value " +
                                      std::to_string(static_cast<int>(*bad)));
  }
}

}  // namespace

AnyVolume parse_mvol(std::span<const std::byte> bytes) {
  if (bytes.size() < kMvolMagic.size() ||
      std::memcmp(bytes.data(), kMvolMagic.data(), kMvolMagic.size()) != 0) {
    fail(Errc::kBadMagic, "not an mvol file");
  }
  std::size_t pos = kMvolMagic.size();
  if (bytes.size() < pos + 4) fail(Errc::kSizeMismatch, "truncated header length");
  std::uint32_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + pos, 4);
  pos += 4;
  if (bytes.size() - pos < hlen) fail(Errc::kSizeMismatch, "header length exceeds file size");

  json h;
  try {
    h = json::parse(reinterpret_cast<const char*>(bytes.data() + pos),
                    reinterpret_cast<const char*>(bytes.data() + pos + hlen));
  } catch (const json::exception& e) {
    fail(Errc::kBadHeader, std::string("header JSON: ") + e.what());
  }
  pos += hlen;

  Dims dims;
  Spacing sp;
  DType dtype{};
  bool is_mask = false;
  std::string label;
  try {
    const auto& d = h.at("dims");
    const auto& s = h.at("spacing_mm");
    if (!d.is_array() || d.size() != 3 || !s.is_array() || s.size() != 3) {
      fail(Errc::kBadHeader, "dims and spacing_mm must be 3-element arrays");
    }
    dims = {d[0].get<std::int64_t>(), d[1].get<std::int64_t>(), d[2].get<std::int64_t>()};
    sp = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    auto dt = dtype_from_name(h.at("dtype").get<std::string>());
    if (!dt) fail(Errc::kUnsupportedDtype, "unsupported dtype " + h.at("dtype").get<std::string>());
    dtype = *dt;
    const auto kind = h.value("kind", std::string("image"));
    if (kind != "image" && kind != "mask") fail(Errc::kBadHeader, "kind must be image or mask");
    is_mask = kind == "mask";
    if (h.contains("label") && h["label"].is_string()) label = h["label"].get<std::string>();
  } catch (const json::exception& e) {
    fail(Errc::kBadHeader, std::string("header fields: ") + e.what());
  }
  validate_geometry(dims, sp);

  const auto payload = bytes.subspan(pos);
  const std::size_t expected = dims.voxel_count() * dtype_size(dtype);
  if (payload.size() != expected) {
    fail(Errc::kSizeMismatch,
         "payload is " + std::to_string(payload.size()) + " bytes, header implies " + std::to_string(expected));
  }

  if (is_mask) {
    if (dtype != DType::kU8) fail(Errc::kUnsupportedDtype, "mask volumes must be u8");
    auto v = copy_payload<std::uint8_t>(payload);
    check_mask_values(v);
    return MaskVolume(dims, sp, std::move(v), label);
  }
  switch (dtype) {
    case DType::kU8: return Volume(dims, sp, copy_payload<std::uint8_t>(payload));
    case DType::kI16: return Volume(dims, sp, copy_payload<std::int16_t>(payload));
    case DType::kF32: return Volume(dims, sp, copy_payload<float>(payload));
  }
  fail(Errc::kInternal, "unreachable dtype");
}

std::vector<std::byte> serialize_mvol(const AnyVolume& any) {
  json h;
  const Dims& d = std::visit([](const auto& v) -> const Dims& { return v.dims(); }, any);
  const Spacing& s = std::visit([](const auto& v) -> const Spacing& { return v.spacing(); }, any);
  validate_geometry(d, s);
  h["dims"] = {d.nx, d.ny, d.nz};
  h["spacing_mm"] = {s.sx, s.sy, s.sz};

  std::span<const std::byte> payload;
  if (const auto* m = std::get_if<MaskVolume>(&any)) {
    check_mask_values(m->voxels());
    h["dtype"] = "u8";
    h["kind"] = "mask";
    if (!m->label().empty()) h["label"] = m->label();
    payload = std::as_bytes(m->voxels());
  } else {
    const auto& v = std::get<Volume>(any);
    h["dtype"] = dtype_name(v.dtype());
    h["kind"] = "image";
    payload = std::visit([](const auto& vec) { return std::as_bytes(std::span(vec)); }, v.storage());
  }

  const std::string header = h.dump();
  const auto hlen = static_cast<std::uint32_t>(header.size());
  std::vector<std::byte> out;
  out.reserve(kMvolMagic.size() + 4 + header.size() + payload.size());
  auto append = [&out](const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out.insert(out.end(), b, b + n);
  };
  append(kMvolMagic.data(), kMvolMagic.size());
  append(&hlen, 4);
  append(header.data(), header.size());
  append(payload.data(), payload.size());
  return out;
}

AnyVolume load_mvol(const std::filesystem::path& path) { return parse_mvol(read_file(path)); }

void save_mvol(const AnyVolume& v, const std::filesystem::path& path) { write_file(path, serialize_mvol(v)); }

Volume load_image_mvol(const std::filesystem::path& path) {
  auto any = load_mvol(path);
  if (auto* v = std::get_if<Volume>(&any)) return std::move(*v);
  fail(Errc::kBadHeader, path.string() + " holds a mask, expected an image");
}

MaskVolume load_mask_mvol(const std::filesystem::path& path) {
  auto any = load_mvol(path);
  if (auto* m = std::get_if<MaskVolume>(&any)) return std::move(*m);
  fail(Errc::kBadHeader, path.string() + " holds an image, expected a mask");
}

AnyVolume load_any(const std::filesystem::path& path, const NiftiOptions& opts) {
  auto bytes = read_file(path);
  if (bytes.size() >= kMvolMagic.size() &&
      std::memcmp(bytes.data(), kMvolMagic.data(), kMvolMagic.size()) == 0) {
    auto v = parse_mvol(bytes);
    if (opts.as_mask) {
      if (auto* img = std::get_if<Volume>(&v)) {
        // Image-kind label maps: binarize the same way as NIfTI.
        std::vector<std::uint8_t> bin(img->dims().voxel_count());
        std::visit(
            [&](const auto& vox) {
              for (std::size_t i = 0; i < bin.size(); ++i) {
                const double x = static_cast<double>(vox[i]);
                bin[i] = opts.label_id ? (x == static_cast<double>(*opts.label_id)) : (x != 0.0);
              }
            },
            img->storage());
        return MaskVolume(img->dims(), img->spacing(), std::move(bin), opts.label_name);
      }
    }
    return v;
  }
  return parse_nifti(bytes, opts);
}

}  // namespace g2s
