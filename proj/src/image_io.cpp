#include "rna/image_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "rna/binary_io.hpp"
#include "rna/errors.hpp"

namespace rna {

// -----------------------------------------------------------------------------
// PFM
// -----------------------------------------------------------------------------

namespace {

std::vector<uint8_t> encode_pfm_raw(int width, int height, int channels, std::span<const float> data) {
  if (width <= 0 || height <= 0) throw ContractViolation("image dimensions must be positive");
  if (data.size() != size_t(width) * height * channels) throw ContractViolation("image size mismatch");
  for (auto v : data)
    if (!std::isfinite(v)) throw ContractViolation("image contains a non-finite pixel");
  ByteWriter w;
  w.text(channels == 3 ? "PF\n" : "Pf\n");
  w.text(std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n");
  auto row = size_t(width) * channels;
  for (int y = height - 1; y >= 0; --y) w.f32s(data.subspan(y * row, row));
  return w.take();
}

// Reads one whitespace-terminated header token.
std::string header_token(ByteReader& r) {
  std::string tok;
  while (true) {
    char c;
    r.bytes(&c, 1);
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (tok.empty()) continue;
      return tok;
    }
    tok.push_back(c);
    if (tok.size() > 64) throw FormatError("PFM header token too long");
  }
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("bad PFM header value '" + s + "'");
  return v;
}

}  // namespace

std::vector<uint8_t> encode_pfm(const HdrImage& image) {
  return encode_pfm_raw(image.width, image.height, 3, image.rgb);
}

HdrImage decode_pfm(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "PFM");
  auto magic = header_token(r);
  int channels;
  if (magic == "PF") channels = 3;
  else if (magic == "Pf") channels = 1;
  else throw FormatError("not a PFM file");
  auto width = parse_number<int>(header_token(r));
  auto height = parse_number<int>(header_token(r));
  auto scale = parse_number<double>(header_token(r));
  if (width <= 0 || height <= 0) throw FormatError("PFM dimensions must be positive");
  if (scale >= 0) throw FormatError("big-endian PFM is not supported");
  HdrImage img(width, height);
  std::vector<float> raw(size_t(width) * height * channels);
  auto row = size_t(width) * channels;
  for (int y = height - 1; y >= 0; --y) r.f32s(std::span<float>(raw).subspan(y * row, row));
  if (r.remaining() != 0) throw FormatError("PFM has trailing bytes");
  if (channels == 3) {
    img.rgb = std::move(raw);
  } else {
    for (size_t i = 0; i < raw.size(); ++i) img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = raw[i];
  }
  return img;
}

void write_pfm(const HdrImage& image, const std::filesystem::path& path) {
  write_file(path, encode_pfm(image));
}

HdrImage read_pfm(const std::filesystem::path& path) { return decode_pfm(read_file(path)); }

void write_pfm_grey(int width, int height, std::span<const float> values,
                    const std::filesystem::path& path) {
  write_file(path, encode_pfm_raw(width, height, 1, values));
}

double psnr(std::span<const float> a, std::span<const float> b, double peak,
            std::span<const float> mask, int channels) {
  if (a.size() != b.size()) throw ContractViolation("psnr: image shapes differ");
  if (!mask.empty() && mask.size() * channels != a.size())
    throw ContractViolation("psnr: mask shape differs");
  double sum = 0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!mask.empty() && mask[i / channels] == 0) continue;
    double d = double(a[i]) - double(b[i]);
    sum += d * d;
    ++n;
  }
  if (n == 0) throw ContractViolation("psnr: no pixels selected");
  auto mse = sum / double(n);
  if (mse == 0) return psnr_cap_db;
  return std::min(psnr_cap_db, 10 * std::log10(peak * peak / mse));
}

// -----------------------------------------------------------------------------
// RNAD slices
// -----------------------------------------------------------------------------

namespace {
constexpr char slice_magic[4] = {'R', 'N', 'A', 'D'};
}

const SlicePlane& TrainingSlice::plane(const std::string& name) const {
  for (const auto& p : planes)
    if (p.name == name) return p;
  throw SchemaError("slice has no '" + name + "' plane");
}

SlicePlane& TrainingSlice::plane(const std::string& name) {
  for (auto& p : planes)
    if (p.name == name) return p;
  throw SchemaError("slice has no '" + name + "' plane");
}

bool TrainingSlice::has_plane(const std::string& name) const {
  for (const auto& p : planes)
    if (p.name == name) return true;
  return false;
}

AssetKind TrainingSlice::kind() const {
  return has_plane("tangent") ? AssetKind::fiber : AssetKind::surface;
}

std::vector<std::pair<std::string, int>> slice_schema(AssetKind kind) {
  std::vector<std::pair<std::string, int>> s = {{"radiance", 3},  {"alpha", 1},     {"position", 3},
                                                {"view_dir", 3},  {"light_dir", 3}, {"visibility", 1}};
  if (kind == AssetKind::surface) {
    s.emplace_back("normal", 3);
  } else {
    s.emplace_back("tangent", 3);
    s.emplace_back("h", 1);
  }
  return s;
}

TrainingSlice make_slice(int width, int height, AssetKind kind) {
  TrainingSlice s;
  s.width = width;
  s.height = height;
  for (const auto& [name, ch] : slice_schema(kind))
    s.planes.push_back({name, ch, std::vector<float>(size_t(width) * height * ch, 0.0f)});
  return s;
}

std::vector<uint8_t> encode_slice(const TrainingSlice& slice) {
  ByteWriter w;
  w.bytes(slice_magic, 4);
  w.u32(slice_format_version);
  w.u32(uint32_t(slice.width));
  w.u32(uint32_t(slice.height));
  w.u32(uint32_t(slice.planes.size()));
  for (const auto& p : slice.planes) {
    if (p.data.size() != size_t(slice.width) * slice.height * p.channels)
      throw ContractViolation("plane '" + p.name + "' has the wrong size");
    w.fixed_string(p.name, slice_plane_name_bytes);
    w.u32(uint32_t(p.channels));
  }
  for (const auto& p : slice.planes) w.f32s(p.data);
  return w.take();
}

TrainingSlice decode_slice(std::span<const uint8_t> bytes, std::optional<AssetKind> expected) {
  ByteReader r(bytes, "slice");
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, slice_magic, 4) != 0) throw FormatError("not an RNAD slice (bad magic)");
  auto version = r.u32();
  if (version != slice_format_version)
    throw FormatError("unsupported slice version " + std::to_string(version));
  TrainingSlice s;
  s.width = int(r.u32());
  s.height = int(r.u32());
  auto count = r.u32();
  if (s.width <= 0 || s.height <= 0 || count > 64) throw FormatError("implausible slice header");
  for (uint32_t i = 0; i < count; ++i) {
    SlicePlane p;
    p.name = r.fixed_string(slice_plane_name_bytes);
    p.channels = int(r.u32());
    s.planes.push_back(std::move(p));
  }
  auto kind = expected.value_or(s.kind());
  auto schema = slice_schema(kind);
  for (const auto& [name, ch] : schema) {
    if (!s.has_plane(name)) throw SchemaError("slice is missing the '" + name + "' plane");
    if (s.plane(name).channels != ch)
      throw SchemaError("plane '" + name + "' must have " + std::to_string(ch) + " channels");
  }
  if (s.planes.size() != schema.size()) throw SchemaError("slice has unexpected planes");
  for (auto& p : s.planes) {
    p.data.resize(size_t(s.width) * s.height * p.channels);
    r.f32s(p.data);
  }
  if (r.remaining() != 0) throw FormatError("slice has trailing bytes");
  return s;
}

void write_slice(const TrainingSlice& slice, const std::filesystem::path& path) {
  write_file(path, encode_slice(slice));
}

TrainingSlice read_slice(const std::filesystem::path& path, std::optional<AssetKind> expected) {
  return decode_slice(read_file(path), expected);
}

}  // namespace rna
