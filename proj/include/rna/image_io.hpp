#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rna/math.hpp"
#include "rna/neural_asset.hpp"

namespace rna {

// Row-major RGB image, row 0 at the top.
struct HdrImage {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;    // 3 * width * height
  std::vector<float> alpha;  // empty or width * height

  HdrImage() = default;
  HdrImage(int w, int h, bool with_alpha = false)
      : width(w), height(h), rgb(size_t(3) * w * h, 0.0f), alpha(with_alpha ? size_t(w) * h : 0, 0.0f) {}

  float* pixel(int x, int y) { return rgb.data() + 3 * (size_t(y) * width + x); }
  const float* pixel(int x, int y) const { return rgb.data() + 3 * (size_t(y) * width + x); }
};

// PFM: "PF" (RGB) or "Pf" (grey) header, negative scale for little-endian,
// rows stored bottom to top. Grey files load into all three channels.
std::vector<uint8_t> encode_pfm(const HdrImage& image);
HdrImage decode_pfm(std::span<const uint8_t> bytes);
void write_pfm(const HdrImage& image, const std::filesystem::path& path);
HdrImage read_pfm(const std::filesystem::path& path);
// Single-channel PFM ("Pf") from a width * height plane.
void write_pfm_grey(int width, int height, std::span<const float> values,
                    const std::filesystem::path& path);

inline constexpr double psnr_cap_db = 99.0;

// 10 log10(peak^2 / MSE) over all channels of the pixels selected by `mask`
// (non-zero entries; all pixels when empty). MSE = 0 gives psnr_cap_db.
double psnr(std::span<const float> a, std::span<const float> b, double peak,
            std::span<const float> mask = {}, int channels = 3);

// -----------------------------------------------------------------------------
// Training slices (RNAD)
// -----------------------------------------------------------------------------

struct SlicePlane {
  std::string name;
  int channels = 1;
  std::vector<float> data;  // width * height * channels, pixel-interleaved
};

// One camera's deep buffer: radiance plus the AOVs the decoder consumes.
struct TrainingSlice {
  int width = 0;
  int height = 0;
  std::vector<SlicePlane> planes;

  const SlicePlane& plane(const std::string& name) const;
  SlicePlane& plane(const std::string& name);
  bool has_plane(const std::string& name) const;
  AssetKind kind() const;
};

// Planes, in directory order, for an asset kind.
std::vector<std::pair<std::string, int>> slice_schema(AssetKind kind);
TrainingSlice make_slice(int width, int height, AssetKind kind);

inline constexpr uint32_t slice_format_version = 1;
inline constexpr size_t slice_plane_name_bytes = 16;

std::vector<uint8_t> encode_slice(const TrainingSlice& slice);
// Validates the directory against the schema of `expected` (or of the kind
// implied by the planes when not given).
TrainingSlice decode_slice(std::span<const uint8_t> bytes, std::optional<AssetKind> expected = {});
void write_slice(const TrainingSlice& slice, const std::filesystem::path& path);
TrainingSlice read_slice(const std::filesystem::path& path, std::optional<AssetKind> expected = {});

}  // namespace rna
