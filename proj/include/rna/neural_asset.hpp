#pragma once

#include <filesystem>
#include <json.hpp>
#include <span>
#include <string>

#include "rna/math.hpp"
#include "rna/mlp.hpp"
#include "rna/triplane.hpp"

namespace rna {

enum class AssetKind { surface, fiber };

std::string to_string(AssetKind kind);
AssetKind asset_kind_from_string(const std::string& s);

// Shading query in training (object) space. `frame_dir` is the surface
// normal for surface assets and the fiber tangent for fiber assets.
struct ShadingInput {
  Vec3 position;
  Vec3 wo;  // toward the viewer
  Vec3 wi;  // toward the light
  Vec3 frame_dir;
  double h = 0;
};

// Property vector layout: [wo, wi, n] for surfaces, [wo, wi, d, h] for
// fibers (h dropped when use_h is false).
constexpr int property_size(AssetKind kind, bool use_h) {
  return kind == AssetKind::fiber && use_h ? 10 : 9;
}

template <typename Scalar>
void write_properties(AssetKind kind, bool use_h, const ShadingInput& in, Scalar* out) {
  for (int i = 0; i < 3; ++i) {
    out[i] = Scalar(in.wo[i]);
    out[3 + i] = Scalar(in.wi[i]);
    out[6 + i] = Scalar(in.frame_dir[i]);
  }
  if (kind == AssetKind::fiber && use_h) out[9] = Scalar(in.h);
}

struct NeuralOutput {
  Rgb lit;
  Rgb shadowed;
  const Rgb& select(bool self_shadowed) const { return self_shadowed ? shadowed : lit; }
};

// Geometry is referenced by the scene; the asset holds the feature grid,
// the decoder and its normalization.
struct NeuralAsset {
  AssetKind kind = AssetKind::surface;
  bool use_h = true;
  // When false the decoder was fit with a single head; the lit output is
  // used regardless of self-shadowing.
  bool visibility_hint = true;
  TriplaneGrid<float> grid;
  Mlp<float> mlp;
  nlohmann::json metadata = nlohmann::json::object();

  int property_size() const { return rna::property_size(kind, use_h); }
  int input_size() const { return grid.channels + property_size(); }
  size_t parameter_count() const { return grid.data.size() + mlp.parameter_count(); }
};

struct ModelShape {
  int resolution = 64;
  int channels = 8;
  int hidden_layers = 4;
  int width = 64;
  OutputActivation output_activation = OutputActivation::softplus;
};

// Fresh, randomly initialized asset (He-uniform decoder, N(0, 0.01^2) texels).
NeuralAsset make_asset(AssetKind kind, bool use_h, const ModelShape& shape, const Bounds3& bounds,
                       uint64_t seed);

// Assembles xi = [zeta(x), properties] in `out` (length input_size()).
template <typename Scalar>
void assemble_input(const TriplaneGrid<Scalar>& grid, AssetKind kind, bool use_h,
                    const ShadingInput& in, Scalar* out) {
  triplane_gather(grid, triplane_taps(grid, in.position), out);
  write_properties(kind, use_h, in, out + grid.channels);
}

NeuralOutput evaluate(const NeuralAsset& asset, const ShadingInput& in);

// RNA1 container: magic, u32 version, u32 header length, JSON header,
// float32 tensors in header order.
inline constexpr uint32_t asset_format_version = 1;

std::vector<uint8_t> serialize_asset(const NeuralAsset& asset);
NeuralAsset deserialize_asset(std::span<const uint8_t> bytes);
void save_asset(const NeuralAsset& asset, const std::filesystem::path& path);
NeuralAsset load_asset(const std::filesystem::path& path);

// Parses only the JSON header (for `info`).
nlohmann::json read_asset_header(std::span<const uint8_t> bytes);

}  // namespace rna
