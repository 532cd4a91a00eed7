#pragma once

#include <functional>

#include "rna/image_io.hpp"
#include "rna/lights.hpp"
#include "rna/scene_desc.hpp"

namespace rna {

enum class Strategy { mis, light_only, bsdf_only };

// Reported for every light sample evaluated at a neural-asset vertex.
struct NeuralShadeEvent {
  int x = 0, y = 0;
  int depth = 0;
  int instance_id = -1;
  Vec3 position;
  Vec3 wi;
  double distance = inf;
  bool transmitted = false;
  bool self_hint = false;
  Rgb lit, shadowed, used;
};

struct RenderConfig {
  int width = 256;
  int height = 256;
  int spp = 16;
  int max_depth = 8;
  uint64_t seed = 1;
  int threads = 0;
  bool tonemap = false;  // x / (1 + x) per channel
  Strategy strategy = Strategy::mis;
  // Called from worker threads; must be thread safe.
  std::function<void(const NeuralShadeEvent&)> on_neural_shade;
};

struct RenderOutput {
  HdrImage image;               // rgb plus alpha coverage
  std::vector<float> variance;  // per channel variance of each pixel's mean
};

// Decoder outputs for a hit on a neural asset. World-space directions are
// converted into the asset's training space first. Throws ConfigError when
// the asset kind does not match the hit kind.
NeuralOutput shade_neural(const NeuralAsset& asset, const Instance& instance, const Hit& hit, const Vec3& wo,
                          const Vec3& wi);

struct ShadowResult {
  bool transmitted = false;  // no other instance blocks the segment
  bool self_hint = false;    // the origin's own instance lies on the segment
};

// Shadow query with the instance-ID rule: hits on the origin instance set
// the hint and are passed through, any other hit blocks.
ShadowResult trace_shadow(const Scene& scene, const Hit& from, const Vec3& wi, double distance);

RenderOutput render(const SceneDesc& scene, const RenderConfig& config);

}  // namespace rna
