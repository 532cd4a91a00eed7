#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "rna/geometry.hpp"
#include "rna/image_io.hpp"
#include "rna/neural_asset.hpp"
#include "rna/shading.hpp"

namespace rna {

struct Camera {
  Vec3 origin{0, -5, 0};
  Vec3 target{0, 0, 0};
  Vec3 up{0, 0, 1};
  double fov_deg = 40;  // vertical
};

// Ray through continuous pixel coordinates (px, py), py = 0 at the top row.
Ray camera_ray(const Camera& camera, int width, int height, double px, double py);

struct NeuralMaterial {
  std::filesystem::path path;
  std::shared_ptr<const NeuralAsset> asset;
};

using Material = std::variant<SurfaceMaterial, FiberMaterial, NeuralMaterial>;

struct DirectionalLight {
  Vec3 direction{0, 0, 1};  // toward the light
  Rgb irradiance{1.0};
};

struct PointLight {
  Vec3 position;
  Rgb intensity{1.0};
};

// One-sided parallelogram emitter facing cross(edge_u, edge_v).
struct RectLight {
  Vec3 corner;
  Vec3 edge_u{1, 0, 0};
  Vec3 edge_v{0, 1, 0};
  Rgb radiance{1.0};

  Vec3 normal() const { return normalize(cross(edge_u, edge_v)); }
  double area() const { return length(cross(edge_u, edge_v)); }
};

// Lat-long environment (z up). Sampling uses a luminance * sin(theta)
// weighted 2D CDF over texels; see lights.hpp.
struct EnvironmentLight {
  HdrImage map;  // 1x1 for a constant environment
  double scale = 1.0;
  std::vector<double> marginal_cdf;     // height + 1
  std::vector<double> conditional_cdf;  // height * (width + 1)
};

using Light = std::variant<DirectionalLight, PointLight, RectLight, EnvironmentLight>;

// Fully resolved scene: geometry, per-instance materials, lights, camera.
struct SceneDesc {
  Scene geometry;
  std::map<std::string, Material> materials;
  std::vector<Light> lights;
  Camera camera;
  std::filesystem::path base_dir;

  const Material& material_of(int instance_id) const;
  // Re-resolves the material pointer cache; call after mutating fields.
  void bind_materials();

 private:
  std::vector<const Material*> material_by_id_;
};

// JSON scene document; unknown keys are rejected. Relative paths (neural
// assets, environment maps) resolve against `base_dir`.
SceneDesc parse_scene(const nlohmann::json& doc, const std::filesystem::path& base_dir);
SceneDesc load_scene(const std::filesystem::path& path);

// Builds the EnvironmentLight sampling tables from its map.
void prepare_environment(EnvironmentLight& env);

// Transform helpers between world space and an instance's object space.
Vec3 to_object_point(const Instance& inst, const Vec3& p);
Vec3 to_object_dir(const Instance& inst, const Vec3& v);
Vec3 to_object_normal(const Instance& inst, const Vec3& n);

}  // namespace rna
