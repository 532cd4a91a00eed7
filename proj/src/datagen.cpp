#include "rna/datagen.hpp"

#include <cstdio>
#include <fstream>

#include "rna/errors.hpp"
#include "rna/parallel.hpp"

namespace rna {

using nlohmann::json;

namespace {
constexpr int tile_size = 16;
constexpr uint64_t camera_stream = 0xca3e7a;
constexpr uint64_t validation_light_stream = 0x7a11d;
}  // namespace

void validate(const BakeConfig& c) {
  if (c.view_count < 1) throw ConfigError("view_count must be >= 1");
  if (c.validation_views < 0) throw ConfigError("validation_views must be >= 0");
  if (c.resolution < 1) throw ConfigError("resolution must be >= 1");
  if (c.spp < 1) throw ConfigError("spp must be >= 1");
  if (!(c.clamp_direct > 0) || !(c.clamp_indirect > 0)) throw ConfigError("clamps must be > 0");
  if (c.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (c.camera_radius < 0) throw ConfigError("camera_radius must be >= 0");
}

Camera sample_camera(int index, const BakeConfig& config, const Bounds3& asset_bounds) {
  auto center = asset_bounds.center();
  auto bound_radius = 0.5 * asset_bounds.diagonal();
  auto radius = config.camera_radius > 0 ? config.camera_radius : 2.5 * bound_radius;
  if (radius <= bound_radius) throw ConfigError("camera_radius must exceed the asset's bounding radius");
  Rng rng(stream_seed(config.seed, camera_stream, uint64_t(index)));
  auto dir = config.hemisphere_only ? sample_uniform_hemisphere(rng.uniform(), rng.uniform())
                                    : sample_uniform_sphere(rng.uniform(), rng.uniform());
  Camera cam;
  cam.origin = center + radius * dir;
  cam.target = center;
  cam.up = std::abs(dir.z) > 0.99 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
  cam.fov_deg = std::min(170.0, 2 * std::asin(bound_radius / radius) * 1.1 * 180 / pi);
  return cam;
}

Vec3 sample_light_direction(Rng& rng, bool hemisphere_only) {
  auto u1 = rng.uniform(), u2 = rng.uniform();
  return hemisphere_only ? sample_uniform_hemisphere(u1, u2) : sample_uniform_sphere(u1, u2);
}

Rgb clamp_radiance(const Rgb& v, double limit) {
  return {std::min(v.x, limit), std::min(v.y, limit), std::min(v.z, limit)};
}

bool light_visible(const Scene& scene, const Hit& hit, const Vec3& wi) {
  return !scene.intersect(make_ray(offset_origin(hit, wi, scene.epsilon()), wi));
}

namespace {

// Reflective vertex of a classical material: f * cos toward wi.
Rgb eval_vertex(const Material& mat, const Hit& hit, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  if (const auto* s = std::get_if<SurfaceMaterial>(&mat))
    return eval_surface_bsdf(*s, n, wi, wo) * std::max(0.0, dot(n, wi));
  const auto& f = std::get<FiberMaterial>(mat);
  return eval_fiber_bsdf(f, hit.tangent, hit.h, wi, wo) * fiber_cosine(hit.tangent, wi);
}

// Surface normal used for shading: opaque surfaces are two-sided.
Vec3 shading_normal(const Material& mat, const Hit& hit, const Vec3& wo) {
  const auto* s = std::get_if<SurfaceMaterial>(&mat);
  if (s && s->translucency_weight == 0 && dot(hit.normal, wo) < 0) return -hit.normal;
  return hit.normal;
}

struct PathResult {
  Rgb direct;
  Rgb indirect;
};

PathResult trace_path(const SceneDesc& desc, const Hit& primary, const Vec3& wo0, const Vec3& wl,
                      Rng& rng, const BakeConfig& config) {
  const auto& scene = desc.geometry;
  auto eps = scene.epsilon();
  PathResult out;
  Hit hit = primary;
  Vec3 wo = wo0;
  Rgb beta{1.0};
  for (int vertex = 1;; ++vertex) {
    auto add = [&](const Rgb& c) { (vertex == 1 ? out.direct : out.indirect) += c; };
    const auto& mat = desc.material_of(hit.instance_id);
    auto n = shading_normal(mat, hit, wo);
    auto f = eval_vertex(mat, hit, n, wl, wo);
    if (max_component(f) > 0 && light_visible(scene, hit, wl)) add(beta * f);
    if (vertex >= config.max_depth) break;

    Vec3 next_origin, next_dir;
    if (const auto* s = std::get_if<SurfaceMaterial>(&mat)) {
      auto bs = sample_surface_bsdf(*s, n, wo, rng);
      if (bs.event == ScatterEvent::none || bs.pdf <= 0) break;
      beta *= bs.value * (std::abs(dot(n, bs.wi)) / bs.pdf);
      if (bs.event == ScatterEvent::reflect) {
        next_origin = spawn_origin(scene, hit, bs.wi);
        next_dir = bs.wi;
      } else {
        auto walk = random_walk(scene, hit.instance_id, *s, hit, bs.wi, rng);
        if (!walk.exited) break;
        beta *= walk.weight;
        // Exit vertex: Lambertian transmission into the outer hemisphere.
        ++vertex;
        const auto& ex = walk.exit;
        auto n_out = ex.geometric_normal;
        auto cos_l = dot(n_out, wl);
        if (cos_l > 0 && light_visible(scene, ex, wl)) out.indirect += beta * (inv_pi * cos_l);
        if (vertex >= config.max_depth) break;
        next_dir = normalize(frame_from_z(n_out).to_world(sample_cosine_hemisphere(rng.uniform(), rng.uniform())));
        next_origin = offset_origin(ex, next_dir, eps);
      }
    } else {
      const auto& fm = std::get<FiberMaterial>(mat);
      auto bs = sample_fiber_bsdf(fm, hit.tangent, hit.h, wo, rng);
      beta *= bs.value * (fiber_cosine(hit.tangent, bs.wi) / bs.pdf);
      next_origin = spawn_origin(scene, hit, bs.wi);
      next_dir = bs.wi;
    }
    if (max_component(beta) <= 0) break;
    if (vertex >= 3) {
      auto q = std::min(1.0, max_component(beta));
      if (rng.uniform() >= q) break;
      beta = beta / q;
    }
    auto next = scene.intersect(make_ray(next_origin, next_dir));
    if (!next) break;
    hit = *next;
    wo = -next_dir;
  }
  return out;
}

}  // namespace

TransportSample trace_transport(const SceneDesc& scene, const Ray& ray, const Vec3& light_dir,
                                Rng& rng, const BakeConfig& config) {
  TransportSample result;
  auto hit = scene.geometry.intersect(ray);
  if (!hit) return result;
  result.hit = true;
  result.primary = *hit;
  result.visible = light_visible(scene.geometry, *hit, light_dir);
  Rgb sum;
  for (int s = 0; s < config.spp; ++s) {
    auto p = trace_path(scene, *hit, -ray.direction, light_dir, rng, config);
    sum += clamp_radiance(p.direct, config.clamp_direct) + clamp_radiance(p.indirect, config.clamp_indirect);
  }
  result.radiance = sum / double(config.spp);
  return result;
}

namespace {

const Instance& bake_instance(const SceneDesc& scene) {
  const auto& instances = scene.geometry.instances();
  if (instances.size() != 1) throw ConfigError("baking needs a scene with exactly one instance");
  const auto& inst = instances.front();
  if (!inst.object_to_world.is_identity())
    throw ConfigError("the baked instance must use the identity transform (training space)");
  if (std::holds_alternative<NeuralMaterial>(scene.material_of(inst.id)))
    throw ConfigError("cannot bake a neural material");
  return inst;
}

void put3(std::vector<float>& plane, size_t pixel, const Vec3& v) {
  plane[3 * pixel] = float(v.x);
  plane[3 * pixel + 1] = float(v.y);
  plane[3 * pixel + 2] = float(v.z);
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json camera_json(const Camera& c) {
  return {{"origin", vec_json(c.origin)}, {"target", vec_json(c.target)}, {"up", vec_json(c.up)},
          {"fov_deg", c.fov_deg}};
}

}  // namespace

Bounds3 training_bounds(const SceneDesc& scene) {
  const auto& inst = bake_instance(scene);
  auto b = scene.geometry.instance_bounds(inst.id);
  auto pad = 0.02 * b.extent() + Vec3(1e-3 * b.diagonal());
  return {b.min - pad, b.max + pad};
}

TrainingSlice render_slice(const SceneDesc& scene, const Camera& camera, int view_index,
                           const BakeConfig& config, const std::optional<Vec3>& fixed_light) {
  const auto& inst = bake_instance(scene);
  auto kind = std::holds_alternative<FiberSet>(inst.geometry) ? AssetKind::fiber : AssetKind::surface;
  auto res = config.resolution;
  auto slice = make_slice(res, res, kind);
  auto& radiance = slice.plane("radiance").data;
  auto& alpha = slice.plane("alpha").data;
  auto& position = slice.plane("position").data;
  auto& view_dir = slice.plane("view_dir").data;
  auto& light_dir = slice.plane("light_dir").data;
  auto& visibility = slice.plane("visibility").data;
  auto* normal = kind == AssetKind::surface ? &slice.plane("normal").data : nullptr;
  auto* tangent = kind == AssetKind::fiber ? &slice.plane("tangent").data : nullptr;
  auto* hplane = kind == AssetKind::fiber ? &slice.plane("h").data : nullptr;

  auto tiles_x = (res + tile_size - 1) / tile_size;
  parallel_for(tiles_x * tiles_x, config.threads, [&](int tile) {
    Rng rng(stream_seed(config.seed, uint64_t(view_index), uint64_t(tile)));
    auto x0 = (tile % tiles_x) * tile_size, y0 = (tile / tiles_x) * tile_size;
    for (int y = y0; y < std::min(res, y0 + tile_size); ++y)
      for (int x = x0; x < std::min(res, x0 + tile_size); ++x) {
        auto wl = fixed_light ? *fixed_light : sample_light_direction(rng, config.hemisphere_only);
        auto ray = camera_ray(camera, res, res, x + 0.5, y + 0.5);
        auto t = trace_transport(scene, ray, wl, rng, config);
        if (!t.hit) continue;
        auto pixel = size_t(y) * res + x;
        const auto& hit = t.primary;
        put3(radiance, pixel, t.radiance);
        alpha[pixel] = 1;
        put3(position, pixel, to_object_point(inst, hit.position));
        put3(view_dir, pixel, to_object_dir(inst, -ray.direction));
        put3(light_dir, pixel, to_object_dir(inst, wl));
        visibility[pixel] = t.visible ? 1.0f : 0.0f;
        if (normal) put3(*normal, pixel, to_object_normal(inst, hit.normal));
        if (tangent) {
          put3(*tangent, pixel, to_object_dir(inst, hit.tangent));
          (*hplane)[pixel] = float(hit.h);
        }
      }
  });
  return slice;
}

void bake(const SceneDesc& scene, const BakeConfig& config, const std::filesystem::path& out_dir) {
  validate(config);
  const auto& inst = bake_instance(scene);
  auto kind = std::holds_alternative<FiberSet>(inst.geometry) ? AssetKind::fiber : AssetKind::surface;
  auto asset_bounds = scene.geometry.instance_bounds(inst.id);
  auto bounds = training_bounds(scene);
  std::error_code ec;
  for (const auto* sub : {"train", "val"}) {
    std::filesystem::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  json manifest;
  manifest["kind"] = to_string(kind);
  manifest["bounds"] = {{"min", vec_json(bounds.min)}, {"max", vec_json(bounds.max)}};
  if (const auto* f = std::get_if<FiberSet>(&inst.geometry)) manifest["fiber_radius"] = f->radius;
  manifest["resolution"] = config.resolution;
  manifest["spp"] = config.spp;
  manifest["seed"] = config.seed;
  manifest["clamp_direct"] = config.clamp_direct;
  manifest["clamp_indirect"] = config.clamp_indirect;
  manifest["hemisphere_only"] = config.hemisphere_only;
  manifest["train"] = json::array();
  manifest["val"] = json::array();

  char name[32];
  for (int v = 0; v < config.view_count; ++v) {
    auto cam = sample_camera(v, config, asset_bounds);
    auto slice = render_slice(scene, cam, v, config, std::nullopt);
    std::snprintf(name, sizeof name, "slice_%04d.rnad", v);
    write_slice(slice, out_dir / "train" / name);
    manifest["train"].push_back({{"file", std::string("train/") + name}, {"camera", camera_json(cam)}});
  }
  for (int v = 0; v < config.validation_views; ++v) {
    auto index = config.view_count + v;
    auto cam = sample_camera(index, config, asset_bounds);
    Rng light_rng(stream_seed(config.seed, validation_light_stream, uint64_t(v)));
    auto wl = sample_light_direction(light_rng, config.hemisphere_only);
    auto slice = render_slice(scene, cam, index, config, wl);
    std::snprintf(name, sizeof name, "slice_%04d.rnad", v);
    write_slice(slice, out_dir / "val" / name);
    manifest["val"].push_back(
        {{"file", std::string("val/") + name}, {"camera", camera_json(cam)}, {"light_dir", vec_json(wl)}});
  }
  std::ofstream out(out_dir / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
}

}  // namespace rna
