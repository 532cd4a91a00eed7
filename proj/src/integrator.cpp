#include "rna/integrator.hpp"

#include "rna/errors.hpp"
#include "rna/parallel.hpp"

namespace rna {

namespace {
constexpr int tile_size = 16;
}

NeuralOutput shade_neural(const NeuralAsset& asset, const Instance& instance, const Hit& hit, const Vec3& wo,
                          const Vec3& wi) {
  auto want = hit.kind == HitKind::fiber ? AssetKind::fiber : AssetKind::surface;
  if (asset.kind != want) throw ConfigError("neural asset kind does not match the hit geometry");
  ShadingInput in;
  in.position = to_object_point(instance, hit.position);
  in.wo = to_object_dir(instance, wo);
  in.wi = to_object_dir(instance, wi);
  if (hit.kind == HitKind::fiber) {
    in.frame_dir = to_object_dir(instance, hit.tangent);
    in.h = hit.h;
  } else {
    in.frame_dir = to_object_normal(instance, hit.normal);
  }
  return evaluate(asset, in);
}

ShadowResult trace_shadow(const Scene& scene, const Hit& from, const Vec3& wi, double distance) {
  auto eps = scene.epsilon();
  auto origin = offset_origin(from, wi, eps);
  auto t_max = std::isfinite(distance) ? std::max(0.0, distance - 2 * eps) : inf;
  ShadowResult r;
  if (t_max <= 0) {
    r.transmitted = true;
    return r;
  }
  HitFilter others;
  others.exclude_instance = from.instance_id;
  auto blocker = scene.intersect(make_ray(origin, wi, 0, t_max), others);
  r.transmitted = !blocker;
  HitFilter self;
  self.only_instance = from.instance_id;
  auto self_t = blocker ? blocker->t : t_max;
  r.self_hint = bool(scene.intersect(make_ray(origin, wi, 0, self_t), self));
  return r;
}

namespace {

// Next event along a ray: geometry and/or the nearest rectangle emitter.
struct Segment {
  std::optional<Hit> hit;
  int rect_light = -1;
  double rect_t = inf;
};

Segment trace_segment(const SceneDesc& scene, const Ray& ray, const HitFilter& filter) {
  Segment s;
  s.hit = scene.geometry.intersect(ray, filter);
  for (size_t i = 0; i < scene.lights.size(); ++i) {
    const auto* rect = std::get_if<RectLight>(&scene.lights[i]);
    if (!rect) continue;
    auto t = intersect_rect(*rect, ray);
    if (t && *t < s.rect_t && (!s.hit || *t < s.hit->t)) {
      s.rect_t = *t;
      s.rect_light = int(i);
    }
  }
  if (s.rect_light >= 0) s.hit.reset();
  return s;
}

bool occluded(const Scene& scene, const Hit& from, const Vec3& wi, double distance) {
  auto eps = scene.epsilon();
  auto t_max = std::isfinite(distance) ? std::max(0.0, distance - 2 * eps) : inf;
  if (t_max <= 0) return false;
  return bool(scene.intersect(make_ray(offset_origin(from, wi, eps), wi, 0, t_max)));
}

Vec3 shading_normal(const Material& mat, const Hit& hit, const Vec3& wo) {
  const auto* s = std::get_if<SurfaceMaterial>(&mat);
  if (s && s->translucency_weight == 0 && dot(hit.normal, wo) < 0) return -hit.normal;
  return hit.normal;
}

struct PathState {
  Rgb radiance;
  bool primary_hit = false;
};

class PathTracer {
 public:
  PathTracer(const SceneDesc& scene, const RenderConfig& config) : scene_(scene), config_(config) {}

  PathState trace(const Ray& camera_ray, Rng& rng, int px, int py) const {
    PathState out;
    Rgb beta{1.0};
    double prev_pdf = 0;  // solid-angle pdf of the direction that produced the ray
    bool from_camera = true;
    auto seg = trace_segment(scene_, camera_ray, {});
    Ray ray = camera_ray;
    out.primary_hit = seg.hit.has_value();
    for (int depth = 0;; ++depth) {
      if (seg.rect_light >= 0) {
        const auto& rect = std::get<RectLight>(scene_.lights[seg.rect_light]);
        auto w = emitter_weight(from_camera, prev_pdf, light_pdf(scene_.lights[seg.rect_light], ray.origin, ray.direction));
        out.radiance += beta * rect.radiance * w;
        break;
      }
      if (!seg.hit) {
        for (const auto& light : scene_.lights)
          if (const auto* env = std::get_if<EnvironmentLight>(&light)) {
            auto w = emitter_weight(from_camera, prev_pdf, light_pdf(light, ray.origin, ray.direction));
            out.radiance += beta * environment_radiance(*env, ray.direction) * w;
          }
        break;
      }
      const auto hit = *seg.hit;
      auto wo = -ray.direction;
      const auto& mat = scene_.material_of(hit.instance_id);

      Vec3 next_dir, next_origin;
      HitFilter next_filter;
      bool pretraced = false;
      if (const auto* nm = std::get_if<NeuralMaterial>(&mat)) {
        const auto& inst = scene_.geometry.instance(hit.instance_id);
        auto uniform_pdf = hit.kind == HitKind::fiber ? uniform_sphere_pdf : uniform_hemisphere_pdf;
        auto bsdf_pdf_of = [&](const Vec3& wi) {
          return hit.kind == HitKind::fiber || dot(hit.normal, wi) > 0 ? uniform_pdf : 0.0;
        };
        for (const auto& light : scene_.lights) {
          if (config_.strategy == Strategy::bsdf_only && !is_delta(light)) continue;
          auto ls = sample_light(light, hit.position, rng);
          if (max_component(ls.weight) <= 0) continue;
          auto sh = trace_shadow(scene_.geometry, hit, ls.wi, ls.distance);
          if (!sh.transmitted && !config_.on_neural_shade) continue;
          auto o = shade_neural(*nm->asset, inst, hit, wo, ls.wi);
          const auto& used = o.select(sh.self_hint);
          if (config_.on_neural_shade)
            config_.on_neural_shade({px, py, depth, hit.instance_id, hit.position, ls.wi, ls.distance,
                                     sh.transmitted, sh.self_hint, o.lit, o.shadowed, used});
          if (!sh.transmitted) continue;
          out.radiance += beta * used * ls.weight * light_weight(ls, bsdf_pdf_of(ls.wi));
        }
        // Uniform indirect sample; the asset's own geometry is skipped.
        Vec3 local = hit.kind == HitKind::fiber ? sample_uniform_sphere(rng.uniform(), rng.uniform())
                                                : sample_uniform_hemisphere(rng.uniform(), rng.uniform());
        next_dir = hit.kind == HitKind::fiber ? local : normalize(frame_from_z(hit.normal).to_world(local));
        next_origin = offset_origin(hit, next_dir, scene_.geometry.epsilon());
        next_filter.exclude_instance = hit.instance_id;
        ray = make_ray(next_origin, next_dir);
        seg = trace_segment(scene_, ray, next_filter);
        pretraced = true;
        HitFilter self;
        self.only_instance = hit.instance_id;
        auto t_next = seg.rect_light >= 0 ? seg.rect_t : (seg.hit ? seg.hit->t : inf);
        auto self_hint = bool(scene_.geometry.intersect(make_ray(next_origin, next_dir, 0, t_next), self));
        auto o = shade_neural(*nm->asset, inst, hit, wo, next_dir);
        beta *= o.select(self_hint) / uniform_pdf;
        prev_pdf = uniform_pdf;
      } else {
        Vec3 n = shading_normal(mat, hit, wo);
        auto eval = [&](const Vec3& wi) -> Rgb {
          if (const auto* s = std::get_if<SurfaceMaterial>(&mat)) return eval_surface_bsdf(*s, n, wi, wo) * std::max(0.0, dot(n, wi));
          const auto& f = std::get<FiberMaterial>(mat);
          return eval_fiber_bsdf(f, hit.tangent, hit.h, wi, wo) * fiber_cosine(hit.tangent, wi);
        };
        auto pdf_of = [&](const Vec3& wi) {
          if (const auto* s = std::get_if<SurfaceMaterial>(&mat)) return surface_bsdf_pdf(*s, n, wi, wo);
          return fiber_sample_pdf;
        };
        direct_lighting(hit, eval, pdf_of, beta, rng, out.radiance);

        if (const auto* s = std::get_if<SurfaceMaterial>(&mat)) {
          auto bs = sample_surface_bsdf(*s, n, wo, rng);
          if (bs.event == ScatterEvent::none || bs.pdf <= 0) break;
          beta *= bs.value * (std::abs(dot(n, bs.wi)) / bs.pdf);
          if (bs.event == ScatterEvent::reflect) {
            next_dir = bs.wi;
            next_origin = spawn_origin(scene_.geometry, hit, next_dir);
            prev_pdf = bs.pdf;
          } else {
            auto walk = random_walk(scene_.geometry, hit.instance_id, *s, hit, bs.wi, rng);
            if (!walk.exited) break;
            beta *= walk.weight;
            const auto& ex = walk.exit;
            auto n_out = ex.geometric_normal;
            auto lambert = [&](const Vec3& wi) { return Rgb(inv_pi * std::max(0.0, dot(n_out, wi))); };
            auto lambert_pdf = [&](const Vec3& wi) { return cosine_hemisphere_pdf(dot(n_out, wi)); };
            direct_lighting(ex, lambert, lambert_pdf, beta, rng, out.radiance);
            next_dir = normalize(frame_from_z(n_out).to_world(sample_cosine_hemisphere(rng.uniform(), rng.uniform())));
            next_origin = offset_origin(ex, next_dir, scene_.geometry.epsilon());
            prev_pdf = cosine_hemisphere_pdf(dot(n_out, next_dir));
          }
        } else {
          const auto& fm = std::get<FiberMaterial>(mat);
          auto bs = sample_fiber_bsdf(fm, hit.tangent, hit.h, wo, rng);
          beta *= bs.value * (fiber_cosine(hit.tangent, bs.wi) / bs.pdf);
          next_dir = bs.wi;
          next_origin = spawn_origin(scene_.geometry, hit, next_dir);
          prev_pdf = bs.pdf;
        }
      }
      from_camera = false;
      if (!isfinite(beta) || max_component(beta) <= 0) break;
      if (depth + 1 >= config_.max_depth) break;
      if (depth >= 3) {
        auto q = std::min(1.0, max_component(beta));
        if (rng.uniform() >= q) break;
        beta = beta / q;
      }
      if (!pretraced) {
        ray = make_ray(next_origin, next_dir);
        seg = trace_segment(scene_, ray, next_filter);
      }
    }
    return out;
  }

 private:
  double emitter_weight(bool from_camera, double bsdf_pdf, double lpdf) const {
    if (from_camera) return 1;
    switch (config_.strategy) {
      case Strategy::light_only: return 0;
      case Strategy::bsdf_only: return 1;
      case Strategy::mis: return lpdf + bsdf_pdf > 0 ? mis_weight(bsdf_pdf, lpdf) : 0;
    }
    return 0;
  }

  double light_weight(const LightSample& ls, double bsdf_pdf) const {
    if (ls.is_delta || config_.strategy == Strategy::light_only) return 1;
    if (config_.strategy == Strategy::bsdf_only) return 0;
    return mis_weight(ls.pdf, bsdf_pdf);
  }

  template <typename Eval, typename Pdf>
  void direct_lighting(const Hit& hit, const Eval& eval, const Pdf& pdf_of, const Rgb& beta, Rng& rng,
                       Rgb& radiance) const {
    for (const auto& light : scene_.lights) {
      // Delta lights cannot be reached by direction sampling.
      if (config_.strategy == Strategy::bsdf_only && !is_delta(light)) continue;
      auto ls = sample_light(light, hit.position, rng);
      if (max_component(ls.weight) <= 0) continue;
      auto f = eval(ls.wi);
      if (max_component(f) <= 0) continue;
      if (occluded(scene_.geometry, hit, ls.wi, ls.distance)) continue;
      radiance += beta * f * ls.weight * light_weight(ls, pdf_of(ls.wi));
    }
  }

  const SceneDesc& scene_;
  const RenderConfig& config_;
};

}  // namespace

RenderOutput render(const SceneDesc& scene, const RenderConfig& config) {
  if (config.width < 1 || config.height < 1) throw ConfigError("render size must be positive");
  if (config.spp < 1) throw ConfigError("spp must be >= 1");
  if (config.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  RenderOutput out;
  out.image = HdrImage(config.width, config.height, true);
  out.variance.assign(out.image.rgb.size(), 0.0f);
  PathTracer tracer(scene, config);
  auto tiles_x = (config.width + tile_size - 1) / tile_size;
  auto tiles_y = (config.height + tile_size - 1) / tile_size;
  parallel_for(tiles_x * tiles_y, config.threads, [&](int tile) {
    Rng rng(stream_seed(config.seed, uint64_t(tile)));
    auto x0 = (tile % tiles_x) * tile_size, y0 = (tile / tiles_x) * tile_size;
    for (int y = y0; y < std::min(config.height, y0 + tile_size); ++y)
      for (int x = x0; x < std::min(config.width, x0 + tile_size); ++x) {
        Rgb sum, sum2;
        int covered = 0;
        for (int s = 0; s < config.spp; ++s) {
          auto ray = camera_ray(scene.camera, config.width, config.height, x + rng.uniform(), y + rng.uniform());
          auto p = tracer.trace(ray, rng, x, y);
          if (!isfinite(p.radiance)) p.radiance = {};
          sum += p.radiance;
          sum2 += p.radiance * p.radiance;
          covered += p.primary_hit;
        }
        auto n = double(config.spp);
        auto mean = sum / n;
        auto pixel = size_t(y) * config.width + x;
        for (int c = 0; c < 3; ++c) {
          auto var = config.spp > 1 ? std::max(0.0, (sum2[c] - n * mean[c] * mean[c]) / (n - 1)) / n : 0.0;
          out.variance[3 * pixel + c] = float(var);
          auto v = config.tonemap ? mean[c] / (1 + mean[c]) : mean[c];
          out.image.rgb[3 * pixel + c] = float(v);
        }
        out.image.alpha[pixel] = float(covered / n);
      }
  });
  return out;
}

}  // namespace rna
