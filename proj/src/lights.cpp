#include "rna/lights.hpp"

#include <algorithm>

#include "rna/errors.hpp"

namespace rna {

bool is_delta(const Light& light) {
  return std::holds_alternative<DirectionalLight>(light) || std::holds_alternative<PointLight>(light);
}

Vec3 environment_direction(double u, double v) {
  auto phi = 2 * pi * u, theta = pi * v;
  auto s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

void environment_uv(const Vec3& dir, double& u, double& v) {
  auto phi = std::atan2(dir.y, dir.x);
  if (phi < 0) phi += 2 * pi;
  u = phi / (2 * pi);
  v = std::acos(std::clamp(dir.z, -1.0, 1.0)) / pi;
}

namespace {

void environment_texel(const EnvironmentLight& env, const Vec3& dir, int& x, int& y) {
  double u, v;
  environment_uv(dir, u, v);
  x = std::clamp(int(u * env.map.width), 0, env.map.width - 1);
  y = std::clamp(int(v * env.map.height), 0, env.map.height - 1);
}

// Index of the last cdf entry <= target among [0, n).
int sample_cdf(const double* cdf, int n, double target) {
  auto it = std::upper_bound(cdf, cdf + n + 1, target);
  return std::clamp(int(it - cdf) - 1, 0, n - 1);
}

}  // namespace

Rgb environment_radiance(const EnvironmentLight& env, const Vec3& dir) {
  int x, y;
  environment_texel(env, dir, x, y);
  const auto* px = env.map.pixel(x, y);
  return env.scale * Rgb(px[0], px[1], px[2]);
}

double environment_texel_probability(const EnvironmentLight& env, int x, int y) {
  const auto* row = env.conditional_cdf.data() + size_t(y) * (env.map.width + 1);
  return (row[x + 1] - row[x]) / env.marginal_cdf.back();
}

namespace {

double environment_pdf(const EnvironmentLight& env, const Vec3& dir) {
  int x, y;
  environment_texel(env, dir, x, y);
  auto sin_theta = std::sqrt(std::max(0.0, 1 - dir.z * dir.z));
  if (sin_theta <= 0) return 0;
  auto w = env.map.width, h = env.map.height;
  return environment_texel_probability(env, x, y) * w * h / (2 * pi * pi * sin_theta);
}

}  // namespace

std::optional<double> intersect_rect(const RectLight& light, const Ray& ray) {
  auto n = cross(light.edge_u, light.edge_v);
  auto denom = dot(ray.direction, n);
  if (denom >= 0) return std::nullopt;  // back side or parallel
  auto t = dot(light.corner - ray.origin, n) / denom;
  if (t <= ray.t_min || t >= ray.t_max) return std::nullopt;
  auto rel = ray.origin + t * ray.direction - light.corner;
  auto uu = dot(light.edge_u, light.edge_u), vv = dot(light.edge_v, light.edge_v);
  auto uv = dot(light.edge_u, light.edge_v);
  auto ru = dot(rel, light.edge_u), rv = dot(rel, light.edge_v);
  auto det = uu * vv - uv * uv;
  auto a = (ru * vv - rv * uv) / det, b = (rv * uu - ru * uv) / det;
  if (a < 0 || a > 1 || b < 0 || b > 1) return std::nullopt;
  return t;
}

LightSample sample_light(const Light& light, const Vec3& x, Rng& rng) {
  LightSample s;
  if (const auto* d = std::get_if<DirectionalLight>(&light)) {
    s.wi = d->direction;
    s.weight = d->irradiance;
    s.is_delta = true;
  } else if (const auto* p = std::get_if<PointLight>(&light)) {
    auto to = p->position - x;
    auto r2 = length_squared(to);
    s.distance = std::sqrt(r2);
    s.wi = to / s.distance;
    s.weight = p->intensity / r2;
    s.is_delta = true;
  } else if (const auto* r = std::get_if<RectLight>(&light)) {
    auto u1 = rng.uniform(), u2 = rng.uniform();
    auto y = r->corner + u1 * r->edge_u + u2 * r->edge_v;
    auto to = y - x;
    auto r2 = length_squared(to);
    s.distance = std::sqrt(r2);
    s.wi = to / s.distance;
    auto cos_l = -dot(s.wi, r->normal());
    if (cos_l <= 0 || r2 == 0) return LightSample{s.wi, s.distance, {}, 0, false};
    s.pdf = r2 / (r->area() * cos_l);
    s.weight = r->radiance / s.pdf;
  } else {
    const auto& env = std::get<EnvironmentLight>(light);
    auto h = env.map.height, w = env.map.width;
    auto y = sample_cdf(env.marginal_cdf.data(), h, rng.uniform() * env.marginal_cdf.back());
    const auto* row = env.conditional_cdf.data() + size_t(y) * (w + 1);
    auto x = sample_cdf(row, w, rng.uniform() * row[w]);
    s.wi = environment_direction((x + rng.uniform()) / w, (y + rng.uniform()) / h);
    s.pdf = environment_pdf(env, s.wi);
    if (s.pdf <= 0) return LightSample{s.wi, inf, {}, 0, false};
    s.weight = environment_radiance(env, s.wi) / s.pdf;
  }
  return s;
}

double light_pdf(const Light& light, const Vec3& x, const Vec3& wi) {
  if (const auto* r = std::get_if<RectLight>(&light)) {
    auto t = intersect_rect(*r, Ray{x, wi, 0, inf});
    if (!t) return 0;
    auto cos_l = -dot(wi, r->normal());
    return *t * *t / (r->area() * cos_l);
  }
  if (const auto* env = std::get_if<EnvironmentLight>(&light)) return environment_pdf(*env, wi);
  return 0;
}

double mis_weight(double pdf_a, double pdf_b) {
  require(pdf_a >= 0 && pdf_b >= 0, "pdfs must be non-negative");
  require(pdf_a + pdf_b > 0, "MIS weight undefined when both pdfs are zero");
  return pdf_a / (pdf_a + pdf_b);
}

}  // namespace rna
