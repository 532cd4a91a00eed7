#include "rna/shading.hpp"

#include <array>
#include <cmath>

#include "rna/errors.hpp"

namespace rna {

namespace {

constexpr std::array<double, 3> fiber_channel_phase = {0.0, 0.5, 1.0};

void require_unit(const Vec3& v, const char* name) {
  if (std::abs(length_squared(v) - 1) > 2e-6)
    throw ContractViolation(std::string(name) + " must be unit length");
}

bool in_range(const Rgb& c, double lo, double hi) {
  return c.x >= lo && c.y >= lo && c.z >= lo && c.x <= hi && c.y <= hi && c.z <= hi;
}

}  // namespace

void validate(const SurfaceMaterial& m) {
  if (!in_range(m.albedo, 0, 1)) throw ConfigError("surface albedo must be in [0, 1]");
  if (!(m.roughness > 0 && m.roughness <= 1)) throw ConfigError("roughness must be in (0, 1]");
  if (!(m.specular >= 0 && m.specular <= 1)) throw ConfigError("specular must be in [0, 1]");
  if (!(m.translucency_weight >= 0 && m.translucency_weight <= 1))
    throw ConfigError("translucency_weight must be in [0, 1]");
  if (!(m.translucency_mfp.x > 0 && m.translucency_mfp.y > 0 && m.translucency_mfp.z > 0))
    throw ConfigError("translucency_mfp must be positive");
}

void validate(const FiberMaterial& m) {
  if (!in_range(m.base_color, 0, 1)) throw ConfigError("fiber base_color must be in [0, 1]");
  if (!(m.longitudinal_roughness > 0 && m.longitudinal_roughness <= 1))
    throw ConfigError("longitudinal_roughness must be in (0, 1]");
  if (!(m.azimuthal_gain >= 0)) throw ConfigError("azimuthal_gain must be >= 0");
}

double phong_exponent(double roughness) {
  return std::clamp(2 / (roughness * roughness) - 2, 0.0, 1e4);
}

// -----------------------------------------------------------------------------
// SURFACE
// -----------------------------------------------------------------------------

namespace {

double phong_lobe(double exponent, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  auto c = dot(reflect(wo, n), wi);
  if (c <= 0) return 0;
  return (exponent + 2) / (2 * pi) * std::pow(c, exponent);
}

double phong_pdf(double exponent, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  auto c = dot(reflect(wo, n), wi);
  if (c <= 0) return 0;
  return (exponent + 1) / (2 * pi) * std::pow(c, exponent);
}

}  // namespace

Rgb eval_surface_bsdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  require_unit(n, "normal");
  require_unit(wi, "wi");
  require_unit(wo, "wo");
  if (dot(n, wi) <= 0 || dot(n, wo) <= 0) return {};
  auto reflect_weight = 1 - m.translucency_weight;
  Rgb f = (1 - m.specular) * inv_pi * m.albedo;
  if (m.specular > 0) f += Rgb(m.specular * phong_lobe(phong_exponent(m.roughness), n, wi, wo));
  return reflect_weight * f;
}

double surface_bsdf_pdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wi, const Vec3& wo) {
  auto cos_i = dot(n, wi);
  if (cos_i <= 0 || dot(n, wo) <= 0) return 0;
  auto pdf = (1 - m.specular) * cos_i * inv_pi;
  if (m.specular > 0) pdf += m.specular * phong_pdf(phong_exponent(m.roughness), n, wi, wo);
  return (1 - m.translucency_weight) * pdf;
}

BsdfSample sample_surface_bsdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wo, Rng& rng) {
  auto frame = frame_from_z(n);
  BsdfSample s;
  if (rng.uniform() < m.translucency_weight) {
    auto local = sample_cosine_hemisphere(rng.uniform(), rng.uniform());
    s.wi = -frame.to_world(local);
    s.pdf = m.translucency_weight * local.z * inv_pi;
    s.value = Rgb(m.translucency_weight * inv_pi);
    s.event = s.pdf > 0 ? ScatterEvent::enter_medium : ScatterEvent::none;
    return s;
  }
  if (dot(n, wo) <= 0) return s;
  auto exponent = phong_exponent(m.roughness);
  for (int attempt = 0; attempt < max_sample_retries; ++attempt) {
    Vec3 wi;
    if (rng.uniform() < m.specular) {
      // Phong lobe around the mirror direction.
      auto u1 = rng.uniform(), u2 = rng.uniform();
      auto cos_a = std::pow(u1, 1 / (exponent + 1));
      auto sin_a = std::sqrt(std::max(0.0, 1 - cos_a * cos_a));
      auto phi = 2 * pi * u2;
      wi = frame_from_z(reflect(wo, n))
               .to_world({sin_a * std::cos(phi), sin_a * std::sin(phi), cos_a});
    } else {
      wi = frame.to_world(sample_cosine_hemisphere(rng.uniform(), rng.uniform()));
    }
    wi = normalize(wi);
    auto pdf = surface_bsdf_pdf(m, n, wi, wo);
    if (pdf <= 0) continue;
    s.wi = wi;
    s.pdf = pdf;
    s.value = eval_surface_bsdf(m, n, wi, wo);
    s.event = ScatterEvent::reflect;
    return s;
  }
  return s;
}

// -----------------------------------------------------------------------------
// FIBER
// -----------------------------------------------------------------------------

double fiber_cosine(const Vec3& d, const Vec3& wi) {
  auto s = dot(d, wi);
  return std::sqrt(std::max(0.0, 1 - s * s));
}

namespace {

// Mean over phi of max(0, 1 + gain * cos(phi)).
double azimuthal_normalization(double gain) {
  if (gain <= 1) return 1;
  auto alpha = std::acos(-1 / gain);
  return (alpha + gain * std::sin(alpha)) / pi;
}

// Gaussian in sin(theta_i) centered at -sin(theta_o), normalized so that
// its integral against cos(theta_i) d(theta_i) over [-pi/2, pi/2] is 1.
double longitudinal_lobe(double beta, double sin_i, double sin_o) {
  auto z = beta * std::sqrt(pi / 2) *
           (std::erf((1 + sin_o) / (beta * std::sqrt(2.0))) +
            std::erf((1 - sin_o) / (beta * std::sqrt(2.0))));
  auto x = sin_i + sin_o;
  return std::exp(-x * x / (2 * beta * beta)) / z;
}

}  // namespace

Rgb eval_fiber_bsdf(const FiberMaterial& m, const Vec3& d, double h, const Vec3& wi,
                    const Vec3& wo) {
  require_unit(d, "tangent");
  require_unit(wi, "wi");
  require_unit(wo, "wo");
  require(h >= -1 && h <= 1, "h must be in [-1, 1]");
  auto sin_i = dot(d, wi), sin_o = dot(d, wo);
  auto cos_i = std::max(std::sqrt(std::max(0.0, 1 - sin_i * sin_i)), 1e-4);
  auto lon = longitudinal_lobe(m.longitudinal_roughness, sin_i, sin_o);

  auto pi_proj = wi - sin_i * d;
  auto po_proj = wo - sin_o * d;
  double phi = 0;
  if (length_squared(pi_proj) > 1e-16 && length_squared(po_proj) > 1e-16)
    phi = std::atan2(dot(cross(po_proj, pi_proj), d), dot(po_proj, pi_proj));

  auto center = pi - 2 * std::asin(h);
  auto norm = azimuthal_normalization(m.azimuthal_gain);
  Rgb f;
  for (int c = 0; c < 3; ++c) {
    auto g = std::cos(phi - center - fiber_channel_phase[c]);
    auto azimuthal = std::max(0.0, 1 + m.azimuthal_gain * g) / norm;
    f[c] = m.base_color[c] * lon * azimuthal / (2 * pi * cos_i);
  }
  return f;
}

BsdfSample sample_fiber_bsdf(const FiberMaterial& m, const Vec3& d, double h, const Vec3& wo,
                             Rng& rng) {
  BsdfSample s;
  s.wi = sample_uniform_sphere(rng.uniform(), rng.uniform());
  s.pdf = fiber_sample_pdf;
  s.value = eval_fiber_bsdf(m, d, h, s.wi, wo);
  s.event = ScatterEvent::reflect;
  return s;
}

// -----------------------------------------------------------------------------
// TRANSLUCENCY WALK
// -----------------------------------------------------------------------------

WalkResult random_walk(const Scene& scene, int instance_id, const SurfaceMaterial& m,
                       const Hit& entry, const Vec3& direction, Rng& rng) {
  Rgb sigma{1 / m.translucency_mfp.x, 1 / m.translucency_mfp.y, 1 / m.translucency_mfp.z};
  auto sigma_mean = mean(sigma);
  auto eps = scene.epsilon();
  WalkResult result;
  auto pos = offset_origin(entry, direction, eps);
  auto dir = direction;
  HitFilter filter;
  filter.only_instance = instance_id;
  for (int step = 0; step <= max_walk_scatters; ++step) {
    auto hit = scene.intersect(make_ray(pos, dir, 0, inf), filter);
    if (!hit) return result;
    auto t = -std::log(1 - rng.uniform()) / sigma_mean;
    if (t >= hit->t) {
      for (int c = 0; c < 3; ++c)
        result.weight[c] *= std::exp(-(sigma[c] - sigma_mean) * hit->t);
      result.exited = true;
      result.exit = *hit;
      result.exit_direction = dir;
      return result;
    }
    if (step == max_walk_scatters) break;
    for (int c = 0; c < 3; ++c)
      result.weight[c] *= m.albedo[c] * sigma[c] / sigma_mean * std::exp(-(sigma[c] - sigma_mean) * t);
    result.scatter_events++;
    pos += t * dir;
    dir = sample_uniform_sphere(rng.uniform(), rng.uniform());
  }
  result.exited = false;
  return result;
}

}  // namespace rna
