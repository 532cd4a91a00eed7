#pragma once

#include "rna/geometry.hpp"
#include "rna/math.hpp"
#include "rna/sampling.hpp"

namespace rna {

// Ground-truth materials baked into neural assets. All evaluation is in
// double precision.
//
// Surface model: a Lambert + normalized modified-Phong reflection mixture
// scaled by (1 - translucency_weight). The remaining translucency_weight of
// the energy enters the object and is transported by a random walk through
// a homogeneous isotropic medium (see random_walk). eval_surface_bsdf only
// covers the reflective part, so directions on opposite sides evaluate to 0.
struct SurfaceMaterial {
  Rgb albedo{0.8};
  double roughness = 1.0;  // (0, 1]; maps to the Phong exponent
  double specular = 0.0;   // [0, 1] mix weight of the glossy lobe
  double translucency_weight = 0.0;
  Rgb translucency_mfp{0.1};  // mean free paths in world units
};

// Fiber model: a longitudinal Gaussian lobe in sin(theta) around the mirror
// inclination times an azimuthal factor max(0, 1 + gain * g(h, phi)) with
//   g_c(h, phi) = cos(phi - (pi - 2 asin h) - phase_c),
// phase = {0, 0.5, 1.0} rad for R, G, B. g has zero mean over phi, so the
// factor only redistributes energy in azimuth; for gain > 1 it is
// renormalized. The model is not reciprocal.
struct FiberMaterial {
  Rgb base_color{0.6};
  double longitudinal_roughness = 0.3;  // (0, 1]
  double azimuthal_gain = 0.0;          // >= 0
};

// Throws ConfigError when a parameter is out of range.
void validate(const SurfaceMaterial& m);
void validate(const FiberMaterial& m);

double phong_exponent(double roughness);

Rgb eval_surface_bsdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wi, const Vec3& wo);
double surface_bsdf_pdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wi, const Vec3& wo);

Rgb eval_fiber_bsdf(const FiberMaterial& m, const Vec3& d, double h, const Vec3& wi,
                    const Vec3& wo);
// |sin(d, wi)|, the projected-area factor for fibers.
double fiber_cosine(const Vec3& d, const Vec3& wi);
inline constexpr double fiber_sample_pdf = uniform_sphere_pdf;

enum class ScatterEvent { reflect, enter_medium, none };

struct BsdfSample {
  Vec3 wi;
  double pdf = 0;
  Rgb value;  // BSDF value; value * cos / pdf is the path weight
  ScatterEvent event = ScatterEvent::none;
};

inline constexpr int max_sample_retries = 8;

BsdfSample sample_surface_bsdf(const SurfaceMaterial& m, const Vec3& n, const Vec3& wo, Rng& rng);
BsdfSample sample_fiber_bsdf(const FiberMaterial& m, const Vec3& d, double h, const Vec3& wo,
                             Rng& rng);

inline constexpr int max_walk_scatters = 8;

struct WalkResult {
  bool exited = false;
  Hit exit;     // valid when exited; geometric_normal points out of the medium
  Vec3 exit_direction;
  Rgb weight{1.0};
  int scatter_events = 0;
};

// Random walk inside the closed geometry of `instance_id`, starting just
// below `entry` and heading along `direction` (into the surface). Free
// flights use the mean extinction of the three channels with per-channel
// weights, so the estimate stays unbiased per channel. The walk is cut after
// max_walk_scatters scattering events.
WalkResult random_walk(const Scene& scene, int instance_id, const SurfaceMaterial& m,
                       const Hit& entry, const Vec3& direction, Rng& rng);

}  // namespace rna
