#pragma once

#include <optional>

#include "rna/math.hpp"
#include "rna/sampling.hpp"
#include "rna/scene_desc.hpp"

namespace rna {

// A sampled direction toward a light. `weight` is the incident radiance
// divided by the solid-angle pdf for area and environment lights, and the
// irradiance at the shading point for delta lights.
struct LightSample {
  Vec3 wi;
  double distance = inf;
  Rgb weight;
  double pdf = 0;  // solid angle; 0 for delta lights
  bool is_delta = false;
};

bool is_delta(const Light& light);

LightSample sample_light(const Light& light, const Vec3& x, Rng& rng);

// Solid-angle pdf with which sample_light would produce `wi` from x.
double light_pdf(const Light& light, const Vec3& x, const Vec3& wi);

// Distance along the ray to the emitting side of a rectangle light.
std::optional<double> intersect_rect(const RectLight& light, const Ray& ray);

Rgb environment_radiance(const EnvironmentLight& env, const Vec3& dir);

// Lat-long mapping, z up: u in [0, 1) follows phi, v in [0, 1] follows theta.
Vec3 environment_direction(double u, double v);
void environment_uv(const Vec3& dir, double& u, double& v);

// Probability that environment sampling picks texel (x, y).
double environment_texel_probability(const EnvironmentLight& env, int x, int y);

// Balance heuristic pdf_a / (pdf_a + pdf_b). Both zero is a contract violation.
double mis_weight(double pdf_a, double pdf_b);

}  // namespace rna
