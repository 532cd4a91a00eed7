#pragma once

#include <cstdint>
#include <random>

#include "rna/math.hpp"

namespace rna {

// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr uint64_t stream_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
  return mix_seed(mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b) ^ c);
}

// Per-stream generator. Streams are derived from (seed, indices) so output
// does not depend on which thread consumes which stream.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  uint64_t next_u64() { return engine_(); }
  double normal() { return std::normal_distribution<double>{}(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline Vec3 sample_uniform_sphere(double u1, double u2) {
  auto z = 1 - 2 * u1;
  auto r = std::sqrt(std::max(0.0, 1 - z * z));
  auto phi = 2 * pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}
inline constexpr double uniform_sphere_pdf = 1 / (4 * pi);

// Upper hemisphere around +z.
inline Vec3 sample_uniform_hemisphere(double u1, double u2) {
  auto z = u1;
  auto r = std::sqrt(std::max(0.0, 1 - z * z));
  auto phi = 2 * pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}
inline constexpr double uniform_hemisphere_pdf = 1 / (2 * pi);

inline Vec3 sample_cosine_hemisphere(double u1, double u2) {
  auto r = std::sqrt(u1);
  auto phi = 2 * pi * u2;
  return {r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1 - u1))};
}
inline double cosine_hemisphere_pdf(double cos_theta) {
  return cos_theta > 0 ? cos_theta * inv_pi : 0.0;
}

}  // namespace rna
