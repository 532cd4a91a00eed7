#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rna/errors.hpp"
#include "rna/math.hpp"
#include "rna/sampling.hpp"

namespace rna {

// Three axis-aligned feature tables (XY, YZ, ZX), each R x R texels with C
// channels. A query bilinearly samples each plane at the projection of the
// normalized position and sums the three results.
//
// Storage: plane p, texel (a, b), channel c lives at
//   ((p * R + b) * R + a) * C + c
// where plane 0 is indexed by (u, v), plane 1 by (v, w), plane 2 by (w, u)
// and (u, v, w) is the position normalized to [0, 1]^3 by `bounds`.
template <typename Scalar>
struct TriplaneGrid {
  int resolution = 64;
  int channels = 8;
  Bounds3 bounds{{0, 0, 0}, {1, 1, 1}};
  std::vector<Scalar> data;

  TriplaneGrid() = default;
  TriplaneGrid(int resolution_, int channels_, const Bounds3& bounds_)
      : resolution(resolution_), channels(channels_), bounds(bounds_),
        data(size_t(3) * resolution_ * resolution_ * channels_, Scalar(0)) {
    require(resolution_ >= 2 && channels_ >= 1, "triplane needs R >= 2 and C >= 1");
  }

  size_t plane_stride() const { return size_t(resolution) * resolution * channels; }
  size_t texel_offset(int plane, int a, int b) const {
    return ((size_t(plane) * resolution + b) * resolution + a) * channels;
  }
  std::span<Scalar> plane(int p) { return {data.data() + p * plane_stride(), plane_stride()}; }
  std::span<const Scalar> plane(int p) const {
    return {data.data() + p * plane_stride(), plane_stride()};
  }

  template <typename Other>
  TriplaneGrid<Other> cast() const {
    TriplaneGrid<Other> g;
    g.resolution = resolution;
    g.channels = channels;
    g.bounds = bounds;
    g.data.assign(data.begin(), data.end());
    return g;
  }
};

// One bilinear tap: offset of the texel's first channel and its weight.
template <typename Scalar>
struct TexelTap {
  uint32_t offset = 0;
  Scalar weight = 0;
};

template <typename Scalar>
using TriplaneTaps = std::array<TexelTap<Scalar>, 12>;

// Normalized coordinate of x inside the grid bounds (not clamped).
template <typename Scalar>
Vec3 triplane_coordinates(const TriplaneGrid<Scalar>& grid, const Vec3& x) {
  auto e = grid.bounds.extent();
  return {(x.x - grid.bounds.min.x) / e.x, (x.y - grid.bounds.min.y) / e.y,
          (x.z - grid.bounds.min.z) / e.z};
}

// The 12 taps (4 per plane) for position x. Positions outside the bounds
// clamp to the boundary texels.
template <typename Scalar>
TriplaneTaps<Scalar> triplane_taps(const TriplaneGrid<Scalar>& grid, const Vec3& x) {
  auto uvw = triplane_coordinates(grid, x);
  auto res = grid.resolution;
  auto axis_tap = [res](double u, int& i0, double& f) {
    auto p = std::clamp(u * res - 0.5, 0.0, double(res - 1));
    i0 = std::min(static_cast<int>(std::floor(p)), res - 2);
    f = p - i0;
  };
  static constexpr std::array<std::pair<int, int>, 3> axes = {{{0, 1}, {1, 2}, {2, 0}}};
  TriplaneTaps<Scalar> taps;
  for (int p = 0; p < 3; ++p) {
    int a0, b0;
    double fa, fb;
    axis_tap(uvw[axes[p].first], a0, fa);
    axis_tap(uvw[axes[p].second], b0, fb);
    auto* t = &taps[p * 4];
    t[0] = {uint32_t(grid.texel_offset(p, a0, b0)), Scalar((1 - fa) * (1 - fb))};
    t[1] = {uint32_t(grid.texel_offset(p, a0 + 1, b0)), Scalar(fa * (1 - fb))};
    t[2] = {uint32_t(grid.texel_offset(p, a0, b0 + 1)), Scalar((1 - fa) * fb)};
    t[3] = {uint32_t(grid.texel_offset(p, a0 + 1, b0 + 1)), Scalar(fa * fb)};
  }
  return taps;
}

template <typename Scalar>
void triplane_gather(const TriplaneGrid<Scalar>& grid, const TriplaneTaps<Scalar>& taps,
                     Scalar* out) {
  auto c = grid.channels;
  for (int k = 0; k < c; ++k) out[k] = 0;
  for (const auto& tap : taps) {
    const auto* texel = grid.data.data() + tap.offset;
    for (int k = 0; k < c; ++k) out[k] += tap.weight * texel[k];
  }
}

// zeta(x): the summed bilinear lookups of the three planes.
template <typename Scalar>
std::vector<Scalar> triplane_query(const TriplaneGrid<Scalar>& grid, const Vec3& x) {
  std::vector<Scalar> out(grid.channels);
  triplane_gather(grid, triplane_taps(grid, x), out.data());
  return out;
}

// Accumulates upstream (length C) into `grad` (same layout as grid.data).
template <typename Scalar>
void triplane_scatter(const TriplaneGrid<Scalar>& grid, const TriplaneTaps<Scalar>& taps,
                      const Scalar* upstream, Scalar* grad) {
  auto c = grid.channels;
  for (const auto& tap : taps) {
    if (tap.weight == 0) continue;
    auto* g = grad + tap.offset;
    for (int k = 0; k < c; ++k) g[k] += tap.weight * upstream[k];
  }
}

template <typename Scalar>
struct SparseGradient {
  std::vector<std::pair<size_t, Scalar>> entries;  // (index into grid.data, value)
};

// Gradient of dot(upstream, zeta(x)) with respect to the texels; only
// entries with non-zero weight and non-zero upstream are reported.
template <typename Scalar>
SparseGradient<Scalar> triplane_query_grad(const TriplaneGrid<Scalar>& grid, const Vec3& x,
                                           std::span<const Scalar> upstream) {
  require(upstream.size() == size_t(grid.channels), "upstream size must equal channel count");
  SparseGradient<Scalar> g;
  for (const auto& tap : triplane_taps(grid, x)) {
    if (tap.weight == 0) continue;
    for (int k = 0; k < grid.channels; ++k)
      if (upstream[k] != 0) g.entries.emplace_back(tap.offset + k, tap.weight * upstream[k]);
  }
  return g;
}

// Normalized Gaussian taps for a blur footprint in texels: sigma = footprint
// / 2, truncated at 3 sigma. Footprint 1 is the identity.
inline std::vector<double> blur_kernel(double footprint) {
  require(footprint >= 1, "blur footprint must be >= 1");
  if (footprint == 1) return {1.0};
  auto sigma = footprint / 2;
  auto radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable blur of every plane, clamping at the plane edges.
template <typename Scalar>
void blur_grids(TriplaneGrid<Scalar>& grid, double footprint) {
  auto kernel = blur_kernel(footprint);
  if (kernel.size() == 1) return;
  auto radius = static_cast<int>(kernel.size() / 2);
  auto res = grid.resolution, ch = grid.channels;
  std::vector<Scalar> tmp(grid.plane_stride());
  for (int p = 0; p < 3; ++p) {
    auto plane = grid.plane(p);
    auto at = [&](std::span<Scalar> s, int a, int b) { return s.data() + (size_t(b) * res + a) * ch; };
    std::span<Scalar> tmp_span(tmp);
    for (int b = 0; b < res; ++b)
      for (int a = 0; a < res; ++a) {
        auto* dst = at(tmp_span, a, b);
        for (int c = 0; c < ch; ++c) dst[c] = 0;
        for (int i = -radius; i <= radius; ++i) {
          const auto* src = at(plane, std::clamp(a + i, 0, res - 1), b);
          auto w = Scalar(kernel[i + radius]);
          for (int c = 0; c < ch; ++c) dst[c] += w * src[c];
        }
      }
    for (int b = 0; b < res; ++b)
      for (int a = 0; a < res; ++a) {
        auto* dst = at(plane, a, b);
        for (int c = 0; c < ch; ++c) dst[c] = 0;
        for (int i = -radius; i <= radius; ++i) {
          const auto* src = at(tmp_span, a, std::clamp(b + i, 0, res - 1));
          auto w = Scalar(kernel[i + radius]);
          for (int c = 0; c < ch; ++c) dst[c] += w * src[c];
        }
      }
  }
}

// Texels ~ N(0, stddev^2).
template <typename Scalar>
void init_triplane(TriplaneGrid<Scalar>& grid, Rng& rng, double stddev = 0.01) {
  for (auto& v : grid.data) v = Scalar(stddev * rng.normal());
}

}  // namespace rna
