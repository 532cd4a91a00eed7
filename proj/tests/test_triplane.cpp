#include <gtest/gtest.h>

#include "rna/triplane.hpp"

using namespace rna;

namespace {

const Bounds3 unit_box{{0, 0, 0}, {1, 1, 1}};

}  // namespace

TEST(Triplane, ZeroTablesGiveZeroFeatures) {
  TriplaneGrid<float> g(8, 4, unit_box);
  for (auto v : triplane_query(g, {0.3, 0.7, 0.1})) EXPECT_EQ(v, 0.0f);
}

TEST(Triplane, ConstantPlaneGivesConstantFeature) {
  TriplaneGrid<double> g(8, 2, unit_box);
  for (auto& v : g.plane(0)) v = 1.0;
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    auto z = triplane_query(g, {rng.uniform(), rng.uniform(), rng.uniform()});
    EXPECT_NEAR(z[0], 1.0, 1e-12);
    EXPECT_NEAR(z[1], 1.0, 1e-12);
  }
}

TEST(Triplane, TexelCenterReadsSingleTexel) {
  TriplaneGrid<double> g(4, 3, unit_box);
  auto off = g.texel_offset(0, 1, 2);
  g.data[off + 1] = 5.0;
  // Plane 0 is indexed by (u, v); texel (1, 2) is centered at (1.5/4, 2.5/4).
  auto z = triplane_query(g, {1.5 / 4, 2.5 / 4, 0.9});
  EXPECT_NEAR(z[0], 0, 1e-12);
  EXPECT_NEAR(z[1], 5.0, 1e-12);
  auto taps = triplane_taps(g, {1.5 / 4, 2.5 / 4, 0.9});
  int nonzero = 0;
  for (int k = 0; k < 4; ++k) nonzero += taps[k].weight != 0;
  EXPECT_EQ(nonzero, 1);
}

TEST(Triplane, AllAxesAtTexelCentersSumDirectlyIndexedTexels) {
  Rng rng(6);
  TriplaneGrid<double> g(5, 3, unit_box);
  init_triplane(g, rng, 1.0);
  for (int i = 0; i < 50; ++i) {
    int a = int(rng.uniform() * 5), b = int(rng.uniform() * 5), c = int(rng.uniform() * 5);
    Vec3 x{(a + 0.5) / 5, (b + 0.5) / 5, (c + 0.5) / 5};
    auto z = triplane_query(g, x);
    for (int k = 0; k < 3; ++k) {
      auto expected = g.data[g.texel_offset(0, a, b) + k] + g.data[g.texel_offset(1, b, c) + k] +
                      g.data[g.texel_offset(2, c, a) + k];
      EXPECT_NEAR(z[k], expected, 1e-12);
    }
  }
}

TEST(Triplane, BilinearBetweenTexelCenters) {
  TriplaneGrid<double> g(4, 1, unit_box);
  g.data[g.texel_offset(0, 1, 1)] = 2.0;
  g.data[g.texel_offset(0, 2, 1)] = 6.0;
  for (double f : {0.0, 0.25, 0.5, 0.9}) {
    double u = (1.5 + f) / 4;
    EXPECT_NEAR(triplane_query(g, {u, 1.5 / 4, 0.5})[0], 2.0 + 4.0 * f, 1e-12);
  }
}

TEST(Triplane, CyclicPermutationOfAxesAndPlanes) {
  Rng rng(2);
  TriplaneGrid<double> g(6, 3, unit_box);
  init_triplane(g, rng, 1.0);
  TriplaneGrid<double> r = g;
  for (int p = 0; p < 3; ++p) {
    auto src = g.plane((p + 1) % 3);
    std::copy(src.begin(), src.end(), r.plane(p).begin());
  }
  for (int i = 0; i < 200; ++i) {
    Vec3 x{rng.uniform(), rng.uniform(), rng.uniform()};
    auto a = triplane_query(g, x);
    auto b = triplane_query(r, {x.y, x.z, x.x});
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
  }
}

TEST(Triplane, OutsidePointsClampToBoundary) {
  Rng rng(3);
  TriplaneGrid<double> g(5, 2, unit_box);
  init_triplane(g, rng, 1.0);
  auto a = triplane_query(g, {1.7, -0.2, 0.5});
  auto b = triplane_query(g, {1.0, 0.0, 0.5});
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
}

TEST(Triplane, GradientMatchesTapWeights) {
  Rng rng(4);
  TriplaneGrid<double> g(6, 2, {{-1, -1, -1}, {1, 1, 1}});
  Vec3 x{0.13, -0.41, 0.77};
  std::vector<double> up{1.0, -2.0};
  auto grad = triplane_query_grad<double>(g, x, up);
  std::vector<double> dense(g.data.size(), 0);
  for (auto [i, v] : grad.entries) dense[i] += v;
  init_triplane(g, rng, 1.0);
  auto base = triplane_query(g, x);
  // The query is linear in the texels, so a finite difference is exact.
  for (size_t i = 0; i < g.data.size(); i += 7) {
    g.data[i] += 1.0;
    auto z = triplane_query(g, x);
    g.data[i] -= 1.0;
    EXPECT_NEAR((z[0] - base[0]) * up[0] + (z[1] - base[1]) * up[1], dense[i], 1e-9);
  }
}

TEST(Triplane, ZeroUpstreamGivesEmptyGradient) {
  TriplaneGrid<double> g(4, 2, unit_box);
  std::vector<double> up{0.0, 0.0};
  EXPECT_TRUE(triplane_query_grad<double>(g, {0.5, 0.5, 0.5}, up).entries.empty());
}

TEST(Blur, FootprintOneIsIdentity) {
  Rng rng(5);
  TriplaneGrid<double> g(8, 2, unit_box);
  init_triplane(g, rng, 1.0);
  auto before = g.data;
  blur_grids(g, 1.0);
  EXPECT_EQ(before, g.data);
}

TEST(Blur, PreservesConstantPlanes) {
  TriplaneGrid<double> g(8, 1, unit_box);
  for (auto& v : g.data) v = 3.0;
  blur_grids(g, 4.0);
  for (auto v : g.data) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Blur, InteriorImpulseSpreadsAsKernelAndKeepsMass) {
  TriplaneGrid<double> g(32, 1, unit_box);
  g.data[g.texel_offset(1, 16, 16)] = 1.0;
  blur_grids(g, 4.0);
  auto k = blur_kernel(4.0);
  auto r = int(k.size() / 2);
  double sum = 0;
  for (auto v : g.plane(1)) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  for (int i = -r; i <= r; ++i)
    EXPECT_NEAR(g.data[g.texel_offset(1, 16 + i, 16)], k[r + i] * k[r], 1e-12);
}

TEST(Blur, KernelIsNormalizedGaussian) {
  auto k = blur_kernel(4.0);
  EXPECT_EQ(k.size(), 13u);  // sigma 2, radius ceil(6)
  double sum = 0;
  for (auto v : k) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(k[7] / k[6], std::exp(-0.125), 1e-12);
  EXPECT_THROW(blur_kernel(0.5), ContractViolation);
}
