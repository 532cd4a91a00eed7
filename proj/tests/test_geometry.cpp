#include <gtest/gtest.h>

#include "rna/errors.hpp"
#include "rna/geometry.hpp"
#include "rna/sampling.hpp"

using namespace rna;

namespace {

Scene sphere_scene(std::vector<std::pair<Vec3, double>> spheres) {
  std::vector<Instance> inst;
  int id = 0;
  for (auto [c, r] : spheres) {
    Instance i;
    i.id = id++;
    i.geometry = UnitSphere{};
    i.object_to_world = compose(translation(c), scaling(r));
    inst.push_back(i);
  }
  return Scene(inst);
}

Vec3 random_point(Rng& rng, double lo, double hi) {
  return {lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform()};
}

Vec3 random_dir(Rng& rng) { return sample_uniform_sphere(rng.uniform(), rng.uniform()); }

void expect_same(const std::optional<Hit>& a, const std::optional<Hit>& b) {
  ASSERT_EQ(a.has_value(), b.has_value());
  if (!a) return;
  EXPECT_EQ(a->instance_id, b->instance_id);
  EXPECT_EQ(a->primitive_index, b->primitive_index);
  EXPECT_LE(std::abs(a->t - b->t), 1e-9 * std::max(1.0, std::abs(b->t)));
}

}  // namespace

TEST(Intersect, UnitSphereFromBelow) {
  auto scene = sphere_scene({{{0, 0, 0}, 1}});
  auto hit = scene.intersect(make_ray({0, 0, -5}, {0, 0, 1}));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 4, 1e-12);
  EXPECT_NEAR(length(hit->normal - Vec3{0, 0, -1}), 0, 1e-12);
  EXPECT_EQ(hit->kind, HitKind::surface);
}

TEST(Intersect, MissReturnsNone) {
  auto scene = sphere_scene({{{0, 0, 0}, 1}});
  EXPECT_FALSE(scene.intersect(make_ray({5, 5, -5}, {0, 0, 1})));
}

TEST(Intersect, NearerOfTwoSpheres) {
  auto scene = sphere_scene({{{0, 0, 3}, 1}, {{0, 0, 0}, 1}});
  auto hit = scene.intersect(make_ray({0, 0, -5}, {0, 0, 1}));
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->instance_id, 1);
  EXPECT_NEAR(hit->t, 4, 1e-12);
}

TEST(Intersect, RayValidation) {
  EXPECT_THROW(make_ray({0, 0, 0}, {0, 0, 2}), ContractViolation);
  EXPECT_THROW(make_ray({0, 0, 0}, {0, 0, 1}, 2, 1), ContractViolation);
}

TEST(Bvh, EmptyInputIsAnError) {
  EXPECT_THROW(build_bvh({}), ConfigError);
}

TEST(Bvh, EmptySceneHitsNothing) {
  Scene scene(std::vector<Instance>{});
  EXPECT_FALSE(scene.intersect(make_ray({0, 0, 0}, {0, 0, 1})));
}

TEST(Bvh, RandomTrianglesMatchBruteForce) {
  Rng rng(11);
  TriangleMesh mesh;
  for (int i = 0; i < 100; ++i) {
    auto c = random_point(rng, -1, 1);
    int base = int(mesh.vertices.size());
    for (int k = 0; k < 3; ++k) mesh.vertices.push_back(c + 0.3 * random_point(rng, -1, 1));
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  Instance inst;
  inst.geometry = mesh;
  Scene scene(std::vector<Instance>{inst});
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    auto o = random_point(rng, -2, 2);
    auto ray = make_ray(o, normalize(random_point(rng, -1, 1) - o));
    auto a = scene.intersect(ray);
    auto b = intersect_brute_force(scene.primitives(), ray);
    expect_same(a, b);
    hits += a.has_value();
  }
  EXPECT_GT(hits, 100);
}

TEST(Bvh, MixedPrimitivesMatchBruteForceWithFilters) {
  Rng rng(12);
  std::vector<Instance> inst;
  for (int i = 0; i < 30; ++i) {
    Instance s;
    s.id = i;
    s.geometry = UnitSphere{};
    s.object_to_world = compose(translation(random_point(rng, -3, 3)), scaling(0.1 + 0.3 * rng.uniform()));
    inst.push_back(s);
  }
  FiberSet fibers;
  fibers.radius = 0.05;
  for (int s = 0; s < 20; ++s) {
    std::vector<Vec3> pts{random_point(rng, -3, 3)};
    for (int k = 0; k < 5; ++k) pts.push_back(pts.back() + 0.4 * random_dir(rng));
    fibers.strands.push_back(pts);
  }
  Instance f;
  f.id = 100;
  f.geometry = fibers;
  inst.push_back(f);
  Instance box;
  box.id = 101;
  box.geometry = make_box({-1, -1, -1}, {1, 0.5, 0.2});
  inst.push_back(box);
  Scene scene(inst);
  for (int i = 0; i < 3000; ++i) {
    auto ray = make_ray(random_point(rng, -4, 4), random_dir(rng), 0, 1 + 6 * rng.uniform());
    expect_same(scene.intersect(ray), intersect_brute_force(scene.primitives(), ray));
    HitFilter ex;
    ex.exclude_instance = 100;
    expect_same(scene.intersect(ray, ex), intersect_brute_force(scene.primitives(), ray, ex));
    HitFilter only;
    only.only_instance = 101;
    expect_same(scene.intersect(ray, only), intersect_brute_force(scene.primitives(), ray, only));
  }
}

TEST(Bvh, EqualDistanceTiesPickLowestIds) {
  // Two coincident triangles in two instances.
  TriangleMesh m;
  m.vertices = {{-1, -1, 0}, {1, -1, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}, {0, 1, 2}};
  Instance a, b;
  a.id = 7;
  a.geometry = m;
  b.id = 3;
  b.geometry = m;
  Scene scene(std::vector<Instance>{a, b});
  auto hit = scene.intersect(make_ray({0, 0, 1}, {0, 0, -1}));
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->instance_id, 3);
  EXPECT_EQ(hit->primitive_index, 0);
}

TEST(FiberOffset, CenteredRayIsZero) {
  EXPECT_NEAR(fiber_offset({0, 0, -0.1}, {0, 0, 0}, {0, 1, 0}, {0, 0, -1}, 0.1), 0, 1e-12);
}

TEST(FiberOffset, SilhouetteIsPlusMinusOne) {
  EXPECT_NEAR(std::abs(fiber_offset({0.1, 0, 0}, {0, 0, 0}, {0, 1, 0}, {0, 0, -1}, 0.1)), 1, 1e-4);
}

TEST(FiberOffset, HalfRadiusOffsetThroughIntersection) {
  // Axis +y, radius 0.1, ray along +z displaced by -0.05 in x. The side
  // direction is cross(+y, view = -z) = -x, so the offset is +0.5.
  FiberSet f;
  f.radius = 0.1;
  f.strands = {{{0, -1, 0}, {0, 1, 0}}};
  Instance inst;
  inst.geometry = f;
  Scene scene(std::vector<Instance>{inst});
  auto hit = scene.intersect(make_ray({-0.05, 0, -5}, {0, 0, 1}));
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->kind, HitKind::fiber);
  EXPECT_NEAR(hit->h, 0.5, 1e-9);
  auto mirrored = scene.intersect(make_ray({0.05, 0, -5}, {0, 0, 1}));
  ASSERT_TRUE(mirrored);
  EXPECT_NEAR(mirrored->h, -0.5, 1e-9);
  EXPECT_NEAR(length(hit->tangent), 1, 1e-12);
}

TEST(FiberOffset, OddUnderMirroring) {
  Rng rng(5);
  FiberSet f;
  f.radius = 0.2;
  f.strands = {{{0, 0, -2}, {0, 0, 2}}};
  Instance inst;
  inst.geometry = f;
  Scene scene(std::vector<Instance>{inst});
  for (int i = 0; i < 500; ++i) {
    auto o = Vec3{3, 0.4 * (2 * rng.uniform() - 1), 0.5 * (2 * rng.uniform() - 1)};
    auto d = normalize(Vec3{-1, 0.05 * (2 * rng.uniform() - 1), 0.3 * (2 * rng.uniform() - 1)});
    // Mirror across the plane y = 0 that contains the axis.
    auto hit = scene.intersect(make_ray(o, d));
    auto mir = scene.intersect(make_ray({o.x, -o.y, o.z}, normalize(Vec3{d.x, -d.y, d.z})));
    ASSERT_EQ(hit.has_value(), mir.has_value());
    if (hit) {
      EXPECT_NEAR(hit->h, -mir->h, 1e-9);
    }
  }
}

TEST(FiberOffset, ParallelViewIsDegenerate) {
  EXPECT_THROW(fiber_offset({0.1, 0, 0}, {0, 0, 0}, {0, 1, 0}, {0, 1, 0}, 0.1), DegenerateFrameError);
}

TEST(FiberOffset, PointAtOffsetInvertsOffset) {
  Vec3 d = normalize(Vec3{0.2, 1, 0.1});
  Vec3 view = normalize(Vec3{0.3, -0.2, -1});
  for (double h = -0.95; h <= 0.95; h += 0.1) {
    auto p = fiber_point_at_offset({1, 2, 3}, d, view, 0.05, h);
    EXPECT_NEAR(fiber_offset(p, {1, 2, 3}, d, view, 0.05), h, 1e-9);
  }
}

TEST(Hit, DirectionsAreUnitAndShootingOffDoesNotRehit) {
  Rng rng(9);
  std::vector<Instance> inst(3);
  inst[0].id = 0;
  inst[0].geometry = make_icosphere({0, 0, 0}, 1, 2);
  inst[1].id = 1;
  inst[1].geometry = UnitSphere{};
  inst[1].object_to_world = compose(translation({2.5, 0, 0}), scaling(0.7));
  FiberSet f;
  f.radius = 0.05;
  f.strands = {{{-2, -2, -1}, {-2, -1, 0}, {-1.5, 0, 1}}};
  inst[2].id = 2;
  inst[2].geometry = f;
  Scene scene(inst);
  auto eps = scene.epsilon();
  int hits = 0;
  for (int i = 0; i < 5000; ++i) {
    auto o = random_point(rng, -4, 4);
    auto ray = make_ray(o, normalize(random_point(rng, -2, 2) - o));
    auto hit = scene.intersect(ray);
    if (!hit) continue;
    ++hits;
    EXPECT_NEAR(length(hit->geometric_normal), 1, 1e-6);
    if (hit->kind == HitKind::surface) {
      EXPECT_NEAR(length(hit->normal), 1, 1e-6);
    } else {
      EXPECT_NEAR(length(hit->tangent), 1, 1e-6);
      EXPECT_LE(std::abs(hit->h), 1.0);
    }
    auto dir = random_dir(rng);
    auto again = scene.intersect(make_ray(offset_origin(*hit, dir, eps), dir));
    if (again && again->instance_id == hit->instance_id && again->primitive_index == hit->primitive_index) {
      EXPECT_GE(again->t, eps);
    }
  }
  EXPECT_GT(hits, 500);
}

TEST(Scene, RejectsDuplicateIdsAndSingularTransforms) {
  Instance a, b;
  a.geometry = b.geometry = UnitSphere{};
  EXPECT_THROW(Scene(std::vector<Instance>{a, b}), ConfigError);
  b.id = 1;
  b.object_to_world = scaling(0);
  EXPECT_THROW(Scene(std::vector<Instance>{a, b}), ConfigError);
}

TEST(Shapes, MeshesWindOutward) {
  for (const auto& mesh : {make_box({-1, -2, -3}, {1, 2, 3}), make_icosphere({0.5, 0, 0}, 1.5, 2)}) {
    Vec3 c;
    for (const auto& v : mesh.vertices) c += v;
    c = c / double(mesh.vertices.size());
    for (const auto& t : mesh.triangles) {
      const auto &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &d = mesh.vertices[t[2]];
      auto n = cross(b - a, d - a);
      EXPECT_GT(dot(n, (a + b + d) / 3.0 - c), 0);
    }
  }
}

TEST(SpawnOrigin, InwardFiberDirectionLeavesFromFarWall) {
  FiberSet f;
  f.radius = 0.1;
  f.strands = {{{0, -1, 0}, {0, 1, 0}}};
  Instance inst;
  inst.geometry = f;
  Scene scene(std::vector<Instance>{inst});
  auto hit = scene.intersect(make_ray({0, 0, -5}, {0, 0, 1}));
  ASSERT_TRUE(hit);
  auto o = spawn_origin(scene, *hit, {0, 0, 1});
  EXPECT_GT(o.z, 0.1);
  EXPECT_FALSE(scene.intersect(make_ray(o, {0, 0, 1})));
}
