#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rna/math.hpp"

namespace rna {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_min = 0;
  double t_max = inf;
};

// Validates the ray invariants (unit direction, t_min < t_max).
Ray make_ray(const Vec3& origin, const Vec3& direction, double t_min = 0, double t_max = inf);

enum class HitKind : uint8_t { surface, fiber };

struct Hit {
  double t = inf;
  Vec3 position;
  int instance_id = -1;
  int primitive_index = -1;
  HitKind kind = HitKind::surface;
  Vec3 normal;            // surface only, outward facing
  Vec3 tangent;           // fiber only, along the strand
  double h = 0;           // fiber only, in [-1, 1]
  Vec3 geometric_normal;  // outward face normal, or radial direction for fibers
};

// Object-space geometry. Spheres are the unit sphere at the origin; use the
// instance transform to place and scale them.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};
struct UnitSphere {};
struct FiberSet {
  std::vector<std::vector<Vec3>> strands;  // polylines, >= 2 points each
  double radius = 0.01;
};
using Geometry = std::variant<TriangleMesh, UnitSphere, FiberSet>;

struct Instance {
  int id = 0;
  Geometry geometry;
  Affine object_to_world;
  std::string material;
};

// World-space primitive. Triangles use (a, b, c); spheres use center `a`
// and `radius`; fiber segments are open cylinders from `a` to `b`.
struct Primitive {
  enum class Kind : uint8_t { triangle, sphere, fiber };
  Kind kind = Kind::triangle;
  int instance_id = 0;
  int index = 0;  // primitive index within its instance
  Vec3 a, b, c;
  double radius = 0;
};

Bounds3 primitive_bounds(const Primitive& p);

// Ray parameter of the nearest intersection in (t_min, t_max), or nullopt.
std::optional<double> intersect_primitive(const Primitive& p, const Ray& ray);

// Fills every Hit field for a known intersection distance.
Hit make_hit(const Primitive& p, const Ray& ray, double t);

// Restricts which instances a query may report.
struct HitFilter {
  int exclude_instance = -1;
  int only_instance = -1;
  bool accepts(int id) const {
    return id != exclude_instance && (only_instance < 0 || id == only_instance);
  }
};

struct BvhNode {
  Bounds3 bounds;
  int start = 0;  // first child (inner) or first primitive slot (leaf)
  int count = 0;  // > 0 for leaves
};

struct Bvh {
  std::vector<BvhNode> nodes;
  std::vector<int> order;  // primitive indices in leaf order
};

inline constexpr int bvh_max_leaf_size = 4;

// Binned SAH build. Throws ConfigError for an empty primitive list.
Bvh build_bvh(const std::vector<Primitive>& primitives);

std::optional<Hit> intersect_bvh(const Bvh& bvh, const std::vector<Primitive>& primitives,
                                 const Ray& ray, const HitFilter& filter = {});

// Reference O(n) query with the same tie-breaking as the BVH.
std::optional<Hit> intersect_brute_force(const std::vector<Primitive>& primitives,
                                         const Ray& ray, const HitFilter& filter = {});

// Signed offset of the viewing ray from a fiber axis, normalized by radius.
// `view_dir` points from the hit toward the viewer. Positive values lie
// toward cross(axis_dir, projected view_dir).
double fiber_offset(const Vec3& hit_point, const Vec3& axis_point, const Vec3& axis_dir,
                    const Vec3& view_dir, double radius);

// Point on the near side of a fiber cross-section at offset h, for a viewer
// along `view_dir`. Inverse of fiber_offset for points on the cylinder.
Vec3 fiber_point_at_offset(const Vec3& axis_point, const Vec3& axis_dir, const Vec3& view_dir,
                           double radius, double h);

class Scene {
 public:
  Scene() = default;
  // Validates unique ids and invertible transforms, flattens geometry into
  // world space and builds the BVH (skipped for an empty list).
  explicit Scene(std::vector<Instance> instances);

  const std::vector<Instance>& instances() const { return instances_; }
  const Instance& instance(int id) const;
  bool has_instance(int id) const;
  const std::vector<Primitive>& primitives() const { return primitives_; }
  const Bvh& bvh() const { return bvh_; }
  const Bounds3& bounds() const { return bounds_; }
  // Self-intersection offset: 1e-4 of the scene diagonal.
  double epsilon() const { return epsilon_; }
  // Bounds of one instance in world space.
  Bounds3 instance_bounds(int id) const;

  std::optional<Hit> intersect(const Ray& ray, const HitFilter& filter = {}) const;

 private:
  std::vector<Instance> instances_;
  std::vector<int> index_of_id_;
  std::vector<Primitive> primitives_;
  Bvh bvh_;
  Bounds3 bounds_;
  double epsilon_ = 1e-4;
};

// Offsets a hit position so a ray leaving along `direction` does not
// re-intersect the surface it starts on.
Vec3 offset_origin(const Hit& hit, const Vec3& direction, double epsilon);

// Origin for a continuation ray. Directions pointing into a fiber pass
// through its cross-section and leave from the far wall.
Vec3 spawn_origin(const Scene& scene, const Hit& hit, const Vec3& direction);

// Shape helpers used by the bundled scenes and tests.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions);
void append_mesh(TriangleMesh& dst, const TriangleMesh& src);

}  // namespace rna
