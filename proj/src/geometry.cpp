#include "rna/geometry.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "rna/errors.hpp"

namespace rna {

Ray make_ray(const Vec3& origin, const Vec3& direction, double t_min, double t_max) {
  require(std::abs(length(direction) - 1) <= 1e-6, "ray direction must be unit length");
  require(t_min >= 0 && t_min < t_max, "ray requires 0 <= t_min < t_max");
  return {origin, direction, t_min, t_max};
}

Bounds3 primitive_bounds(const Primitive& p) {
  Bounds3 b;
  switch (p.kind) {
    case Primitive::Kind::triangle:
      b.expand(p.a);
      b.expand(p.b);
      b.expand(p.c);
      break;
    case Primitive::Kind::sphere:
      b.expand(p.a - Vec3(p.radius));
      b.expand(p.a + Vec3(p.radius));
      break;
    case Primitive::Kind::fiber:
      b.expand(p.a - Vec3(p.radius));
      b.expand(p.a + Vec3(p.radius));
      b.expand(p.b - Vec3(p.radius));
      b.expand(p.b + Vec3(p.radius));
      break;
  }
  return b;
}

namespace {

std::optional<double> intersect_triangle(const Primitive& p, const Ray& ray) {
  auto e1 = p.b - p.a;
  auto e2 = p.c - p.a;
  auto pv = cross(ray.direction, e2);
  auto det = dot(e1, pv);
  if (det == 0) return std::nullopt;
  auto inv_det = 1 / det;
  auto tv = ray.origin - p.a;
  auto u = dot(tv, pv) * inv_det;
  if (u < 0 || u > 1) return std::nullopt;
  auto qv = cross(tv, e1);
  auto v = dot(ray.direction, qv) * inv_det;
  if (v < 0 || u + v > 1) return std::nullopt;
  auto t = dot(e2, qv) * inv_det;
  if (t <= ray.t_min || t >= ray.t_max) return std::nullopt;
  return t;
}

// Roots of a*t^2 + b*t + c in ascending order.
bool solve_quadratic(double a, double b, double c, double& t0, double& t1) {
  auto disc = b * b - 4 * a * c;
  if (disc < 0) return false;
  auto root = std::sqrt(disc);
  auto q = b < 0 ? -0.5 * (b - root) : -0.5 * (b + root);
  t0 = q / a;
  t1 = q != 0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  return true;
}

std::optional<double> intersect_sphere(const Primitive& p, const Ray& ray) {
  auto oc = ray.origin - p.a;
  double t0, t1;
  if (!solve_quadratic(dot(ray.direction, ray.direction), 2 * dot(oc, ray.direction),
                       dot(oc, oc) - p.radius * p.radius, t0, t1))
    return std::nullopt;
  if (t0 > ray.t_min && t0 < ray.t_max) return t0;
  if (t1 > ray.t_min && t1 < ray.t_max) return t1;
  return std::nullopt;
}

std::optional<double> intersect_fiber(const Primitive& p, const Ray& ray) {
  auto axis = p.b - p.a;
  auto len = length(axis);
  if (len == 0) return std::nullopt;
  auto d = axis / len;
  auto o = ray.origin - p.a;
  auto oc = o - dot(o, d) * d;
  auto dc = ray.direction - dot(ray.direction, d) * d;
  auto a = dot(dc, dc);
  if (a < 1e-14) return std::nullopt;
  double t0, t1;
  if (!solve_quadratic(a, 2 * dot(oc, dc), dot(oc, oc) - p.radius * p.radius, t0, t1))
    return std::nullopt;
  for (auto t : {t0, t1}) {
    if (t <= ray.t_min || t >= ray.t_max) continue;
    auto s = dot(o + t * ray.direction, d);
    if (s >= 0 && s <= len) return t;
  }
  return std::nullopt;
}

bool closer(double t, int inst, int prim, const Hit& best) {
  if (t != best.t) return t < best.t;
  return std::tie(inst, prim) < std::tie(best.instance_id, best.primitive_index);
}

}  // namespace

std::optional<double> intersect_primitive(const Primitive& p, const Ray& ray) {
  switch (p.kind) {
    case Primitive::Kind::triangle: return intersect_triangle(p, ray);
    case Primitive::Kind::sphere: return intersect_sphere(p, ray);
    case Primitive::Kind::fiber: return intersect_fiber(p, ray);
  }
  return std::nullopt;
}

double fiber_offset(const Vec3& hit_point, const Vec3& axis_point, const Vec3& axis_dir,
                    const Vec3& view_dir, double radius) {
  require(radius > 0, "fiber radius must be positive");
  auto w = view_dir - dot(view_dir, axis_dir) * axis_dir;
  auto wl = length(w);
  if (wl < 1e-8) throw DegenerateFrameError("view direction parallel to fiber axis");
  auto side = cross(axis_dir, w / wl);
  auto rel = hit_point - axis_point;
  rel -= dot(rel, axis_dir) * axis_dir;
  return std::clamp(dot(rel, side) / radius, -1.0, 1.0);
}

Vec3 fiber_point_at_offset(const Vec3& axis_point, const Vec3& axis_dir, const Vec3& view_dir,
                           double radius, double h) {
  auto w = view_dir - dot(view_dir, axis_dir) * axis_dir;
  auto wl = length(w);
  if (wl < 1e-8) throw DegenerateFrameError("view direction parallel to fiber axis");
  w /= wl;
  auto side = cross(axis_dir, w);
  h = std::clamp(h, -1.0, 1.0);
  return axis_point + radius * (h * side + std::sqrt(std::max(0.0, 1 - h * h)) * w);
}

Hit make_hit(const Primitive& p, const Ray& ray, double t) {
  Hit hit;
  hit.t = t;
  hit.position = ray.origin + t * ray.direction;
  hit.instance_id = p.instance_id;
  hit.primitive_index = p.index;
  switch (p.kind) {
    case Primitive::Kind::triangle: {
      hit.kind = HitKind::surface;
      hit.geometric_normal = normalize(cross(p.b - p.a, p.c - p.a));
      hit.normal = hit.geometric_normal;
      break;
    }
    case Primitive::Kind::sphere: {
      hit.kind = HitKind::surface;
      hit.geometric_normal = normalize(hit.position - p.a);
      hit.normal = hit.geometric_normal;
      break;
    }
    case Primitive::Kind::fiber: {
      hit.kind = HitKind::fiber;
      auto d = normalize(p.b - p.a);
      auto axis_point = p.a + dot(hit.position - p.a, d) * d;
      hit.tangent = d;
      hit.geometric_normal = normalize(hit.position - axis_point);
      auto view = -ray.direction;
      auto w = view - dot(view, d) * d;
      hit.h = length(w) < 1e-8 ? 0.0 : fiber_offset(hit.position, axis_point, d, view, p.radius);
      break;
    }
  }
  return hit;
}

// -----------------------------------------------------------------------------
// BVH
// -----------------------------------------------------------------------------

namespace {

constexpr int sah_bins = 16;

struct BuildContext {
  const std::vector<Primitive>& primitives;
  std::vector<Bounds3> bounds;
  std::vector<Vec3> centroids;
  Bvh& bvh;
};

void build_node(BuildContext& ctx, int node_index, int begin, int end) {
  auto& order = ctx.bvh.order;
  Bounds3 node_bounds, centroid_bounds;
  for (int i = begin; i < end; ++i) {
    node_bounds.expand(ctx.bounds[order[i]]);
    centroid_bounds.expand(ctx.centroids[order[i]]);
  }
  ctx.bvh.nodes[node_index].bounds = node_bounds;
  auto count = end - begin;
  auto make_leaf = [&] {
    ctx.bvh.nodes[node_index].start = begin;
    ctx.bvh.nodes[node_index].count = count;
  };
  if (count <= 1) return make_leaf();

  // Evaluate SAH over binned centroids on every axis.
  auto best_cost = inf;
  int best_axis = -1, best_split = -1;
  auto extent = centroid_bounds.extent();
  for (int axis = 0; axis < 3; ++axis) {
    if (extent[axis] <= 0) continue;
    std::array<Bounds3, sah_bins> bin_bounds;
    std::array<int, sah_bins> bin_count{};
    auto scale = sah_bins / extent[axis];
    for (int i = begin; i < end; ++i) {
      auto b = std::min(sah_bins - 1,
                        static_cast<int>((ctx.centroids[order[i]][axis] - centroid_bounds.min[axis]) * scale));
      bin_count[b]++;
      bin_bounds[b].expand(ctx.bounds[order[i]]);
    }
    std::array<double, sah_bins> right_area{};
    std::array<int, sah_bins> right_count{};
    Bounds3 acc;
    int n = 0;
    for (int b = sah_bins - 1; b > 0; --b) {
      acc.expand(bin_bounds[b]);
      n += bin_count[b];
      right_area[b] = acc.surface_area();
      right_count[b] = n;
    }
    acc = Bounds3{};
    n = 0;
    for (int b = 0; b < sah_bins - 1; ++b) {
      acc.expand(bin_bounds[b]);
      n += bin_count[b];
      if (n == 0 || right_count[b + 1] == 0) continue;
      auto cost = n * acc.surface_area() + right_count[b + 1] * right_area[b + 1];
      if (cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = b;
      }
    }
  }

  auto leaf_cost = count * node_bounds.surface_area();
  if (count <= bvh_max_leaf_size && (best_axis < 0 || best_cost >= leaf_cost)) return make_leaf();

  int mid;
  if (best_axis >= 0) {
    auto scale = sah_bins / extent[best_axis];
    auto lo = centroid_bounds.min[best_axis];
    auto it = std::partition(order.begin() + begin, order.begin() + end, [&](int p) {
      auto b = std::min(sah_bins - 1, static_cast<int>((ctx.centroids[p][best_axis] - lo) * scale));
      return b <= best_split;
    });
    mid = static_cast<int>(it - order.begin());
  } else {
    // All centroids coincide: split by index.
    mid = begin + count / 2;
  }
  if (mid == begin || mid == end) mid = begin + count / 2;

  auto first_child = static_cast<int>(ctx.bvh.nodes.size());
  ctx.bvh.nodes.emplace_back();
  ctx.bvh.nodes.emplace_back();
  ctx.bvh.nodes[node_index].start = first_child;
  ctx.bvh.nodes[node_index].count = 0;
  build_node(ctx, first_child, begin, mid);
  build_node(ctx, first_child + 1, mid, end);
}

bool ray_box(const Bounds3& b, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max,
             double& t_entry) {
  for (int axis = 0; axis < 3; ++axis) {
    auto t0 = (b.min[axis] - origin[axis]) * inv_dir[axis];
    auto t1 = (b.max[axis] - origin[axis]) * inv_dir[axis];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf keeps the current interval.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max) return false;
  }
  t_entry = t_min;
  return true;
}

}  // namespace

Bvh build_bvh(const std::vector<Primitive>& primitives) {
  if (primitives.empty()) throw ConfigError("cannot build a BVH over zero primitives");
  Bvh bvh;
  bvh.order.resize(primitives.size());
  std::iota(bvh.order.begin(), bvh.order.end(), 0);
  BuildContext ctx{primitives, {}, {}, bvh};
  ctx.bounds.reserve(primitives.size());
  ctx.centroids.reserve(primitives.size());
  for (const auto& p : primitives) {
    ctx.bounds.push_back(primitive_bounds(p));
    ctx.centroids.push_back(ctx.bounds.back().center());
  }
  bvh.nodes.reserve(2 * primitives.size());
  bvh.nodes.emplace_back();
  build_node(ctx, 0, 0, static_cast<int>(primitives.size()));
  return bvh;
}

std::optional<Hit> intersect_bvh(const Bvh& bvh, const std::vector<Primitive>& primitives,
                                 const Ray& ray, const HitFilter& filter) {
  if (bvh.nodes.empty()) return std::nullopt;
  Vec3 inv_dir{1 / ray.direction.x, 1 / ray.direction.y, 1 / ray.direction.z};
  Hit best;
  const Primitive* best_prim = nullptr;
  auto t_max = ray.t_max;

  std::array<int, 128> stack;
  int top = 0;
  double t_entry;
  if (!ray_box(bvh.nodes[0].bounds, ray.origin, inv_dir, ray.t_min, t_max, t_entry))
    return std::nullopt;
  stack[top++] = 0;
  while (top > 0) {
    const auto& node = bvh.nodes[stack[--top]];
    // Boxes touching the current best distance may still hold an equal-t
    // primitive with a lower id, so only strictly farther boxes are culled.
    if (!ray_box(node.bounds, ray.origin, inv_dir, ray.t_min, best_prim ? best.t : t_max, t_entry))
      continue;
    if (node.count > 0) {
      for (int i = node.start; i < node.start + node.count; ++i) {
        const auto& p = primitives[bvh.order[i]];
        if (!filter.accepts(p.instance_id)) continue;
        auto t = intersect_primitive(p, ray);
        if (t && (!best_prim || closer(*t, p.instance_id, p.index, best))) {
          best.t = *t;
          best.instance_id = p.instance_id;
          best.primitive_index = p.index;
          best_prim = &p;
        }
      }
    } else {
      double t_left = inf, t_right = inf;
      auto hit_left = ray_box(bvh.nodes[node.start].bounds, ray.origin, inv_dir, ray.t_min,
                              best_prim ? best.t : t_max, t_left);
      auto hit_right = ray_box(bvh.nodes[node.start + 1].bounds, ray.origin, inv_dir, ray.t_min,
                               best_prim ? best.t : t_max, t_right);
      if (hit_left && hit_right) {
        if (t_left <= t_right) {
          stack[top++] = node.start + 1;
          stack[top++] = node.start;
        } else {
          stack[top++] = node.start;
          stack[top++] = node.start + 1;
        }
      } else if (hit_left) {
        stack[top++] = node.start;
      } else if (hit_right) {
        stack[top++] = node.start + 1;
      }
    }
  }
  if (!best_prim) return std::nullopt;
  return make_hit(*best_prim, ray, best.t);
}

std::optional<Hit> intersect_brute_force(const std::vector<Primitive>& primitives, const Ray& ray,
                                         const HitFilter& filter) {
  Hit best;
  const Primitive* best_prim = nullptr;
  for (const auto& p : primitives) {
    if (!filter.accepts(p.instance_id)) continue;
    auto t = intersect_primitive(p, ray);
    if (t && (!best_prim || closer(*t, p.instance_id, p.index, best))) {
      best.t = *t;
      best.instance_id = p.instance_id;
      best.primitive_index = p.index;
      best_prim = &p;
    }
  }
  if (!best_prim) return std::nullopt;
  return make_hit(*best_prim, ray, best.t);
}

// -----------------------------------------------------------------------------
// SCENE
// -----------------------------------------------------------------------------

namespace {

// Uniform scale of a similarity transform, or a ConfigError.
double similarity_scale(const Affine& xf, const char* what) {
  auto cx = xf.apply_linear({1, 0, 0});
  auto cy = xf.apply_linear({0, 1, 0});
  auto cz = xf.apply_linear({0, 0, 1});
  auto s = length(cx);
  auto tol = 1e-9 * std::max(1.0, s);
  if (std::abs(length(cy) - s) > tol || std::abs(length(cz) - s) > tol ||
      std::abs(dot(cx, cy)) > tol * s || std::abs(dot(cy, cz)) > tol * s ||
      std::abs(dot(cz, cx)) > tol * s)
    throw ConfigError(std::string(what) + " instances require a similarity transform");
  return s;
}

}  // namespace

Scene::Scene(std::vector<Instance> instances) : instances_(std::move(instances)) {
  int max_id = -1;
  for (const auto& inst : instances_) {
    if (inst.id < 0 || inst.id >= (1 << 24)) throw ConfigError("instance ids must be in [0, 2^24)");
    max_id = std::max(max_id, inst.id);
  }
  index_of_id_.assign(max_id + 1, -1);
  for (size_t i = 0; i < instances_.size(); ++i) {
    auto& slot = index_of_id_[instances_[i].id];
    if (slot >= 0) throw ConfigError("duplicate instance id " + std::to_string(instances_[i].id));
    slot = static_cast<int>(i);
  }

  for (const auto& inst : instances_) {
    const auto& xf = inst.object_to_world;
    if (std::abs(xf.determinant()) < 1e-12)
      throw ConfigError("instance " + std::to_string(inst.id) + " has a singular transform");
    if (const auto* mesh = std::get_if<TriangleMesh>(&inst.geometry)) {
      int index = 0;
      for (const auto& tri : mesh->triangles) {
        for (auto v : tri)
          if (v < 0 || v >= static_cast<int>(mesh->vertices.size()))
            throw ConfigError("triangle index out of range");
        Primitive p;
        p.kind = Primitive::Kind::triangle;
        p.instance_id = inst.id;
        p.index = index++;
        p.a = xf.apply_point(mesh->vertices[tri[0]]);
        p.b = xf.apply_point(mesh->vertices[tri[1]]);
        p.c = xf.apply_point(mesh->vertices[tri[2]]);
        primitives_.push_back(p);
      }
    } else if (std::holds_alternative<UnitSphere>(inst.geometry)) {
      Primitive p;
      p.kind = Primitive::Kind::sphere;
      p.instance_id = inst.id;
      p.a = xf.translation;
      p.radius = similarity_scale(xf, "sphere");
      primitives_.push_back(p);
    } else {
      const auto& fibers = std::get<FiberSet>(inst.geometry);
      if (!(fibers.radius > 0)) throw ConfigError("fiber_radius must be positive");
      auto scale = similarity_scale(xf, "fiber");
      int index = 0;
      for (const auto& strand : fibers.strands) {
        if (strand.size() < 2) throw ConfigError("fiber strands need at least two points");
        for (size_t k = 0; k + 1 < strand.size(); ++k) {
          Primitive p;
          p.kind = Primitive::Kind::fiber;
          p.instance_id = inst.id;
          p.index = index++;
          p.a = xf.apply_point(strand[k]);
          p.b = xf.apply_point(strand[k + 1]);
          p.radius = fibers.radius * scale;
          primitives_.push_back(p);
        }
      }
    }
  }
  for (const auto& p : primitives_) bounds_.expand(primitive_bounds(p));
  if (!primitives_.empty()) {
    bvh_ = build_bvh(primitives_);
    epsilon_ = 1e-4 * bounds_.diagonal();
  }
}

bool Scene::has_instance(int id) const {
  return id >= 0 && id < static_cast<int>(index_of_id_.size()) && index_of_id_[id] >= 0;
}

const Instance& Scene::instance(int id) const {
  if (!has_instance(id)) throw ContractViolation("unknown instance id " + std::to_string(id));
  return instances_[index_of_id_[id]];
}

Bounds3 Scene::instance_bounds(int id) const {
  Bounds3 b;
  for (const auto& p : primitives_)
    if (p.instance_id == id) b.expand(primitive_bounds(p));
  return b;
}

std::optional<Hit> Scene::intersect(const Ray& ray, const HitFilter& filter) const {
  return intersect_bvh(bvh_, primitives_, ray, filter);
}

Vec3 offset_origin(const Hit& hit, const Vec3& direction, double epsilon) {
  auto side = dot(direction, hit.geometric_normal) >= 0 ? 1.0 : -1.0;
  return hit.position + side * epsilon * hit.geometric_normal;
}

Vec3 spawn_origin(const Scene& scene, const Hit& hit, const Vec3& direction) {
  auto eps = scene.epsilon();
  if (hit.kind != HitKind::fiber || dot(direction, hit.geometric_normal) >= 0)
    return offset_origin(hit, direction, eps);
  HitFilter only;
  only.only_instance = hit.instance_id;
  auto inside = scene.intersect(make_ray(offset_origin(hit, direction, eps), direction), only);
  if (!inside) return offset_origin(hit, direction, eps);
  return offset_origin(*inside, direction, eps);
}

// -----------------------------------------------------------------------------
// SHAPES
// -----------------------------------------------------------------------------

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back({(i & 1) ? hi.x : lo.x, (i & 2) ? hi.y : lo.y, (i & 4) ? hi.z : lo.z});
  // Counter-clockwise when seen from outside.
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

TriangleMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  const double t = (1 + std::sqrt(5.0)) / 2;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v = normalize(v);
  std::vector<std::array<int, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      verts.push_back(normalize(verts[a] + verts[b]));
      auto idx = static_cast<int>(verts.size()) - 1;
      midpoints[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    for (auto [a, b, c] : tris) {
      auto ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
      next.push_back({a, ab, ca});
      next.push_back({b, bc, ab});
      next.push_back({c, ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  TriangleMesh m;
  for (const auto& v : verts) m.vertices.push_back(center + radius * v);
  m.triangles = std::move(tris);
  return m;
}

void append_mesh(TriangleMesh& dst, const TriangleMesh& src) {
  auto base = static_cast<int>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (auto tri : src.triangles) dst.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
}

}  // namespace rna
