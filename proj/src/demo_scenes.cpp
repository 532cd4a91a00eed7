#include "rna/demo_scenes.hpp"

#include "rna/geometry.hpp"
#include "rna/sampling.hpp"

namespace rna {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json mesh_json(const TriangleMesh& m) {
  json vs = json::array(), ts = json::array();
  for (const auto& v : m.vertices) vs.push_back(vec(v));
  for (const auto& t : m.triangles) ts.push_back({t[0], t[1], t[2]});
  return {{"vertices", vs}, {"triangles", ts}};
}

}  // namespace

json translucent_blocks_scene() {
  TriangleMesh mesh;
  append_mesh(mesh, make_box({-1.0, -0.6, 0.0}, {-0.1, 0.6, 0.2}));
  append_mesh(mesh, make_box({0.1, -0.6, 0.0}, {1.0, 0.6, 0.2}));
  append_mesh(mesh, make_box({-0.8, -0.3, 0.21}, {-0.3, 0.2, 0.9}));
  append_mesh(mesh, make_box({0.3, -0.4, 0.21}, {0.8, 0.1, 0.6}));
  append_mesh(mesh, make_icosphere({0.0, 0.3, 0.55}, 0.25, 2));
  auto inst = mesh_json(mesh);
  inst["type"] = "mesh";
  inst["id"] = 0;
  inst["material"] = "wax";
  json scene;
  scene["materials"] = {{"wax",
                         {{"type", "surface"},
                          {"albedo", {0.85, 0.6, 0.45}},
                          {"roughness", 0.5},
                          {"specular", 0.2},
                          {"translucency_weight", 0.5},
                          {"translucency_mfp", {0.3, 0.15, 0.08}}}}};
  scene["instances"] = json::array({inst});
  scene["lights"] = json::array({directional_light(normalize({0.4, -0.3, 1.0}))});
  scene["camera"] = camera_json({0.0, -3.5, 2.0}, {0.0, 0.0, 0.4}, 40);
  return scene;
}

json fiber_clump_scene(int strands, int segments_per_strand, double azimuthal_gain, uint64_t seed) {
  Rng rng(stream_seed(seed, 0xf1be));
  json polylines = json::array();
  for (int s = 0; s < strands; ++s) {
    auto r = 0.15 * std::sqrt(rng.uniform());
    auto a = 2 * pi * rng.uniform();
    Vec3 p{r * std::cos(a), r * std::sin(a), 0};
    // Leans outward and curls slightly.
    Vec3 lean{0.35 * std::cos(a) + 0.1 * (rng.uniform() - 0.5), 0.35 * std::sin(a) + 0.1 * (rng.uniform() - 0.5), 1};
    auto curl = 1.5 * (rng.uniform() - 0.5);
    auto length = 1.0 + 0.3 * rng.uniform();
    json pts = json::array();
    for (int k = 0; k <= segments_per_strand; ++k) {
      auto t = double(k) / segments_per_strand;
      Vec3 q = p + length * t * Vec3{lean.x, lean.y, 1} / std::sqrt(1 + lean.x * lean.x + lean.y * lean.y);
      q.x += 0.08 * std::sin(curl * 3 * t) * -std::sin(a);
      q.y += 0.08 * std::sin(curl * 3 * t) * std::cos(a);
      pts.push_back(vec(q));
    }
    polylines.push_back(pts);
  }
  json scene;
  scene["materials"] = {{"hair",
                         {{"type", "fiber"},
                          {"base_color", {0.8, 0.55, 0.3}},
                          {"longitudinal_roughness", 0.25},
                          {"azimuthal_gain", azimuthal_gain}}}};
  scene["instances"] = json::array(
      {{{"type", "fibers"}, {"id", 0}, {"material", "hair"}, {"fiber_radius", 0.025}, {"strands", polylines}}});
  scene["lights"] = json::array({directional_light(normalize({0.5, -0.4, 0.8}))});
  scene["camera"] = camera_json({0.0, -3.0, 1.2}, {0.0, 0.0, 0.55}, 35);
  return scene;
}

json with_neural_material(json scene, const std::string& asset_path) {
  scene["materials"] = {{"neural", {{"type", "neural"}, {"asset", asset_path}}}};
  for (auto& inst : scene["instances"]) inst["material"] = "neural";
  return scene;
}

json directional_light(const Vec3& direction, double irradiance) {
  return {{"type", "directional"}, {"direction", vec(direction)}, {"irradiance", irradiance}};
}

json camera_json(const Vec3& origin, const Vec3& target, double fov_deg) {
  return {{"origin", vec(origin)}, {"target", vec(target)}, {"up", {0, 0, 1}}, {"fov_deg", fov_deg}};
}

}  // namespace rna
