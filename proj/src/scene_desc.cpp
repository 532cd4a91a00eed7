#include "rna/scene_desc.hpp"

#include <fstream>
#include <set>

#include "rna/errors.hpp"

namespace rna {

using nlohmann::json;

Ray camera_ray(const Camera& camera, int width, int height, double px, double py) {
  auto forward = normalize(camera.target - camera.origin);
  auto right = normalize(cross(forward, camera.up));
  auto up = cross(right, forward);
  auto tan_half = std::tan(camera.fov_deg * pi / 360);
  auto aspect = double(width) / height;
  auto sx = (2 * px / width - 1) * tan_half * aspect;
  auto sy = (1 - 2 * py / height) * tan_half;
  return {camera.origin, normalize(forward + sx * right + sy * up), 0, inf};
}

Vec3 to_object_point(const Instance& inst, const Vec3& p) {
  if (inst.object_to_world.is_identity()) return p;
  return inverse(inst.object_to_world).apply_point(p);
}

Vec3 to_object_dir(const Instance& inst, const Vec3& v) {
  if (inst.object_to_world.is_identity()) return v;
  return normalize(inverse(inst.object_to_world).apply_linear(v));
}

Vec3 to_object_normal(const Instance& inst, const Vec3& n) {
  if (inst.object_to_world.is_identity()) return n;
  return normalize(inst.object_to_world.apply_linear_transposed(n));
}

const Material& SceneDesc::material_of(int instance_id) const {
  if (instance_id < 0 || instance_id >= int(material_by_id_.size()) || !material_by_id_[instance_id])
    throw ContractViolation("no material bound for instance " + std::to_string(instance_id));
  return *material_by_id_[instance_id];
}

void SceneDesc::bind_materials() {
  material_by_id_.clear();
  for (const auto& inst : geometry.instances()) {
    auto it = materials.find(inst.material);
    if (it == materials.end()) throw ConfigError("unknown material '" + inst.material + "'");
    if (inst.id >= int(material_by_id_.size())) material_by_id_.resize(inst.id + 1, nullptr);
    material_by_id_[inst.id] = &it->second;
  }
}

void prepare_environment(EnvironmentLight& env) {
  auto w = env.map.width, h = env.map.height;
  if (w <= 0 || h <= 0) throw ConfigError("environment map is empty");
  env.conditional_cdf.assign(size_t(h) * (w + 1), 0.0);
  env.marginal_cdf.assign(h + 1, 0.0);
  for (int y = 0; y < h; ++y) {
    auto sin_theta = std::sin(pi * (y + 0.5) / h);
    auto* row = env.conditional_cdf.data() + size_t(y) * (w + 1);
    for (int x = 0; x < w; ++x) {
      const auto* px = env.map.pixel(x, y);
      auto lum = std::max(0.0, luminance({px[0], px[1], px[2]}));
      row[x + 1] = row[x] + lum * sin_theta;
    }
    env.marginal_cdf[y + 1] = env.marginal_cdf[y] + row[w];
  }
  if (env.marginal_cdf[h] <= 0) throw ConfigError("environment map has no emission");
}

// -----------------------------------------------------------------------------
// JSON PARSING
// -----------------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rgb rgb_or_scalar(const json& j, const std::string& where) {
  if (j.is_number()) return Rgb(j.get<double>());
  return vec3(j, where);
}

// 4x3 row-major: rows 0..2 are the images of the x, y, z axes, row 3 the
// translation (p' = x * r0 + y * r1 + z * r2 + r3).
Affine transform(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 12) throw ConfigError(where + ": transform needs 12 numbers");
  Affine a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.linear[c * 3 + r] = j[r * 3 + c].get<double>();
  a.translation = {j[9].get<double>(), j[10].get<double>(), j[11].get<double>()};
  return a;
}

Material parse_material(const json& j, const std::string& name, const std::filesystem::path& base) {
  auto where = "material '" + name + "'";
  auto type = j.at("type").get<std::string>();
  if (type == "surface") {
    check_keys(j, {"type", "albedo", "roughness", "specular", "translucency_weight", "translucency_mfp"}, where);
    SurfaceMaterial m;
    if (j.contains("albedo")) m.albedo = rgb_or_scalar(j["albedo"], where);
    m.roughness = j.value("roughness", m.roughness);
    m.specular = j.value("specular", m.specular);
    m.translucency_weight = j.value("translucency_weight", m.translucency_weight);
    if (j.contains("translucency_mfp")) m.translucency_mfp = rgb_or_scalar(j["translucency_mfp"], where);
    validate(m);
    return m;
  }
  if (type == "fiber") {
    check_keys(j, {"type", "base_color", "longitudinal_roughness", "azimuthal_gain"}, where);
    FiberMaterial m;
    if (j.contains("base_color")) m.base_color = rgb_or_scalar(j["base_color"], where);
    m.longitudinal_roughness = j.value("longitudinal_roughness", m.longitudinal_roughness);
    m.azimuthal_gain = j.value("azimuthal_gain", m.azimuthal_gain);
    validate(m);
    return m;
  }
  if (type == "neural") {
    check_keys(j, {"type", "asset"}, where);
    NeuralMaterial m;
    m.path = j.at("asset").get<std::string>();
    if (m.path.is_relative()) m.path = base / m.path;
    if (!std::filesystem::exists(m.path)) throw ConfigError(where + ": missing asset file " + m.path.string());
    m.asset = std::make_shared<const NeuralAsset>(load_asset(m.path));
    return m;
  }
  throw ConfigError(where + ": unknown type '" + type + "'");
}

Instance parse_instance(const json& j, int default_id) {
  auto where = "instance " + std::to_string(default_id);
  Instance inst;
  inst.id = j.value("id", default_id);
  auto type = j.at("type").get<std::string>();
  if (j.contains("transform")) inst.object_to_world = transform(j["transform"], where);
  inst.material = j.at("material").get<std::string>();
  if (type == "mesh") {
    check_keys(j, {"id", "type", "transform", "material", "vertices", "triangles"}, where);
    TriangleMesh mesh;
    for (const auto& v : j.at("vertices")) mesh.vertices.push_back(vec3(v, where));
    for (const auto& t : j.at("triangles")) {
      if (!t.is_array() || t.size() != 3) throw ConfigError(where + ": triangles need 3 indices");
      mesh.triangles.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    }
    inst.geometry = std::move(mesh);
  } else if (type == "sphere") {
    check_keys(j, {"id", "type", "transform", "material"}, where);
    inst.geometry = UnitSphere{};
  } else if (type == "fibers") {
    check_keys(j, {"id", "type", "transform", "material", "fiber_radius", "strands"}, where);
    FiberSet fibers;
    fibers.radius = j.at("fiber_radius").get<double>();
    for (const auto& strand : j.at("strands")) {
      std::vector<Vec3> pts;
      for (const auto& p : strand) pts.push_back(vec3(p, where));
      fibers.strands.push_back(std::move(pts));
    }
    inst.geometry = std::move(fibers);
  } else {
    throw ConfigError(where + ": unknown instance type '" + type + "'");
  }
  return inst;
}

Light parse_light(const json& j, const std::filesystem::path& base, size_t index) {
  auto where = "light " + std::to_string(index);
  auto type = j.at("type").get<std::string>();
  auto non_negative = [&](const Rgb& c) {
    if (c.x < 0 || c.y < 0 || c.z < 0) throw ConfigError(where + ": emission must be non-negative");
    return c;
  };
  if (type == "directional") {
    check_keys(j, {"type", "direction", "irradiance"}, where);
    DirectionalLight l;
    l.direction = normalize(vec3(j.at("direction"), where));
    if (j.contains("irradiance")) l.irradiance = non_negative(rgb_or_scalar(j["irradiance"], where));
    return l;
  }
  if (type == "point") {
    check_keys(j, {"type", "position", "intensity"}, where);
    PointLight l;
    l.position = vec3(j.at("position"), where);
    if (j.contains("intensity")) l.intensity = non_negative(rgb_or_scalar(j["intensity"], where));
    return l;
  }
  if (type == "rect") {
    check_keys(j, {"type", "corner", "edge_u", "edge_v", "radiance"}, where);
    RectLight l;
    l.corner = vec3(j.at("corner"), where);
    l.edge_u = vec3(j.at("edge_u"), where);
    l.edge_v = vec3(j.at("edge_v"), where);
    if (j.contains("radiance")) l.radiance = non_negative(rgb_or_scalar(j["radiance"], where));
    if (l.area() <= 0) throw ConfigError(where + ": degenerate rectangle");
    return l;
  }
  if (type == "environment") {
    check_keys(j, {"type", "radiance", "file", "scale"}, where);
    EnvironmentLight l;
    l.scale = j.value("scale", 1.0);
    if (l.scale < 0) throw ConfigError(where + ": scale must be non-negative");
    if (j.contains("file")) {
      std::filesystem::path p = j["file"].get<std::string>();
      if (p.is_relative()) p = base / p;
      l.map = read_pfm(p);
    } else {
      auto c = non_negative(rgb_or_scalar(j.value("radiance", json(1.0)), where));
      l.map = HdrImage(1, 1);
      l.map.rgb = {float(c.x), float(c.y), float(c.z)};
    }
    for (auto v : l.map.rgb)
      if (v < 0) throw ConfigError(where + ": emission must be non-negative");
    prepare_environment(l);
    return l;
  }
  throw ConfigError(where + ": unknown type '" + type + "'");
}

}  // namespace

SceneDesc parse_scene(const json& doc, const std::filesystem::path& base_dir) {
  try {
    check_keys(doc, {"materials", "instances", "lights", "camera"}, "scene");
    SceneDesc s;
    s.base_dir = base_dir;
    if (doc.contains("materials"))
      for (const auto& [name, m] : doc["materials"].items()) s.materials.emplace(name, parse_material(m, name, base_dir));
    std::vector<Instance> instances;
    if (doc.contains("instances")) {
      int index = 0;
      for (const auto& j : doc["instances"]) instances.push_back(parse_instance(j, index++));
    }
    for (const auto& inst : instances) {
      auto it = s.materials.find(inst.material);
      if (it == s.materials.end()) throw ConfigError("unknown material '" + inst.material + "'");
      auto is_fiber = std::holds_alternative<FiberSet>(inst.geometry);
      if (const auto* n = std::get_if<NeuralMaterial>(&it->second)) {
        if ((n->asset->kind == AssetKind::fiber) != is_fiber)
          throw ConfigError("neural asset kind does not match geometry of instance " + std::to_string(inst.id));
      } else if (std::holds_alternative<FiberMaterial>(it->second) != is_fiber) {
        throw ConfigError("material '" + inst.material + "' does not match geometry of instance " +
                          std::to_string(inst.id));
      }
    }
    s.geometry = Scene(std::move(instances));
    if (doc.contains("lights")) {
      size_t index = 0;
      for (const auto& j : doc["lights"]) s.lights.push_back(parse_light(j, base_dir, index++));
    }
    if (doc.contains("camera")) {
      const auto& c = doc["camera"];
      check_keys(c, {"origin", "target", "up", "fov_deg"}, "camera");
      if (c.contains("origin")) s.camera.origin = vec3(c["origin"], "camera");
      if (c.contains("target")) s.camera.target = vec3(c["target"], "camera");
      if (c.contains("up")) s.camera.up = vec3(c["up"], "camera");
      s.camera.fov_deg = c.value("fov_deg", s.camera.fov_deg);
    }
    s.bind_materials();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
}

SceneDesc load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scene " + path.string() + ": " + e.what());
  }
  return parse_scene(doc, path.parent_path());
}

}  // namespace rna
