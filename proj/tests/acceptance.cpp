// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
#include <CLI11.hpp>
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rna/datagen.hpp"
#include "rna/demo_scenes.hpp"
#include "rna/geometry.hpp"
#include "rna/integrator.hpp"
#include "rna/neural_asset.hpp"
#include "rna/sampling.hpp"
#include "rna/trainer.hpp"
#include "rna/triplane.hpp"

using namespace rna;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path work;
bool reuse = false;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct RunResult {
  int code = -1;
  std::string out;
  double seconds = 0;
};

// Runs the CLI with stderr appended to work/cli.log.
RunResult cli(const std::string& args) {
  auto cmd = std::string(RNA_CLI_PATH) + " " + args + " 2>>" + (work / "cli.log").string();
  auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), int(buf.size()), p)) r.out += buf.data();
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.seconds = seconds_since(t0);
  return r;
}

void require_ok(const RunResult& r, const std::string& what) {
  if (r.code != 0) throw std::runtime_error(what + " exited with " + std::to_string(r.code));
}

// Value following "key: " in CLI output.
double field(const std::string& out, const std::string& key) {
  auto pos = out.find(key + ": ");
  if (pos == std::string::npos) throw std::runtime_error("missing '" + key + "' in CLI output");
  return std::stod(out.substr(pos + key.size() + 2));
}

std::vector<uint8_t> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(1) << "\n"; }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Cached artifacts: a step is skipped under --reuse when its output exists.
double bake_dataset(const fs::path& scene, const fs::path& out, int views, int val_views, int res, int spp) {
  if (reuse && fs::exists(out / "manifest.json")) return 0;
  fs::remove_all(out);
  auto r = cli(fmt("bake --scene %s --views %d --val-views %d --res %d --spp %d --seed 1 --out %s", q(scene).c_str(),
                   views, val_views, res, spp, q(out).c_str()));
  require_ok(r, "bake " + out.filename().string());
  return r.seconds;
}

struct Trained {
  fs::path asset;
  double best_psnr = 0;
  double seconds = 0;
};

Trained train_model(const fs::path& data, const json& config, const std::string& name) {
  Trained t{work / (name + ".rna")};
  auto cfg_path = work / (name + ".json");
  auto result_path = work / (name + ".result");
  if (reuse && fs::exists(t.asset) && fs::exists(result_path)) {
    std::ifstream in(result_path);
    in >> t.best_psnr >> t.seconds;
    return t;
  }
  write_json(cfg_path, config);
  auto r = cli(fmt("train --data %s --config %s --out %s", q(data).c_str(), q(cfg_path).c_str(), q(t.asset).c_str()));
  require_ok(r, "train " + name);
  t.best_psnr = field(r.out, "best_val_psnr");
  t.seconds = r.seconds;
  std::ofstream(result_path) << fmt("%.17g %.17g\n", t.best_psnr, t.seconds);
  return t;
}

json small_config() {
  std::ifstream in(fs::path(RNA_SOURCE_DIR) / "configs" / "small.json");
  return json::parse(in);
}

// -----------------------------------------------------------------------------

Outcome gradcheck_criterion() {
  auto r = cli("gradcheck");
  auto pass = r.code == 0 && r.seconds < 30;
  return {pass, fmt("exit %d in %.2f s (limit 30 s)", r.code, r.seconds)};
}

json random_mixed_scene(uint64_t seed) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  json doc;
  doc["materials"] = {{"m", {{"type", "surface"}, {"albedo", 0.5}}},
                      {"f", {{"type", "fiber"}, {"base_color", {0.5, 0.4, 0.3}}}}};
  json inst = json::array();
  TriangleMesh mesh;
  for (int i = 0; i < 200; ++i) {
    Vec3 c{u(-1, 1), u(-1, 1), u(-1, 1)};
    auto base = int(mesh.vertices.size());
    for (int k = 0; k < 3; ++k) mesh.vertices.push_back(c + Vec3{u(-0.2, 0.2), u(-0.2, 0.2), u(-0.2, 0.2)});
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  json vs = json::array(), ts = json::array();
  for (auto& v : mesh.vertices) vs.push_back({v.x, v.y, v.z});
  for (auto& t : mesh.triangles) ts.push_back({t[0], t[1], t[2]});
  inst.push_back({{"type", "mesh"}, {"id", 0}, {"material", "m"}, {"vertices", vs}, {"triangles", ts}});
  for (int i = 0; i < 30; ++i) {
    auto r = u(0.05, 0.2);
    inst.push_back({{"type", "sphere"},
                    {"id", 1 + i},
                    {"material", "m"},
                    {"transform", {r, 0, 0, 0, r, 0, 0, 0, r, u(-1, 1), u(-1, 1), u(-1, 1)}}});
  }
  json strands = json::array();
  for (int s = 0; s < 40; ++s) {
    Vec3 p{u(-1, 1), u(-1, 1), u(-1, 1)};
    json pts = json::array();
    for (int k = 0; k < 5; ++k) {
      pts.push_back({p.x, p.y, p.z});
      p = p + Vec3{u(-0.2, 0.2), u(-0.2, 0.2), u(-0.2, 0.2)};
    }
    strands.push_back(pts);
  }
  inst.push_back({{"type", "fibers"}, {"id", 100}, {"material", "f"}, {"fiber_radius", 0.02}, {"strands", strands}});
  doc["instances"] = inst;
  doc["lights"] = json::array({directional_light({0, 0, 1})});
  doc["camera"] = camera_json({0, -4, 0}, {0, 0, 0}, 40);
  return doc;
}

Outcome oracle_criterion() {
  std::vector<std::pair<std::string, json>> scenes = {{"blocks", translucent_blocks_scene()},
                                                       {"fibers", fiber_clump_scene()},
                                                       {"mixed", random_mixed_scene(5)}};
  int mismatches = 0, hits = 0, rays = 0;
  for (const auto& [name, doc] : scenes) {
    auto desc = parse_scene(doc, ".");
    const auto& geo = desc.geometry;
    auto b = geo.bounds();
    auto center = 0.5 * (b.min + b.max);
    auto radius = 0.5 * length(b.extent());
    Rng rng(stream_seed(11, rays));
    for (int i = 0; i < 10000; ++i, ++rays) {
      auto origin = center + 2 * radius * sample_uniform_sphere(rng.uniform(), rng.uniform());
      auto e = b.extent();
      Vec3 target{b.min.x + e.x * rng.uniform(), b.min.y + e.y * rng.uniform(), b.min.z + e.z * rng.uniform()};
      auto ray = make_ray(origin, normalize(target - origin));
      auto a = intersect_bvh(geo.bvh(), geo.primitives(), ray);
      auto c = intersect_brute_force(geo.primitives(), ray);
      bool same = a.has_value() == c.has_value() &&
                  (!a || (a->t == c->t && a->instance_id == c->instance_id && a->primitive_index == c->primitive_index));
      mismatches += !same;
      hits += a.has_value();
    }
  }

  Rng rng(21);
  TriplaneGrid<double> grid(16, 4, {{-1, 0, 2}, {3, 2, 5}});
  init_triplane(grid, rng, 1.0);
  double texel_err = 0;
  for (int i = 0; i < 2000; ++i) {
    int a = int(rng.uniform() * 16), b = int(rng.uniform() * 16), c = int(rng.uniform() * 16);
    auto lo = grid.bounds.min, ext = grid.bounds.extent();
    Vec3 x{lo.x + ext.x * (a + 0.5) / 16, lo.y + ext.y * (b + 0.5) / 16, lo.z + ext.z * (c + 0.5) / 16};
    auto z = triplane_query(grid, x);
    for (int k = 0; k < 4; ++k) {
      auto direct = grid.data[grid.texel_offset(0, a, b) + k] + grid.data[grid.texel_offset(1, b, c) + k] +
                    grid.data[grid.texel_offset(2, c, a) + k];
      texel_err = std::max(texel_err, std::abs(z[k] - direct));
    }
  }

  // Ten Adam steps against a long double reference.
  const int n = 16;
  std::vector<double> p(n), m(n, 0), v(n, 0);
  std::vector<long double> rp(n), rm(n, 0), rv(n, 0);
  for (int i = 0; i < n; ++i) rp[i] = p[i] = rng.uniform() - 0.5;
  AdamHyper h;
  double adam_err = 0;
  for (int step = 1; step <= 10; ++step) {
    std::vector<double> g(n);
    for (auto& x : g) x = 2 * rng.uniform() - 1;
    adam_update<double>(p, g, m, v, step, 1e-3, h);
    for (int i = 0; i < n; ++i) {
      rm[i] = 0.9L * rm[i] + 0.1L * g[i];
      rv[i] = 0.999L * rv[i] + 0.001L * (long double)g[i] * g[i];
      auto mh = rm[i] / (1 - std::pow(0.9L, step));
      auto vh = rv[i] / (1 - std::pow(0.999L, step));
      rp[i] -= 1e-3L * mh / (std::sqrt(vh) + 1e-8L);
      adam_err = std::max(adam_err, double(std::abs(rp[i] - p[i])));
    }
  }
  auto pass = mismatches == 0 && hits > 3000 && texel_err < 1e-12 && adam_err < 1e-12;
  return {pass, fmt("BVH vs brute force %d mismatches over %d rays (%d hits); texel-center error %.2e; "
                    "Adam 10-step max deviation %.2e",
                    mismatches, rays, hits, texel_err, adam_err)};
}

struct Shared {
  fs::path blocks_scene, fibers_scene, blocks_data, fibers_data;
  Trained blocks_small, blocks_nohint, fibers_h, fibers_noh;
  double blocks_bake_seconds = 0, fibers_bake_seconds = 0;
};
Shared S;

std::vector<EpochLog> read_log(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<EpochLog> out;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    EpochLog e;
    char comma;
    ss >> e.epoch >> comma >> e.loss >> comma >> e.val_psnr >> comma >> e.lr >> comma >> e.blur;
    out.push_back(e);
  }
  return out;
}

Outcome surface_fit_criterion() {
  S.blocks_bake_seconds = bake_dataset(S.blocks_scene, S.blocks_data, 64, 8, 128, 256);
  S.blocks_small = train_model(S.blocks_data, small_config(), "blocks_small");
  auto log = read_log(fs::path(S.blocks_small.asset.string() + ".csv"));
  auto total = S.blocks_bake_seconds + S.blocks_small.seconds;
  bool loss_drop = log.size() >= 20 && log[19].loss < log[0].loss;
  auto pass = S.blocks_small.best_psnr >= 28 && total < 900 && loss_drop;
  return {pass, fmt("validation PSNR %.2f dB (gate 28); bake %.0f s + train %.0f s on %u core(s) (limit 900 s); "
                    "loss epoch 1 %.5f -> epoch 20 %.5f",
                    S.blocks_small.best_psnr, S.blocks_bake_seconds, S.blocks_small.seconds,
                    std::max(1u, std::thread::hardware_concurrency()), log.empty() ? 0.0 : log[0].loss,
                    log.size() >= 20 ? log[19].loss : 0.0)};
}

// Mean over random fiber cross-sections of the variance of predicted
// luminance as the viewing offset sweeps the fiber width.
double width_variance(const NeuralAsset& asset, const FiberSet& fibers) {
  Rng rng(77);
  double sum = 0;
  const int trials = 600, steps = 33;
  for (int t = 0; t < trials; ++t) {
    const auto& strand = fibers.strands[size_t(rng.uniform() * fibers.strands.size())];
    auto k = size_t(rng.uniform() * (strand.size() - 1));
    auto axis = normalize(strand[k + 1] - strand[k]);
    auto point = strand[k] + rng.uniform() * (strand[k + 1] - strand[k]);
    Vec3 wo;
    do wo = sample_uniform_sphere(rng.uniform(), rng.uniform());
    while (std::abs(dot(wo, axis)) > 0.9);
    auto wi = sample_uniform_sphere(rng.uniform(), rng.uniform());
    double mean = 0, sq = 0;
    for (int s = 0; s < steps; ++s) {
      auto h = -0.95 + 1.9 * s / (steps - 1);
      auto p = fiber_point_at_offset(point, axis, wo, fibers.radius, h);
      auto out = evaluate(asset, {p, wo, wi, axis, h});
      auto y = luminance(out.lit);
      mean += y;
      sq += y * y;
    }
    mean /= steps;
    sum += sq / steps - mean * mean;
  }
  return sum / trials;
}

Outcome fiber_fit_criterion() {
  S.fibers_bake_seconds = bake_dataset(S.fibers_scene, S.fibers_data, 64, 8, 128, 256);
  S.fibers_h = train_model(S.fibers_data, small_config(), "fibers_h");
  auto cfg = small_config();
  cfg["use_h"] = false;
  S.fibers_noh = train_model(S.fibers_data, cfg, "fibers_noh");
  auto desc = load_scene(S.fibers_scene);
  const auto& fibers = std::get<FiberSet>(desc.geometry.instances().front().geometry);
  auto var_h = width_variance(load_asset(S.fibers_h.asset), fibers);
  auto var_noh = width_variance(load_asset(S.fibers_noh.asset), fibers);
  auto drop = S.fibers_h.best_psnr - S.fibers_noh.best_psnr;
  auto ratio = var_noh / var_h;
  auto pass = S.fibers_h.best_psnr >= 25 && drop >= 1 && ratio < 0.1;
  return {pass, fmt("validation PSNR %.2f dB (gate 25); without h %.2f dB (drop %.2f, gate 1); "
                    "width variance ratio %.4f (gate 0.1); bake %.0f s, train %.0f s",
                    S.fibers_h.best_psnr, S.fibers_noh.best_psnr, drop, ratio, S.fibers_bake_seconds,
                    S.fibers_h.seconds)};
}

// Validation samples within `radius` pixels of a change in visibility.
std::vector<TrainSample> edge_samples(const TrainingSlice& slice, int radius) {
  const auto& alpha = slice.plane("alpha").data;
  const auto& vis = slice.plane("visibility").data;
  auto all = samples_from_slice(slice);
  std::vector<TrainSample> out;
  size_t k = 0;
  for (int y = 0; y < slice.height; ++y)
    for (int x = 0; x < slice.width; ++x) {
      auto p = size_t(y) * slice.width + x;
      if (alpha[p] == 0) continue;
      const auto& s = all[k++];
      bool edge = false;
      for (int dy = -radius; dy <= radius && !edge; ++dy)
        for (int dx = -radius; dx <= radius && !edge; ++dx) {
          int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= slice.width || yy >= slice.height) continue;
          auto pp = size_t(yy) * slice.width + xx;
          edge = alpha[pp] != 0 && (vis[pp] != 0) != (vis[p] != 0);
        }
      if (edge) out.push_back(s);
    }
  return out;
}

double samples_psnr(const NeuralAsset& asset, const std::vector<TrainSample>& s, double peak) {
  auto pred = predict(asset, s);
  std::vector<float> a(3 * s.size()), b(3 * s.size());
  for (size_t i = 0; i < s.size(); ++i)
    for (int c = 0; c < 3; ++c) {
      a[3 * i + c] = float(pred[i][c]);
      b[3 * i + c] = s[i].target[c];
    }
  return psnr(a, b, peak);
}

Outcome hint_ablation_criterion() {
  auto cfg = small_config();
  cfg["visibility_hint"] = false;
  S.blocks_nohint = train_model(S.blocks_data, cfg, "blocks_nohint");
  auto data = load_dataset(S.blocks_data);
  std::vector<TrainSample> edges;
  for (const auto& entry : data.manifest.at("val")) {
    auto slice = read_slice(S.blocks_data / entry.at("file").get<std::string>());
    auto e = edge_samples(slice, 2);
    edges.insert(edges.end(), e.begin(), e.end());
  }
  if (edges.empty()) return {false, "no visibility edges in the validation slices"};
  auto with = samples_psnr(load_asset(S.blocks_small.asset), edges, data.peak);
  auto without = samples_psnr(load_asset(S.blocks_nohint.asset), edges, data.peak);
  auto drop = with - without;
  return {drop >= 1, fmt("shadow-edge PSNR %.2f dB with hint, %.2f dB without (drop %.2f, gate 1) over %zu pixels; "
                         "all-pixel PSNR %.2f vs %.2f",
                         with, without, drop, edges.size(), S.blocks_small.best_psnr, S.blocks_nohint.best_psnr)};
}

Outcome capacity_criterion() {
  auto cfg = small_config();
  cfg["width"] = 256;
  auto w256 = train_model(S.blocks_data, cfg, "blocks_w256");
  cfg["width"] = 512;
  auto w512 = train_model(S.blocks_data, cfg, "blocks_w512");
  cfg = small_config();
  cfg["channels"] = 4;
  auto c4 = train_model(S.blocks_data, cfg, "blocks_c4");
  // Seed spread of the 8-channel model sets the noise level.
  cfg = small_config();
  cfg["seed"] = 2;
  auto c8b = train_model(S.blocks_data, cfg, "blocks_c8_seed2");
  auto w64 = S.blocks_small.best_psnr;
  auto noise = std::abs(w64 - c8b.best_psnr);
  auto c8 = std::max(w64, c8b.best_psnr);
  auto pass = w64 < w256.best_psnr && w256.best_psnr < w512.best_psnr && c8 >= c4.best_psnr - noise;
  return {pass, fmt("width 64/256/512: %.2f / %.2f / %.2f dB; channels 4: %.2f dB, 8: %.2f dB "
                    "(seed spread %.2f dB); 100 epochs each",
                    w64, w256.best_psnr, w512.best_psnr, c4.best_psnr, c8, noise)};
}

double image_mean(const RenderOutput& r, double* standard_error) {
  double sum = 0, var = 0;
  auto n = double(r.image.rgb.size());
  for (size_t i = 0; i < r.image.rgb.size(); ++i) {
    sum += r.image.rgb[i];
    var += r.variance[i];
  }
  *standard_error = std::sqrt(var) / n;
  return sum / n;
}

bool mis_agreement(std::string& detail) {
  json doc;
  doc["materials"] = {{"grey", {{"type", "surface"}, {"albedo", 0.6}, {"specular", 0.3}, {"roughness", 0.4}}}};
  auto floor = json{{"type", "mesh"},
                    {"id", 0},
                    {"material", "grey"},
                    {"vertices", {{-3, -3, 0}, {3, -3, 0}, {3, 3, 0}, {-3, 3, 0}}},
                    {"triangles", {{0, 1, 2}, {0, 2, 3}}}};
  auto sphere = json{{"type", "sphere"},
                     {"id", 1},
                     {"material", "grey"},
                     {"transform", {0.6, 0, 0, 0, 0.6, 0, 0, 0, 0.6, 0, 0, 0.6}}};
  doc["instances"] = json::array({floor, sphere});
  doc["lights"] = json::array({{{"type", "rect"},
                                {"corner", {-0.5, -0.5, 2.5}},
                                {"edge_u", {0, 1, 0}},
                                {"edge_v", {1, 0, 0}},
                                {"radiance", 5.0}},
                               {{"type", "environment"}, {"radiance", 0.2}}});
  doc["camera"] = camera_json({0, -4, 2}, {0, 0, 0.4}, 40);
  auto desc = parse_scene(doc, ".");
  RenderConfig c;
  c.width = c.height = 16;
  c.spp = 512;
  c.max_depth = 4;
  c.seed = 3;
  double means[3], ses[3];
  int k = 0;
  for (auto s : {Strategy::mis, Strategy::light_only, Strategy::bsdf_only}) {
    c.strategy = s;
    means[k] = image_mean(render(desc, c), &ses[k]);
    ++k;
  }
  double worst = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      worst = std::max(worst, std::abs(means[a] - means[b]) / std::hypot(ses[a], ses[b]));
  detail = fmt("MIS/light/BSDF means %.5f/%.5f/%.5f, worst gap %.2f sigma", means[0], means[1], means[2], worst);
  return worst <= 3;
}

Outcome integration_criterion() {
  auto light = directional_light(normalize(Vec3{-0.6, -0.5, 0.7}), 1.0);
  auto ref_doc = translucent_blocks_scene();
  ref_doc["lights"] = json::array({light});
  auto neural_doc = with_neural_material(ref_doc, S.blocks_small.asset.filename().string());
  write_json(work / "novel_reference.json", ref_doc);
  write_json(work / "novel_neural.json", neural_doc);
  auto opts = std::string("--res 128 --spp 64 --seed 9");
  require_ok(cli("render --scene " + q(work / "novel_reference.json") + " " + opts + " --out " +
                 q(work / "novel_reference.pfm") + " --alpha-out " + q(work / "novel_alpha.pfm")),
             "reference render");
  require_ok(cli("render --scene " + q(work / "novel_neural.json") + " " + opts + " --out " +
                 q(work / "novel_neural.pfm")),
             "neural render");
  auto ev = cli("eval --ref " + q(work / "novel_reference.pfm") + " --test " + q(work / "novel_neural.pfm") +
                " --alpha-mask " + q(work / "novel_alpha.pfm"));
  require_ok(ev, "eval");
  auto render_psnr = field(ev.out, "PSNR");

  // Duplicating every proxy triangle under the same instance id must not
  // change a single bit, and each light sample must use the hinted head.
  auto desc = parse_scene(neural_doc, work);
  auto dup_doc = neural_doc;
  auto& inst = dup_doc["instances"][0];
  auto tris = inst["triangles"];
  for (const auto& t : tris) inst["triangles"].push_back(t);
  auto dup = parse_scene(dup_doc, work);
  RenderConfig rc;
  rc.width = rc.height = 64;
  rc.spp = 8;
  rc.seed = 4;
  std::mutex mu;
  long events = 0, wrong_head = 0;
  rc.on_neural_shade = [&](const NeuralShadeEvent& e) {
    std::lock_guard lock(mu);
    ++events;
    wrong_head += !(e.used == (e.self_hint ? e.shadowed : e.lit));
  };
  auto a = render(desc, rc);
  rc.on_neural_shade = {};
  auto b = render(dup, rc);
  bool bitwise = a.image.rgb == b.image.rgb && a.image.alpha == b.image.alpha;

  std::string mis_detail;
  auto mis = mis_agreement(mis_detail);
  auto pass = render_psnr >= 25 && bitwise && events > 0 && wrong_head == 0 && mis;
  return {pass, fmt("novel-light render PSNR %.2f dB (gate 25); self-skip %s; %ld/%ld light samples on the "
                    "hinted head; %s",
                    render_psnr, bitwise ? "bitwise identical" : "DIFFERS", events - wrong_head, events,
                    mis_detail.c_str())};
}

Outcome determinism_criterion() {
  std::vector<fs::path> dirs = {work / "det_a", work / "det_b"};
  std::vector<std::string> threads = {"--threads 1", "--threads 4"};
  auto cfg = small_config();
  cfg["epochs"] = 3;
  write_json(work / "det_config.json", cfg);
  for (size_t i = 0; i < dirs.size(); ++i) {
    const auto& d = dirs[i];
    fs::remove_all(d);
    fs::create_directories(d);
    require_ok(cli(threads[i] + " bake --scene " + q(S.blocks_scene) +
                   " --views 4 --val-views 2 --res 32 --spp 16 --seed 3 --out " + q(d / "data")),
               "bake");
    require_ok(cli(threads[i] + " train --data " + q(d / "data") + " --config " + q(work / "det_config.json") +
                   " --out " + q(d / "asset.rna")),
               "train");
    write_json(d / "scene.json", with_neural_material(translucent_blocks_scene(), "asset.rna"));
    require_ok(cli(threads[i] + " render --scene " + q(d / "scene.json") + " --res 48 --spp 8 --seed 2 --out " +
                   q(d / "image.pfm")),
               "render");
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), dirs[0]);
    ++files;
    differing += file_bytes(e.path()) != file_bytes(dirs[1] / rel);
  }
  return {files > 0 && differing == 0,
          fmt("%d/%d output files byte-identical across two runs (1 vs 4 threads)", files - differing, files)};
}

Outcome format_criterion() {
  int checked = 0, failed = 0;
  auto check = [&](bool ok) {
    ++checked;
    failed += !ok;
  };
  auto asset_bytes = file_bytes(S.blocks_small.asset);
  check(serialize_asset(deserialize_asset(asset_bytes)) == asset_bytes);
  auto pfm_bytes = file_bytes(work / "novel_neural.pfm");
  check(encode_pfm(decode_pfm(pfm_bytes)) == pfm_bytes);
  for (const auto& e : fs::directory_iterator(S.blocks_data / "val")) {
    auto bytes = file_bytes(e.path());
    check(encode_slice(decode_slice(bytes)) == bytes);
  }
  auto full = work / "full_init.rna";
  require_ok(cli("train --data " + q(S.blocks_data) + " --config " +
                 q(fs::path(RNA_SOURCE_DIR) / "configs" / "full.json") + " --init-only --out " + q(full)),
             "train --init-only");
  auto info = cli("info " + q(full));
  require_ok(info, "info");
  auto params = field(info.out, "parameter_count");
  auto size = field(info.out, "file_size_bytes");
  auto params_ok = std::abs(params - 7.4e6) <= 0.1 * 7.4e6;
  auto size_ok = std::abs(size - 29e6) <= 0.1 * 29e6;
  return {failed == 0 && params_ok && size_ok,
          fmt("%d/%d round trips exact; full-scale asset %.0f parameters (%.2fM, target 7.4M +-10%%), "
              "%.1f MB (target 29 MB +-10%%)",
              checked - failed, checked, params, params / 1e6, size / 1e6)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run"};
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work_dir, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria (later ones may depend on earlier artifacts)");
  app.add_flag("--reuse", reuse, "Reuse bakes and trained models already in the scratch directory");
  CLI11_PARSE(app, argc, argv);
  work = fs::absolute(work_dir);
  fs::create_directories(work);

  S.blocks_scene = work / "blocks.json";
  S.fibers_scene = work / "fibers.json";
  S.blocks_data = work / "blocks_data";
  S.fibers_data = work / "fibers_data";
  write_json(S.blocks_scene, translucent_blocks_scene());
  write_json(S.fibers_scene, fiber_clump_scene(20, 10, 1.0));

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient check", gradcheck_criterion},
      {"geometry, texel and optimizer oracles", oracle_criterion},
      {"surface fit", surface_fit_criterion},
      {"fiber fit and h ablation", fiber_fit_criterion},
      {"visibility hint ablation", hint_ablation_criterion},
      {"capacity ablation", capacity_criterion},
      {"integration", integration_criterion},
      {"determinism", determinism_criterion},
      {"formats and asset size", format_criterion},
  };
  std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    auto id = int(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("CRITERION %d %s: %s | %s (%.0f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
