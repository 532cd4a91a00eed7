// rna: bake, train, render, eval, gradcheck and info for relightable
// neural assets.
#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "rna/binary_io.hpp"
#include "rna/datagen.hpp"
#include "rna/errors.hpp"
#include "rna/gradcheck.hpp"
#include "rna/integrator.hpp"
#include "rna/trainer.hpp"

namespace {

using namespace rna;

struct Seconds {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

int run_bake(const std::string& scene_path, BakeConfig cfg, const std::string& out) {
  Seconds timer;
  auto scene = load_scene(scene_path);
  bake(scene, cfg, out);
  std::fprintf(stderr, "baked %d + %d slices at %d^2, %d spp in %.1f s\n", cfg.view_count, cfg.validation_views,
               cfg.resolution, cfg.spp, timer.elapsed());
  return 0;
}

int run_train(const std::string& data, const std::string& config_path, const std::string& out,
              std::optional<int> epochs, std::optional<uint64_t> seed, const std::string& log_path, bool init_only,
              int threads) {
  auto cfg = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
  if (epochs) cfg.epochs = *epochs;
  if (seed) cfg.seed = *seed;
  cfg.threads = threads;
  validate(cfg);
  if (init_only) {
    std::ifstream in(std::filesystem::path(data) / "manifest.json");
    if (!in) throw IoError("cannot open " + data + "/manifest.json");
    auto manifest = nlohmann::json::parse(in);
    auto kind = asset_kind_from_string(manifest.at("kind").get<std::string>());
    const auto& b = manifest.at("bounds");
    Bounds3 bounds{{b["min"][0], b["min"][1], b["min"][2]}, {b["max"][0], b["max"][1], b["max"][2]}};
    auto asset = make_asset(kind, cfg.use_h, cfg.model, bounds, cfg.seed);
    asset.visibility_hint = cfg.visibility_hint;
    save_asset(asset, out);
    std::fprintf(stderr, "wrote untrained asset with %zu parameters\n", asset.parameter_count());
    return 0;
  }
  Seconds timer;
  auto dataset = load_dataset(data);
  auto result = train(dataset, cfg, [&](const EpochLog& e) {
    std::fprintf(stderr, "epoch %4d  loss %.6f  val %.3f dB  lr %.3g  blur %.2f  (%.0f s)\n", e.epoch, e.loss,
                 e.val_psnr, e.lr, e.blur, timer.elapsed());
  });
  const auto& best = result.best.front();
  save_asset(best.asset, out);
  std::filesystem::path ckpt_dir = out + ".ckpt";
  std::filesystem::create_directories(ckpt_dir);
  char name[48];
  for (size_t k = 0; k < result.best.size(); ++k) {
    std::snprintf(name, sizeof name, "best%zu_epoch%04d.rna", k + 1, result.best[k].epoch);
    save_asset(result.best[k].asset, ckpt_dir / name);
  }
  std::snprintf(name, sizeof name, "last_epoch%04d.rna", result.last.epoch);
  save_asset(result.last.asset, ckpt_dir / name);
  write_training_log(result.history, log_path.empty() ? out + ".csv" : log_path);
  std::printf("best_epoch: %d\nbest_val_psnr: %.4f\nsteps: %ld\n", best.epoch, best.val_psnr, result.steps);
  return 0;
}

int run_render(const std::string& scene_path, RenderConfig cfg, const std::string& out, const std::string& alpha_out) {
  Seconds timer;
  auto scene = load_scene(scene_path);
  auto result = render(scene, cfg);
  write_pfm(result.image, out);
  if (!alpha_out.empty()) write_pfm_grey(cfg.width, cfg.height, result.image.alpha, alpha_out);
  std::fprintf(stderr, "rendered %dx%d at %d spp in %.1f s\n", cfg.width, cfg.height, cfg.spp, timer.elapsed());
  return 0;
}

int run_eval(const std::string& ref, const std::string& test, const std::string& mask_path, double peak) {
  auto a = read_pfm(ref), b = read_pfm(test);
  if (a.width != b.width || a.height != b.height) throw ConfigError("images differ in size");
  std::vector<float> mask;
  if (!mask_path.empty()) {
    auto m = read_pfm(mask_path);
    if (m.width != a.width || m.height != a.height) throw ConfigError("mask differs in size");
    mask.resize(size_t(m.width) * m.height);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = m.rgb[3 * i];
  }
  std::printf("PSNR: %.4f\n", psnr(b.rgb, a.rgb, peak, mask));
  return 0;
}

int run_gradcheck_cmd(uint64_t seed) {
  Seconds timer;
  bool ok = true;
  for (const auto& r : rna::run_gradcheck(seed)) {
    std::printf("%-26s checked %6d  max rel err %.3e  tol %.0e  %s\n", r.name.c_str(), r.checked, r.max_rel_error,
                r.tolerance, r.passed() ? "ok" : "FAIL");
    ok = ok && r.passed();
  }
  std::printf("gradcheck %s in %.2f s\n", ok ? "passed" : "failed", timer.elapsed());
  return ok ? 0 : 1;
}

int run_info(const std::string& path) {
  auto bytes = read_file(path);
  auto h = read_asset_header(bytes);
  std::printf("kind: %s\n", h.at("kind").get<std::string>().c_str());
  std::printf("use_h: %s\n", h.at("use_h").get<bool>() ? "true" : "false");
  std::printf("visibility_hint: %s\n", h.at("visibility_hint").get<bool>() ? "true" : "false");
  std::printf("resolution: %d\n", h.at("resolution").get<int>());
  std::printf("channels: %d\n", h.at("channels").get<int>());
  std::printf("layer_sizes: %s\n", h.at("layer_sizes").dump().c_str());
  std::printf("output_activation: %s\n", h.at("output_activation").get<std::string>().c_str());
  std::printf("bounds: %s\n", h.at("bounds").dump().c_str());
  std::printf("metadata: %s\n", h.at("metadata").dump().c_str());
  auto params = h.at("parameter_count").get<size_t>();
  std::printf("parameter_count: %zu (%.2fM)\n", params, params / 1e6);
  std::printf("file_size_bytes: %zu (%.2f MB)\n", bytes.size(), bytes.size() / 1e6);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relightable neural assets: bake, train, render"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for all parallel stages (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* bake_cmd = app.add_subcommand("bake", "Render training and validation slices of an asset");
  std::string bake_scene, bake_out;
  BakeConfig bake_cfg;
  bake_cmd->add_option("--scene", bake_scene, "Scene JSON with one classical asset")->required()->check(CLI::ExistingFile);
  bake_cmd->add_option("--views", bake_cfg.view_count, "Training views")->check(CLI::PositiveNumber);
  bake_cmd->add_option("--val-views", bake_cfg.validation_views, "Validation views")->check(CLI::NonNegativeNumber);
  bake_cmd->add_option("--res", bake_cfg.resolution, "Slice resolution")->check(CLI::PositiveNumber);
  bake_cmd->add_option("--spp", bake_cfg.spp, "Samples per pixel")->check(CLI::PositiveNumber);
  bake_cmd->add_option("--seed", bake_cfg.seed, "Seed");
  bake_cmd->add_option("--max-depth", bake_cfg.max_depth, "Scattering vertices per path")->check(CLI::PositiveNumber);
  bake_cmd->add_option("--camera-radius", bake_cfg.camera_radius, "Camera sphere radius (0 = auto)");
  bake_cmd->add_flag("--hemisphere", bake_cfg.hemisphere_only, "Restrict cameras and lights to z >= 0");
  bake_cmd->add_option("--out", bake_out, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Fit a neural asset to a baked dataset");
  std::string train_data, train_config, train_out, train_log;
  std::optional<int> train_epochs;
  std::optional<uint64_t> train_seed;
  bool init_only = false;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--config", train_config, "Training config JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_out, "Output asset (best checkpoint)")->required();
  train_cmd->add_option("--epochs", train_epochs, "Override epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_seed, "Override seed");
  train_cmd->add_option("--log", train_log, "CSV log path (default OUT.csv)");
  train_cmd->add_flag("--init-only", init_only, "Write the initialized model without training");

  auto* render_cmd = app.add_subcommand("render", "Path trace a scene that may contain neural assets");
  std::string render_scene, render_out, render_alpha, strategy = "mis";
  RenderConfig render_cfg;
  int render_res = 256;
  render_cmd->add_option("--scene", render_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--res", render_res, "Image width and height")->check(CLI::PositiveNumber);
  render_cmd->add_option("--spp", render_cfg.spp, "Samples per pixel")->check(CLI::PositiveNumber);
  render_cmd->add_option("--seed", render_cfg.seed, "Seed");
  render_cmd->add_option("--max-depth", render_cfg.max_depth, "Path vertices")->check(CLI::PositiveNumber);
  render_cmd->add_option("--strategy", strategy, "mis | light | bsdf")->check(CLI::IsMember({"mis", "light", "bsdf"}));
  render_cmd->add_flag("--tonemap", render_cfg.tonemap, "Apply x / (1 + x)");
  render_cmd->add_option("--alpha-out", render_alpha, "Also write the coverage mask as a grey PFM");
  render_cmd->add_option("--out", render_out, "Output PFM")->required();

  auto* eval_cmd = app.add_subcommand("eval", "PSNR between two PFM images");
  std::string eval_ref, eval_test, eval_mask;
  double eval_peak = 20.0;
  eval_cmd->add_option("--ref", eval_ref, "Reference PFM")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", eval_test, "Test PFM")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--alpha-mask", eval_mask, "Mask PFM; non-zero pixels are compared")->check(CLI::ExistingFile);
  eval_cmd->add_option("--peak", eval_peak, "Peak value")->check(CLI::PositiveNumber);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  uint64_t grad_seed = 7;
  grad_cmd->add_option("--seed", grad_seed, "Seed");

  auto* info_cmd = app.add_subcommand("info", "Print an asset's header");
  std::string info_path;
  info_cmd->add_option("asset", info_path, "RNA1 asset")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*bake_cmd) {
      bake_cfg.threads = threads;
      return run_bake(bake_scene, bake_cfg, bake_out);
    }
    if (*train_cmd)
      return run_train(train_data, train_config, train_out, train_epochs, train_seed, train_log, init_only, threads);
    if (*render_cmd) {
      render_cfg.width = render_cfg.height = render_res;
      render_cfg.threads = threads;
      render_cfg.strategy = strategy == "light" ? Strategy::light_only
                            : strategy == "bsdf" ? Strategy::bsdf_only
                                                 : Strategy::mis;
      return run_render(render_scene, render_cfg, render_out, render_alpha);
    }
    if (*eval_cmd) return run_eval(eval_ref, eval_test, eval_mask, eval_peak);
    if (*grad_cmd) return run_gradcheck_cmd(grad_seed);
    if (*info_cmd) return run_info(info_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
