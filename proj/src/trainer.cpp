#include "rna/trainer.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>

#include "rna/errors.hpp"
#include "rna/parallel.hpp"

namespace rna {

using nlohmann::json;

namespace {
// Chunk buffers processed per reduction wave; bounds memory, not results.
constexpr int chunks_per_wave = 8;
constexpr uint64_t shuffle_stream = 0x5f1ce;
}  // namespace

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(c.lr0 > 0)) throw ConfigError("lr0 must be > 0");
  if (c.lr_halving_period < 1) throw ConfigError("lr_halving_period must be >= 1");
  if (!(c.blur_start >= 1)) throw ConfigError("blur_start must be >= 1");
  if (c.blur_end_epoch < -1) throw ConfigError("blur_end_epoch must be >= 0 (or -1 for auto)");
  if (c.keep_best < 1) throw ConfigError("keep_best must be >= 1");
  if (c.chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
  if (c.model.resolution < 2 || c.model.channels < 1 || c.model.hidden_layers < 1 || c.model.width < 1)
    throw ConfigError("invalid model shape");
  if (!(c.adam.beta1 >= 0 && c.adam.beta1 < 1 && c.adam.beta2 >= 0 && c.adam.beta2 < 1 && c.adam.epsilon > 0))
    throw ConfigError("invalid Adam hyperparameters");
}

TrainConfig parse_train_config(const json& j, TrainConfig c) {
  static const std::set<std::string> keys = {
      "epochs", "lr0", "lr_halving_period", "blur_start", "blur_end_epoch", "adam_beta1", "adam_beta2",
      "adam_epsilon", "keep_best", "seed", "resolution", "channels", "hidden_layers", "width",
      "output_activation", "use_h", "visibility_hint", "chunk_size", "threads", "mean_output_bias"};
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) throw ConfigError("training config: unknown key '" + k + "'");
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.lr0 = j.value("lr0", c.lr0);
    c.lr_halving_period = j.value("lr_halving_period", c.lr_halving_period);
    c.blur_start = j.value("blur_start", c.blur_start);
    c.blur_end_epoch = j.value("blur_end_epoch", c.blur_end_epoch);
    c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
    c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
    c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
    c.keep_best = j.value("keep_best", c.keep_best);
    c.seed = j.value("seed", c.seed);
    c.model.resolution = j.value("resolution", c.model.resolution);
    c.model.channels = j.value("channels", c.model.channels);
    c.model.hidden_layers = j.value("hidden_layers", c.model.hidden_layers);
    c.model.width = j.value("width", c.model.width);
    if (j.contains("output_activation")) {
      auto a = j["output_activation"].get<std::string>();
      if (a == "softplus") c.model.output_activation = OutputActivation::softplus;
      else if (a == "identity_clamp") c.model.output_activation = OutputActivation::identity_clamp;
      else throw ConfigError("unknown output_activation '" + a + "'");
    }
    c.use_h = j.value("use_h", c.use_h);
    c.visibility_hint = j.value("visibility_hint", c.visibility_hint);
    c.chunk_size = j.value("chunk_size", c.chunk_size);
    c.threads = j.value("threads", c.threads);
    c.mean_output_bias = j.value("mean_output_bias", c.mean_output_bias);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  validate(c);
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training config " + path.string());
  try {
    return parse_train_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("training config " + path.string() + ": " + e.what());
  }
}

double lr_at(int epoch, const TrainConfig& c) {
  require(epoch >= 0, "epoch must be >= 0");
  return c.lr0 * std::pow(0.5, epoch / c.lr_halving_period);
}

double blur_footprint_at(long iteration, long total, double blur_start) {
  if (total <= 0 || iteration >= total) return 1.0;
  return blur_start - (blur_start - 1) * double(iteration) / double(total);
}

int blur_end_epoch(const TrainConfig& c) {
  return c.blur_end_epoch >= 0 ? c.blur_end_epoch : std::max(1, int(std::lround(0.2 * c.epochs)));
}

double sample_loss(const Rgb& pred_lit, const Rgb& pred_shadowed, const Rgb& target, bool visible,
                   Rgb* grad_lit, Rgb* grad_shadowed) {
  for (int c = 0; c < 3; ++c) require(target[c] >= 0, "loss target must be non-negative");
  const auto& p = visible ? pred_lit : pred_shadowed;
  Rgb g;
  double l = 0;
  for (int c = 0; c < 3; ++c) {
    auto r = std::log1p(p[c]) - std::log1p(target[c]);
    l += r * r;
    g[c] = 2.0 / 3.0 * r / (1 + p[c]);
  }
  if (grad_lit) *grad_lit = visible ? g : Rgb{};
  if (grad_shadowed) *grad_shadowed = visible ? Rgb{} : g;
  return l / 3;
}

// -----------------------------------------------------------------------------
// DATA
// -----------------------------------------------------------------------------

std::vector<TrainSample> samples_from_slice(const TrainingSlice& slice) {
  auto kind = slice.kind();
  const auto& alpha = slice.plane("alpha").data;
  const auto& radiance = slice.plane("radiance").data;
  const auto& position = slice.plane("position").data;
  const auto& view_dir = slice.plane("view_dir").data;
  const auto& light_dir = slice.plane("light_dir").data;
  const auto& visibility = slice.plane("visibility").data;
  const auto& frame = slice.plane(kind == AssetKind::surface ? "normal" : "tangent").data;
  const std::vector<float>* h = kind == AssetKind::fiber ? &slice.plane("h").data : nullptr;
  std::vector<TrainSample> out;
  for (size_t p = 0; p < alpha.size(); ++p) {
    if (alpha[p] == 0) continue;
    TrainSample s{};
    for (int c = 0; c < 3; ++c) {
      s.position[c] = position[3 * p + c];
      s.wo[c] = view_dir[3 * p + c];
      s.wi[c] = light_dir[3 * p + c];
      s.frame[c] = frame[3 * p + c];
      s.target[c] = radiance[3 * p + c];
      if (s.target[c] < 0) throw SchemaError("negative radiance in training slice");
    }
    s.h = h ? (*h)[p] : 0.0f;
    s.visible = visibility[p] != 0;
    out.push_back(s);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
  Dataset d;
  try {
    d.manifest = json::parse(in);
    d.kind = asset_kind_from_string(d.manifest.at("kind").get<std::string>());
    auto b = d.manifest.at("bounds");
    auto v3 = [](const json& j) { return Vec3{j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; };
    d.bounds = {v3(b.at("min")), v3(b.at("max"))};
    d.peak = d.manifest.value("clamp_direct", 20.0);
    if (d.manifest.contains("fiber_radius")) d.fiber_radius = d.manifest["fiber_radius"].get<double>();
    for (const auto* part : {"train", "val"}) {
      auto& target = std::string(part) == "train" ? d.train : d.val;
      for (const auto& entry : d.manifest.at(part)) {
        auto slice = read_slice(dir / entry.at("file").get<std::string>(), d.kind);
        target.push_back(samples_from_slice(slice));
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError("dataset manifest: " + std::string(e.what()));
  }
  if (d.train.empty()) throw ConfigError("dataset has no training slices");
  return d;
}

// -----------------------------------------------------------------------------
// OPTIMIZER
// -----------------------------------------------------------------------------

AdamState AdamState::for_asset(const NeuralAsset& asset) {
  AdamState s;
  s.grid_m.assign(asset.grid.data.size(), 0.0f);
  s.grid_v.assign(asset.grid.data.size(), 0.0f);
  s.mlp_m = MlpGradients<float>::zeros_like(asset.mlp);
  s.mlp_v = MlpGradients<float>::zeros_like(asset.mlp);
  return s;
}

namespace {
template <typename M>
std::span<float> span_of(M& m) {
  return {m.data(), size_t(m.size())};
}
template <typename M>
std::span<const float> cspan_of(const M& m) {
  return {m.data(), size_t(m.size())};
}
}  // namespace

void adam_step(NeuralAsset& asset, const std::vector<float>& grid_grad, const MlpGradients<float>& mlp_grad,
               AdamState& state, double lr, const AdamHyper& hyper) {
  require(grid_grad.size() == asset.grid.data.size(), "adam: grid gradient shape mismatch");
  require(mlp_grad.weights.size() == asset.mlp.weights.size(), "adam: MLP gradient shape mismatch");
  ++state.step;
  adam_update<float>(asset.grid.data, grid_grad, state.grid_m, state.grid_v, state.step, lr, hyper);
  for (size_t l = 0; l < asset.mlp.weights.size(); ++l) {
    adam_update<float>(span_of(asset.mlp.weights[l]), cspan_of(mlp_grad.weights[l]), span_of(state.mlp_m.weights[l]),
                       span_of(state.mlp_v.weights[l]), state.step, lr, hyper);
    adam_update<float>(span_of(asset.mlp.biases[l]), cspan_of(mlp_grad.biases[l]), span_of(state.mlp_m.biases[l]),
                       span_of(state.mlp_v.biases[l]), state.step, lr, hyper);
  }
}

// -----------------------------------------------------------------------------
// EVALUATION
// -----------------------------------------------------------------------------

std::vector<Rgb> predict(const NeuralAsset& asset, std::span<const TrainSample> samples, int threads) {
  std::vector<Rgb> out(samples.size());
  constexpr size_t chunk = 1024;
  auto chunks = int((samples.size() + chunk - 1) / chunk);
  parallel_for(chunks, threads, [&](int ci) {
    auto begin = size_t(ci) * chunk, end = std::min(samples.size(), begin + chunk);
    Matrix<float> x(asset.input_size(), Eigen::Index(end - begin));
    for (size_t i = begin; i < end; ++i)
      assemble_input(asset.grid, asset.kind, asset.use_h, samples[i].input(), x.col(Eigen::Index(i - begin)).data());
    MlpCache<float> cache;
    mlp_forward_batch(asset.mlp, x, cache);
    for (size_t i = begin; i < end; ++i) {
      auto head = (asset.visibility_hint && !samples[i].visible) ? 3 : 0;
      auto col = Eigen::Index(i - begin);
      out[i] = {cache.output(head, col), cache.output(head + 1, col), cache.output(head + 2, col)};
    }
  });
  return out;
}

double validation_psnr(const NeuralAsset& asset, const std::vector<std::vector<TrainSample>>& slices, double peak,
                       int threads) {
  require(!slices.empty(), "validation set is empty");
  double sum = 0;
  for (const auto& s : slices) {
    if (s.empty()) {
      sum += psnr_cap_db;
      continue;
    }
    auto pred = predict(asset, s, threads);
    std::vector<float> a(3 * s.size()), b(3 * s.size());
    for (size_t i = 0; i < s.size(); ++i)
      for (int c = 0; c < 3; ++c) {
        a[3 * i + c] = float(pred[i][c]);
        b[3 * i + c] = s[i].target[c];
      }
    sum += psnr(a, b, peak);
  }
  return sum / double(slices.size());
}

// -----------------------------------------------------------------------------
// TRAINING LOOP
// -----------------------------------------------------------------------------

void init_output_bias(NeuralAsset& asset, const std::vector<std::vector<TrainSample>>& slices) {
  std::array<double, 6> sum{};
  std::array<double, 2> count{};
  for (const auto& slice : slices)
    for (const auto& s : slice) {
      auto head = asset.visibility_hint && !s.visible ? 1 : 0;
      count[head] += 1;
      for (int c = 0; c < 3; ++c) sum[3 * head + c] += s.target[c];
    }
  auto& bias = asset.mlp.biases.back();
  for (int k = 0; k < 6; ++k) {
    auto mean = std::max(sum[k] / std::max(count[k / 3], 1.0), 1e-4);
    bias[k] = float(asset.mlp.output_activation == OutputActivation::softplus ? std::log(std::expm1(mean)) : mean);
  }
}

TrainResult train(const Dataset& data, const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  validate(config);
  if (data.train.empty()) throw ConfigError("dataset has no training slices");
  if (data.val.empty()) throw ConfigError("dataset has no validation slices");
  auto asset = make_asset(data.kind, config.use_h, config.model, data.bounds, config.seed);
  asset.visibility_hint = config.visibility_hint;
  if (config.mean_output_bias) init_output_bias(asset, data.train);
  auto state = AdamState::for_asset(asset);
  std::vector<float> grid_grad(asset.grid.data.size());
  auto mlp_grad = MlpGradients<float>::zeros_like(asset.mlp);
  std::vector<ChunkWork<float>> work(chunks_per_wave);

  auto slices = int(data.train.size());
  long blur_total = long(blur_end_epoch(config)) * slices;
  TrainResult result;
  long iteration = 0;
  std::vector<int> order(slices);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = 0; i < slices; ++i) order[i] = i;
    Rng shuffle_rng(stream_seed(config.seed, shuffle_stream, uint64_t(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    auto lr = lr_at(epoch, config);
    double loss_sum = 0;
    size_t sample_count = 0;
    double blur = 1;
    for (auto si : order) {
      const auto& samples = data.train[si];
      if (samples.empty()) continue;
      std::fill(grid_grad.begin(), grid_grad.end(), 0.0f);
      mlp_grad.set_zero();
      auto chunk = size_t(config.chunk_size);
      auto chunk_count = int((samples.size() + chunk - 1) / chunk);
      auto inv = 1.0 / double(samples.size());
      for (int wave = 0; wave < chunk_count; wave += chunks_per_wave) {
        auto in_wave = std::min(chunks_per_wave, chunk_count - wave);
        parallel_for(in_wave, config.threads, [&](int k) {
          auto begin = size_t(wave + k) * chunk;
          auto end = std::min(samples.size(), begin + chunk);
          chunk_forward_backward(asset.grid, asset.mlp, asset.kind, asset.use_h, asset.visibility_hint,
                                 std::span(samples).subspan(begin, end - begin), inv, work[k]);
        });
        for (int k = 0; k < in_wave; ++k) {
          mlp_grad += work[k].mlp_grad;
          chunk_scatter(asset.grid, work[k], grid_grad);
          loss_sum += work[k].loss_sum;
        }
      }
      sample_count += samples.size();
      adam_step(asset, grid_grad, mlp_grad, state, lr, config.adam);
      blur = blur_footprint_at(iteration, blur_total, config.blur_start);
      if (blur > 1) blur_grids(asset.grid, blur);
      ++iteration;
    }
    EpochLog log;
    log.epoch = epoch;
    log.loss = sample_count ? loss_sum / double(sample_count) : 0;
    log.val_psnr = validation_psnr(asset, data.val, data.peak, config.threads);
    log.lr = lr;
    log.blur = blur;
    result.history.push_back(log);

    asset.metadata = {{"seed", config.seed},     {"epoch", epoch},         {"epochs", config.epochs},
                      {"loss", log.loss},        {"val_psnr", log.val_psnr}};
    auto& best = result.best;
    if (int(best.size()) < config.keep_best || log.val_psnr > best.back().val_psnr) {
      best.push_back({asset, epoch, log.val_psnr});
      std::stable_sort(best.begin(), best.end(), [](const Checkpoint& a, const Checkpoint& b) {
        return a.val_psnr > b.val_psnr;
      });
      if (int(best.size()) > config.keep_best) best.pop_back();
    }
    if (on_epoch) on_epoch(log);
  }
  result.last = {asset, config.epochs - 1, result.history.back().val_psnr};
  result.steps = iteration;
  return result;
}

void write_training_log(const std::vector<EpochLog>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,loss,val_psnr,lr,blur\n";
  char line[160];
  for (const auto& e : history) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.6f,%.9g,%.6f\n", e.epoch, e.loss, e.val_psnr, e.lr, e.blur);
    out << line;
  }
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace rna
