#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "rna/image_io.hpp"
#include "rna/neural_asset.hpp"

namespace rna {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 250;
  double lr0 = 1e-3;
  int lr_halving_period = 50;
  double blur_start = 4;
  int blur_end_epoch = -1;  // -1 = 20% of epochs
  AdamHyper adam;
  int keep_best = 3;
  uint64_t seed = 1;
  ModelShape model;
  bool use_h = true;
  bool visibility_hint = true;
  int chunk_size = 1024;  // samples per gradient chunk; fixes the reduction order
  int threads = 0;
  // Start each output head at the mean training target instead of zero.
  bool mean_output_bias = true;
};

// Throws ConfigError for out-of-range values.
void validate(const TrainConfig& config);
// Keys mirror TrainConfig (adam_beta1, adam_beta2, adam_epsilon and the
// model fields resolution, channels, hidden_layers, width,
// output_activation at top level). Unknown keys are rejected.
TrainConfig parse_train_config(const nlohmann::json& j, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path);

double lr_at(int epoch, const TrainConfig& config);
// Linear decay from blur_start to 1 over total_schedule_iters, then 1.
double blur_footprint_at(long iteration, long total_schedule_iters, double blur_start = 4);
int blur_end_epoch(const TrainConfig& config);

// Per-sample loss: mean over channels of (log1p(pred) - log1p(target))^2
// on the head selected by `visible`. Gradients (optional) are written for
// both heads; the unselected one is exactly zero.
double sample_loss(const Rgb& pred_lit, const Rgb& pred_shadowed, const Rgb& target, bool visible,
                   Rgb* grad_lit = nullptr, Rgb* grad_shadowed = nullptr);

// Bias-corrected Adam on one parameter block. `step` is 1 for the first update.
template <typename Scalar>
void adam_update(std::span<Scalar> params, std::span<const Scalar> grads, std::span<Scalar> m,
                 std::span<Scalar> v, long step, double lr, const AdamHyper& h) {
  require(params.size() == grads.size() && params.size() == m.size() && params.size() == v.size(),
          "adam: shape mismatch");
  require(step >= 1, "adam: step starts at 1");
  auto c1 = 1 - std::pow(h.beta1, double(step));
  auto c2 = 1 - std::pow(h.beta2, double(step));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    double mi = h.beta1 * double(m[i]) + (1 - h.beta1) * g;
    double vi = h.beta2 * double(v[i]) + (1 - h.beta2) * g * g;
    m[i] = Scalar(mi);
    v[i] = Scalar(vi);
    params[i] = Scalar(double(params[i]) - lr * (mi / c1) / (std::sqrt(vi / c2) + h.epsilon));
  }
}

// One training record with its fields in training space.
struct TrainSample {
  float position[3];
  float wo[3];
  float wi[3];
  float frame[3];
  float h;
  float target[3];
  uint8_t visible;

  ShadingInput input() const {
    return {{position[0], position[1], position[2]},
            {wo[0], wo[1], wo[2]},
            {wi[0], wi[1], wi[2]},
            {frame[0], frame[1], frame[2]},
            double(h)};
  }
};

// alpha = 1 pixels of a slice.
std::vector<TrainSample> samples_from_slice(const TrainingSlice& slice);

struct Dataset {
  AssetKind kind = AssetKind::surface;
  Bounds3 bounds;
  double peak = 20.0;  // PSNR peak (the direct clamp)
  std::optional<double> fiber_radius;
  std::vector<std::vector<TrainSample>> train;
  std::vector<std::vector<TrainSample>> val;
  nlohmann::json manifest;
};

Dataset load_dataset(const std::filesystem::path& dir);

// Forward + loss + backward for one chunk, generic over the scalar type so
// the finite-difference harness runs the training code in double.
template <typename Scalar>
struct ChunkWork {
  Matrix<Scalar> input;
  std::vector<TriplaneTaps<Scalar>> taps;
  MlpCache<Scalar> cache;
  Matrix<Scalar> upstream;
  Matrix<Scalar> input_grad;
  MlpGradients<Scalar> mlp_grad;
  double loss_sum = 0;
};

template <typename Scalar>
void chunk_forward_backward(const TriplaneGrid<Scalar>& grid, const Mlp<Scalar>& mlp, AssetKind kind,
                            bool use_h, bool visibility_hint, std::span<const TrainSample> samples,
                            double inv_normalizer, ChunkWork<Scalar>& work) {
  auto n = Eigen::Index(samples.size());
  auto in_size = grid.channels + property_size(kind, use_h);
  require(in_size == mlp.input_size(), "dataset layout does not match the decoder input");
  work.input.resize(in_size, n);
  work.taps.resize(samples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto in = samples[i].input();
    work.taps[i] = triplane_taps(grid, in.position);
    triplane_gather(grid, work.taps[i], work.input.col(i).data());
    write_properties(kind, use_h, in, work.input.col(i).data() + grid.channels);
  }
  mlp_forward_batch(mlp, work.input, work.cache);
  work.upstream.setZero(mlp_output_size, n);
  work.loss_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[i];
    auto head = (visibility_hint && !s.visible) ? 3 : 0;
    double l = 0;
    for (int c = 0; c < 3; ++c) {
      double p = work.cache.output(head + c, i);
      double r = std::log1p(p) - std::log1p(double(s.target[c]));
      l += r * r;
      work.upstream(head + c, i) = Scalar(2.0 / 3.0 * r / (1 + p) * inv_normalizer);
    }
    work.loss_sum += l / 3;
  }
  if (work.mlp_grad.weights.size() != mlp.weights.size()) work.mlp_grad = MlpGradients<Scalar>::zeros_like(mlp);
  else work.mlp_grad.set_zero();
  mlp_backward_batch(mlp, work.cache, work.upstream, work.mlp_grad, &work.input_grad);
}

template <typename Scalar>
void chunk_scatter(const TriplaneGrid<Scalar>& grid, const ChunkWork<Scalar>& work,
                   std::vector<Scalar>& grid_grad) {
  for (size_t i = 0; i < work.taps.size(); ++i)
    triplane_scatter(grid, work.taps[i], work.input_grad.col(Eigen::Index(i)).data(), grid_grad.data());
}

// Mean loss over `samples` and its gradient (single chunk). Used by the
// finite-difference harness.
template <typename Scalar>
double batch_loss_and_grad(const TriplaneGrid<Scalar>& grid, const Mlp<Scalar>& mlp, AssetKind kind,
                           bool use_h, bool visibility_hint, std::span<const TrainSample> samples,
                           MlpGradients<Scalar>* mlp_grad, std::vector<Scalar>* grid_grad) {
  ChunkWork<Scalar> work;
  auto inv = 1.0 / double(samples.size());
  chunk_forward_backward(grid, mlp, kind, use_h, visibility_hint, samples, inv, work);
  if (mlp_grad) *mlp_grad = work.mlp_grad;
  if (grid_grad) {
    grid_grad->assign(grid.data.size(), Scalar(0));
    chunk_scatter(grid, work, *grid_grad);
  }
  return work.loss_sum * inv;
}

struct AdamState {
  long step = 0;
  std::vector<float> grid_m, grid_v;
  MlpGradients<float> mlp_m, mlp_v;

  static AdamState for_asset(const NeuralAsset& asset);
};

void adam_step(NeuralAsset& asset, const std::vector<float>& grid_grad, const MlpGradients<float>& mlp_grad,
               AdamState& state, double lr, const AdamHyper& hyper);

// Model outputs for a sample list (selected head per the asset's hint mode).
std::vector<Rgb> predict(const NeuralAsset& asset, std::span<const TrainSample> samples, int threads = 0);

// Mean over slices of the per-slice PSNR (alpha = 1 pixels only).
double validation_psnr(const NeuralAsset& asset, const std::vector<std::vector<TrainSample>>& slices,
                       double peak, int threads = 0);

struct EpochLog {
  int epoch = 0;
  double loss = 0;
  double val_psnr = 0;
  double lr = 0;
  double blur = 1;
};

struct Checkpoint {
  NeuralAsset asset;
  int epoch = 0;
  double val_psnr = 0;
};

struct TrainResult {
  std::vector<Checkpoint> best;  // highest PSNR first, at most keep_best
  Checkpoint last;
  std::vector<EpochLog> history;
  long steps = 0;
};

// Sets the decoder's output biases so each head initially predicts the mean
// target of the samples it is trained on (floored at 1e-4).
void init_output_bias(NeuralAsset& asset, const std::vector<std::vector<TrainSample>>& slices);

// Fits a fresh asset to the dataset. Output is a function of (dataset,
// config) only; the thread count does not change any value.
TrainResult train(const Dataset& data, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

void write_training_log(const std::vector<EpochLog>& history, const std::filesystem::path& path);

}  // namespace rna
