#include "rna/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rna/trainer.hpp"

namespace rna {

double relative_error(double analytic, double numeric) {
  auto scale = std::max({std::abs(analytic), std::abs(numeric), gradcheck_floor});
  return std::abs(analytic - numeric) / scale;
}

namespace {

constexpr double mlp_tolerance = 1e-6;
constexpr double end_to_end_tolerance = 1e-5;

// Checks d f / d p for every p in `params` against `analytic`.
void check_block(GradcheckResult& r, double* params, const double* analytic, size_t count,
                 const std::function<double()>& f) {
  for (size_t i = 0; i < count; ++i) {
    auto saved = params[i];
    params[i] = saved + gradcheck_step;
    auto up = f();
    params[i] = saved - gradcheck_step;
    auto down = f();
    params[i] = saved;
    auto numeric = (up - down) / (2 * gradcheck_step);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric));
    ++r.checked;
  }
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vec3 random_unit(Rng& rng) { return sample_uniform_sphere(rng.uniform(), rng.uniform()); }

void check_mlp(Rng& rng, std::vector<GradcheckResult>& out) {
  auto mlp = make_mlp<double>(12, 2, 8, rng);
  for (auto& b : mlp.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = uniform(rng, -0.2, 0.2);
  Matrix<double> x(12, 4), upstream(mlp_output_size, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
  for (Eigen::Index i = 0; i < upstream.size(); ++i) upstream.data()[i] = uniform(rng, -1, 1);
  auto f = [&] {
    MlpCache<double> cache;
    mlp_forward_batch(mlp, x, cache);
    return cache.output.cwiseProduct(upstream).sum();
  };
  MlpCache<double> cache;
  mlp_forward_batch(mlp, x, cache);
  auto grads = MlpGradients<double>::zeros_like(mlp);
  Matrix<double> input_grad;
  mlp_backward_batch(mlp, cache, upstream, grads, &input_grad);

  GradcheckResult w{"mlp weights", 0, mlp_tolerance, 0}, b{"mlp biases", 0, mlp_tolerance, 0},
      in{"mlp input", 0, mlp_tolerance, 0};
  for (int l = 0; l < mlp.layer_count(); ++l) {
    check_block(w, mlp.weights[l].data(), grads.weights[l].data(), size_t(mlp.weights[l].size()), f);
    check_block(b, mlp.biases[l].data(), grads.biases[l].data(), size_t(mlp.biases[l].size()), f);
  }
  check_block(in, x.data(), input_grad.data(), size_t(x.size()), f);
  out.push_back(w);
  out.push_back(b);
  out.push_back(in);
}

void check_triplane(Rng& rng, std::vector<GradcheckResult>& out) {
  TriplaneGrid<double> grid(8, 4, {{-1, -0.5, 0}, {1, 0.5, 2}});
  init_triplane(grid, rng, 1.0);
  GradcheckResult r{"triplane texels", 0, mlp_tolerance, 0};
  for (int q = 0; q < 4; ++q) {
    Vec3 x{uniform(rng, -1, 1), uniform(rng, -0.5, 0.5), uniform(rng, 0, 2)};
    std::vector<double> upstream(grid.channels);
    for (auto& u : upstream) u = uniform(rng, -1, 1);
    auto g = triplane_query_grad<double>(grid, x, upstream);
    std::vector<double> dense(grid.data.size(), 0.0);
    for (const auto& [i, v] : g.entries) dense[i] += v;
    auto f = [&] {
      auto z = triplane_query(grid, x);
      double s = 0;
      for (int c = 0; c < grid.channels; ++c) s += z[c] * upstream[c];
      return s;
    };
    check_block(r, grid.data.data(), dense.data(), grid.data.size(), f);
  }
  out.push_back(r);
}

std::vector<TrainSample> random_samples(Rng& rng, AssetKind kind, const Bounds3& bounds, int count) {
  std::vector<TrainSample> s(count);
  for (int i = 0; i < count; ++i) {
    auto& t = s[i];
    auto e = bounds.extent();
    Vec3 p{bounds.min.x + e.x * rng.uniform(), bounds.min.y + e.y * rng.uniform(), bounds.min.z + e.z * rng.uniform()};
    auto wo = random_unit(rng), wi = random_unit(rng), fr = random_unit(rng);
    for (int c = 0; c < 3; ++c) {
      t.position[c] = float(p[c]);
      t.wo[c] = float(wo[c]);
      t.wi[c] = float(wi[c]);
      t.frame[c] = float(fr[c]);
      t.target[c] = float(uniform(rng, 0, 3));
    }
    t.h = kind == AssetKind::fiber ? float(uniform(rng, -1, 1)) : 0.0f;
    t.visible = i % 2;
  }
  return s;
}

void check_end_to_end(Rng& rng, AssetKind kind, std::vector<GradcheckResult>& out) {
  Bounds3 bounds{{-1, -1, -1}, {1, 1, 1}};
  auto use_h = kind == AssetKind::fiber;
  TriplaneGrid<double> grid(8, 4, bounds);
  init_triplane(grid, rng, 0.5);
  auto mlp = make_mlp<double>(grid.channels + property_size(kind, use_h), 2, 16, rng);
  for (auto& b : mlp.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = uniform(rng, -0.2, 0.2);
  auto samples = random_samples(rng, kind, bounds, 8);
  MlpGradients<double> mlp_grad;
  std::vector<double> grid_grad;
  batch_loss_and_grad(grid, mlp, kind, use_h, true, samples, &mlp_grad, &grid_grad);
  auto f = [&] { return batch_loss_and_grad<double>(grid, mlp, kind, use_h, true, samples, nullptr, nullptr); };
  auto prefix = "end-to-end " + to_string(kind);
  GradcheckResult texels{prefix + " texels", 0, end_to_end_tolerance, 0};
  GradcheckResult params{prefix + " mlp", 0, end_to_end_tolerance, 0};
  check_block(texels, grid.data.data(), grid_grad.data(), grid.data.size(), f);
  for (int l = 0; l < mlp.layer_count(); ++l) {
    check_block(params, mlp.weights[l].data(), mlp_grad.weights[l].data(), size_t(mlp.weights[l].size()), f);
    check_block(params, mlp.biases[l].data(), mlp_grad.biases[l].data(), size_t(mlp.biases[l].size()), f);
  }
  out.push_back(texels);
  out.push_back(params);
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck(uint64_t seed) {
  Rng rng(stream_seed(seed, 0x6c));
  std::vector<GradcheckResult> out;
  check_mlp(rng, out);
  check_triplane(rng, out);
  check_end_to_end(rng, AssetKind::surface, out);
  check_end_to_end(rng, AssetKind::fiber, out);
  return out;
}

}  // namespace rna
