#include "rna/neural_asset.hpp"

#include "rna/binary_io.hpp"
#include "rna/errors.hpp"

namespace rna {

using nlohmann::json;

std::string to_string(AssetKind kind) { return kind == AssetKind::fiber ? "fiber" : "surface"; }

AssetKind asset_kind_from_string(const std::string& s) {
  if (s == "surface") return AssetKind::surface;
  if (s == "fiber") return AssetKind::fiber;
  throw SchemaError("unknown asset kind '" + s + "'");
}

NeuralAsset make_asset(AssetKind kind, bool use_h, const ModelShape& shape, const Bounds3& bounds,
                       uint64_t seed) {
  NeuralAsset a;
  a.kind = kind;
  a.use_h = kind == AssetKind::fiber && use_h;
  a.grid = TriplaneGrid<float>(shape.resolution, shape.channels, bounds);
  Rng grid_rng(stream_seed(seed, 1));
  init_triplane(a.grid, grid_rng);
  Rng mlp_rng(stream_seed(seed, 2));
  a.mlp = make_mlp<float>(a.input_size(), shape.hidden_layers, shape.width, mlp_rng,
                          shape.output_activation);
  return a;
}

NeuralOutput evaluate(const NeuralAsset& asset, const ShadingInput& in) {
  Matrix<float> x(asset.input_size(), 1);
  assemble_input(asset.grid, asset.kind, asset.use_h, in, x.data());
  thread_local MlpCache<float> cache;
  mlp_forward_batch(asset.mlp, x, cache);
  NeuralOutput out;
  for (int c = 0; c < 3; ++c) {
    out.lit[c] = cache.output(c, 0);
    out.shadowed[c] = cache.output(3 + c, 0);
  }
  if (!asset.visibility_hint) out.shadowed = out.lit;
  return out;
}

// -----------------------------------------------------------------------------
// SERIALIZATION
// -----------------------------------------------------------------------------

namespace {

constexpr char asset_magic[4] = {'R', 'N', 'A', '1'};

std::string activation_name(OutputActivation a) {
  return a == OutputActivation::softplus ? "softplus" : "identity_clamp";
}

OutputActivation activation_from_name(const std::string& s) {
  if (s == "softplus") return OutputActivation::softplus;
  if (s == "identity_clamp") return OutputActivation::identity_clamp;
  throw SchemaError("unknown output activation '" + s + "'");
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw SchemaError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json make_header(const NeuralAsset& a) {
  json h;
  h["kind"] = to_string(a.kind);
  h["use_h"] = a.use_h;
  h["visibility_hint"] = a.visibility_hint;
  h["resolution"] = a.grid.resolution;
  h["channels"] = a.grid.channels;
  h["layer_sizes"] = a.mlp.sizes();
  h["output_activation"] = activation_name(a.mlp.output_activation);
  h["bounds"] = {{"min", vec_json(a.grid.bounds.min)}, {"max", vec_json(a.grid.bounds.max)}};
  h["parameter_count"] = a.parameter_count();
  h["metadata"] = a.metadata;
  auto tensors = json::array();
  auto r = a.grid.resolution, c = a.grid.channels;
  tensors.push_back({{"name", "triplane"}, {"shape", {3, r, r, c}}});
  for (int l = 0; l < a.mlp.layer_count(); ++l) {
    const auto& w = a.mlp.weights[l];
    tensors.push_back({{"name", "mlp." + std::to_string(l) + ".weight"}, {"shape", {w.rows(), w.cols()}}});
    tensors.push_back({{"name", "mlp." + std::to_string(l) + ".bias"}, {"shape", {w.rows()}}});
  }
  h["tensors"] = tensors;
  return h;
}

}  // namespace

std::vector<uint8_t> serialize_asset(const NeuralAsset& a) {
  ByteWriter w;
  w.bytes(asset_magic, 4);
  w.u32(asset_format_version);
  auto header = make_header(a).dump();
  w.u32(static_cast<uint32_t>(header.size()));
  w.text(header);
  w.f32s(a.grid.data);
  for (int l = 0; l < a.mlp.layer_count(); ++l) {
    const auto& m = a.mlp.weights[l];
    // Row-major on disk.
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(m(i, j));
    const auto& b = a.mlp.biases[l];
    w.f32s(std::span<const float>(b.data(), size_t(b.size())));
  }
  return w.take();
}

namespace {

json read_header(ByteReader& r) {
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, asset_magic, 4) != 0) throw FormatError("not an RNA1 asset (bad magic)");
  auto version = r.u32();
  if (version != asset_format_version)
    throw FormatError("unsupported asset version " + std::to_string(version));
  auto len = r.u32();
  auto text = r.text(len);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("asset header is not valid JSON: ") + e.what());
  }
}

}  // namespace

json read_asset_header(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "asset");
  return read_header(r);
}

NeuralAsset deserialize_asset(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "asset");
  auto h = read_header(r);
  NeuralAsset a;
  try {
    a.kind = asset_kind_from_string(h.at("kind").get<std::string>());
    a.use_h = h.at("use_h").get<bool>();
    a.visibility_hint = h.at("visibility_hint").get<bool>();
    Bounds3 bounds{vec_from_json(h.at("bounds").at("min")), vec_from_json(h.at("bounds").at("max"))};
    auto res = h.at("resolution").get<int>();
    auto ch = h.at("channels").get<int>();
    auto sizes = h.at("layer_sizes").get<std::vector<int>>();
    a.metadata = h.value("metadata", json::object());
    if (sizes.size() < 2 || sizes.back() != mlp_output_size)
      throw SchemaError("decoder must end in " + std::to_string(mlp_output_size) + " outputs");
    if (sizes.front() != ch + property_size(a.kind, a.use_h))
      throw SchemaError("decoder input size does not match grid channels and property layout");
    a.grid = TriplaneGrid<float>(res, ch, bounds);
    a.mlp.output_activation = activation_from_name(h.at("output_activation").get<std::string>());
    const auto& tensors = h.at("tensors");
    if (tensors.size() != 1 + 2 * (sizes.size() - 1)) throw SchemaError("unexpected tensor count");
  } catch (const json::exception& e) {
    throw SchemaError(std::string("asset header: ") + e.what());
  }
  r.f32s(a.grid.data);
  auto sizes = h["layer_sizes"].get<std::vector<int>>();
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix<float> w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        float v;
        r.bytes(&v, 4);
        w(i, j) = v;
      }
    Vector<float> b(sizes[l + 1]);
    r.f32s(std::span<float>(b.data(), size_t(b.size())));
    a.mlp.weights.push_back(std::move(w));
    a.mlp.biases.push_back(std::move(b));
  }
  if (r.remaining() != 0) throw FormatError("asset has trailing bytes");
  return a;
}

void save_asset(const NeuralAsset& asset, const std::filesystem::path& path) {
  write_file(path, serialize_asset(asset));
}

NeuralAsset load_asset(const std::filesystem::path& path) { return deserialize_asset(read_file(path)); }

}  // namespace rna
