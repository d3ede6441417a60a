#include "sysfi/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "sysfi/base64.hpp"
#include "sysfi/fault.hpp"
#include "sysfi/lowering.hpp"
#include "sysfi/prng.hpp"
#include "sysfi/reference.hpp"

namespace sysfi {

using ojson = nlohmann::ordered_json;

namespace {

std::string encode_i8(const std::vector<i8>& data) {
  return base64_encode({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

std::string encode_i32(const std::vector<i32>& data) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(data.size() * 4);
  for (i32 v : data) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return base64_encode(bytes);
}

Shape parse_shape(const ojson& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": shape must be an array");
  Shape s;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<long long>() < 0)
      throw FormatError(where + ": shape entries must be non-negative integers");
    s.push_back(d.get<int>());
  }
  return s;
}

ojson shape_json(const Shape& s) {
  ojson j = ojson::array();
  for (int d : s) j.push_back(d);
  return j;
}

const ojson& field(const ojson& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError(fmt::format("{}: missing '{}'", where, key));
  return obj.at(key);
}

std::vector<std::uint8_t> decode_data(const ojson& tensor, const std::string& where) {
  const auto& data = field(tensor, "data", where);
  if (!data.is_string()) throw FormatError(where + ": data must be a base64 string");
  try {
    return base64_decode(data.get<std::string>());
  } catch (const Base64Error& e) {
    throw FormatError(fmt::format("{}: base64 decode failed: {}", where, e.what()));
  }
}

TensorI8 parse_i8_tensor(const ojson& j, const std::string& where) {
  const Shape shape = parse_shape(field(j, "shape", where), where);
  auto bytes = decode_data(j, where);
  if (bytes.size() != element_count(shape))
    throw FormatError(fmt::format("{}: {} bytes for shape {} (expected {})", where, bytes.size(), shape_string(shape),
                                  element_count(shape)));
  std::vector<i8> data(bytes.size());
  std::memcpy(data.data(), bytes.data(), bytes.size());
  return TensorI8(shape, std::move(data));
}

TensorI32 parse_i32_tensor(const ojson& j, const std::string& where) {
  const Shape shape = parse_shape(field(j, "shape", where), where);
  auto bytes = decode_data(j, where);
  if (bytes.size() != 4 * element_count(shape))
    throw FormatError(fmt::format("{}: {} bytes for int32 shape {} (expected {})", where, bytes.size(),
                                  shape_string(shape), 4 * element_count(shape)));
  std::vector<i32> data(bytes.size() / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= std::uint32_t{bytes[4 * i + b]} << (8 * b);
    data[i] = static_cast<i32>(u);
  }
  return TensorI32(shape, std::move(data));
}

int parse_int(const ojson& j, const std::string& where) {
  if (!j.is_number_integer()) throw FormatError(where + " must be an integer");
  return j.get<int>();
}

std::pair<int, int> parse_pair(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw FormatError(where + " must be a two-element array");
  return {parse_int(j[0], where), parse_int(j[1], where)};
}

LayerSpec parse_layer(const ojson& j, std::size_t index) {
  const std::string where = fmt::format("layer {}", index);
  LayerSpec layer;
  const auto& type = field(j, "type", where);
  if (!type.is_string()) throw FormatError(where + ": type must be a string");
  try {
    layer.kind = parse_layer_kind(type.get<std::string>());
  } catch (const ShapeError& e) {
    throw FormatError(fmt::format("{}: {}", where, e.what()));
  }
  layer.in_shape = parse_shape(field(j, "in_shape", where), where + " in_shape");
  layer.out_shape = parse_shape(field(j, "out_shape", where), where + " out_shape");
  layer.weights = parse_i8_tensor(field(j, "weights", where), where + " weights");
  layer.bias = parse_i32_tensor(field(j, "bias", where), where + " bias");
  const int shift = parse_int(field(j, "shift", where), where + " shift");
  if (shift < 0 || shift > Shift::kMax)
    throw FormatError(fmt::format("{}: shift {} outside [0, {}]", where, shift, Shift::kMax));
  layer.shift = Shift(shift);

  const auto lut = parse_i8_tensor(field(j, "nlf", where), where + " nlf");
  if (lut.shape != Shape{256}) throw FormatError(where + ": nlf table must have shape [256]");
  std::array<i8, 256> table{};
  std::copy(lut.data.begin(), lut.data.end(), table.begin());
  layer.nlf = Lut(table);

  if (j.contains("pool") && !j.at("pool").is_null()) {
    const auto& p = j.at("pool");
    const auto& kind = field(p, "kind", where + " pool");
    if (kind != "max") throw FormatError(where + ": only max pooling is supported");
    PoolSpec pool;
    std::tie(pool.window_h, pool.window_w) = parse_pair(field(p, "window", where), where + " pool window");
    std::tie(pool.stride_h, pool.stride_w) = parse_pair(field(p, "stride", where), where + " pool stride");
    layer.pool = pool;
  }
  if (layer.kind == LayerKind::Conv2d) {
    if (j.contains("stride")) std::tie(layer.stride_h, layer.stride_w) = parse_pair(j.at("stride"), where + " stride");
    if (j.contains("padding")) std::tie(layer.pad_h, layer.pad_w) = parse_pair(j.at("padding"), where + " padding");
  }
  return layer;
}

ojson layer_json(const LayerSpec& layer) {
  ojson j;
  j["type"] = to_string(layer.kind);
  j["in_shape"] = shape_json(layer.in_shape);
  j["out_shape"] = shape_json(layer.out_shape);
  j["weights"] = {{"shape", shape_json(layer.weights.shape)}, {"data", encode_i8(layer.weights.data)}};
  j["bias"] = {{"shape", shape_json(layer.bias.shape)}, {"data", encode_i32(layer.bias.data)}};
  j["shift"] = layer.shift.bits();
  const auto& t = layer.nlf.table();
  j["nlf"] = {{"shape", ojson::array({256})}, {"data", encode_i8(std::vector<i8>(t.begin(), t.end()))}};
  if (layer.kind == LayerKind::Conv2d) {
    j["stride"] = ojson::array({layer.stride_h, layer.stride_w});
    j["padding"] = ojson::array({layer.pad_h, layer.pad_w});
  }
  if (layer.pool) {
    j["pool"] = {{"kind", "max"},
                 {"window", ojson::array({layer.pool->window_h, layer.pool->window_w})},
                 {"stride", ojson::array({layer.pool->stride_h, layer.pool->stride_w})}};
  } else {
    j["pool"] = nullptr;
  }
  return j;
}

ojson parse_document(std::string_view text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

}  // namespace

ModelSpec model_from_json(std::string_view text) {
  const ojson doc = parse_document(text, "model file");
  if (!doc.is_object()) throw FormatError("model file must hold a JSON object");
  const auto& version = field(doc, "format_version", "model");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
    throw FormatError(fmt::format("unsupported model format_version {} (expected {})", version.dump(),
                                  kModelFormatVersion));
  ModelSpec model;
  if (doc.contains("metadata")) {
    ojson meta = doc.at("metadata");
    if (!meta.is_object()) throw FormatError("metadata must be an object");
    if (meta.contains("name")) {
      model.name = meta.at("name").get<std::string>();
      meta.erase("name");
    }
    if (meta.contains("claimed_accuracy")) {
      if (!meta.at("claimed_accuracy").is_null()) model.claimed_accuracy = meta.at("claimed_accuracy").get<double>();
      meta.erase("claimed_accuracy");
    }
    if (!meta.empty()) model.extra_metadata = meta.dump();
  }
  const auto& layers = field(doc, "layers", "model");
  if (!layers.is_array()) throw FormatError("layers must be an array");
  for (std::size_t i = 0; i < layers.size(); ++i) model.layers.push_back(parse_layer(layers[i], i));
  try {
    model.validate();
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  return model;
}

std::string model_to_json(const ModelSpec& model) {
  ojson doc;
  doc["format_version"] = kModelFormatVersion;
  ojson meta;
  meta["name"] = model.name;
  if (model.claimed_accuracy) meta["claimed_accuracy"] = *model.claimed_accuracy;
  if (!model.extra_metadata.empty())
    for (const auto& [k, v] : ojson::parse(model.extra_metadata).items()) meta[k] = v;
  doc["metadata"] = meta;
  doc["layers"] = ojson::array();
  for (const auto& layer : model.layers) doc["layers"].push_back(layer_json(layer));
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

ModelSpec load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

void save_model(const ModelSpec& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model));
}

Dataset dataset_from_json(std::string_view text) {
  const ojson doc = parse_document(text, "dataset file");
  const auto& images = field(doc, "images", "dataset");
  if (!images.is_array()) throw FormatError("dataset images must be an array");
  Dataset ds;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = fmt::format("image {}", i);
    LabeledImage img;
    img.label = parse_int(field(images[i], "label", where), where + " label");
    img.image = parse_i8_tensor(images[i], where);
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string dataset_to_json(const Dataset& dataset) {
  ojson doc;
  doc["images"] = ojson::array();
  for (const auto& img : dataset.images)
    doc["images"].push_back(
        {{"label", img.label}, {"shape", shape_json(img.image.shape)}, {"data", encode_i8(img.image.data)}});
  return doc.dump(2) + "\n";
}

Dataset load_dataset(const std::filesystem::path& path) { return dataset_from_json(read_text_file(path)); }

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_json(dataset));
}

FixtureKind parse_fixture_kind(std::string_view name) {
  if (name == "fc3") return FixtureKind::Fc3;
  if (name == "lenet-like") return FixtureKind::LenetLike;
  if (name == "lenet-like-rgb") return FixtureKind::LenetLikeRgb;
  throw std::invalid_argument(fmt::format("unknown fixture kind '{}'", name));
}

std::string_view fixture_name(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::Fc3: return "fc3";
    case FixtureKind::LenetLike: return "lenet-like";
    case FixtureKind::LenetLikeRgb: return "lenet-like-rgb";
  }
  return "?";
}

namespace {

constexpr int kWeightMax = 24;
constexpr int kCalibrationTarget = 96;

int uniform_int(SplitMix64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

TensorI8 stroke_image(SplitMix64& rng, const Shape& shape) {
  TensorI8 img(shape);
  const int ch = shape[0], h = shape[1], w = shape[2];
  const int strokes = uniform_int(rng, 3, 6);
  for (int s = 0; s < strokes; ++s) {
    int y = uniform_int(rng, 2, h - 3), x = uniform_int(rng, 2, w - 3);
    const int dy = uniform_int(rng, -1, 1), dx = uniform_int(rng, -1, 1);
    const int len = uniform_int(rng, 4, std::min(h, w) / 2);
    const int value = uniform_int(rng, 40, 127);
    for (int step = 0; step < len; ++step) {
      for (int py = y; py <= y + 1 && py < h; ++py)
        for (int px = x; px <= x + 1 && px < w; ++px)
          for (int c = 0; c < ch; ++c) {
            const int v = std::clamp(value - 10 * c + uniform_int(rng, -8, 8), 0, 127);
            auto& cell = img.data[(static_cast<std::size_t>(c) * h + py) * w + px];
            cell = std::max<i8>(cell, static_cast<i8>(v));
          }
      y = std::clamp(y + dy, 0, h - 1);
      x = std::clamp(x + dx, 0, w - 1);
    }
  }
  return img;
}

/// Picks the smallest shift that brings the 99th percentile of |acc| into
/// the calibration target, then draws a bias at that scale.
void calibrate(LayerSpec& layer, const std::vector<TensorI8>& inputs, SplitMix64& rng) {
  std::vector<long long> mags;
  for (const auto& x : inputs) {
    auto p = lower_layer(layer, x);
    p.bias = TensorI32(p.bias.shape);
    p.shift = Shift(0);
    const int m = p.m(), k = p.k(), n = p.n();
    for (int row = 0; row < m; ++row)
      for (int col = 0; col < n; ++col) {
        i32 acc = 0;
        for (int r = 0; r < k; ++r)
          acc = mac(p.a.data[static_cast<std::size_t>(row) * k + r], p.w.data[static_cast<std::size_t>(r) * n + col], acc);
        mags.push_back(std::llabs(acc));
      }
  }
  std::sort(mags.begin(), mags.end());
  const long long q = mags.empty() ? 0 : mags[std::min(mags.size() - 1, mags.size() * 99 / 100)];
  int shift = 0;
  while (shift < 24 && (q >> shift) > kCalibrationTarget) ++shift;
  layer.shift = Shift(shift);
  const int bias_range = 16 << shift;
  for (auto& b : layer.bias.data) b = uniform_int(rng, -bias_range, bias_range);
}

LayerSpec make_fc(int in, int out, const Shape& in_shape, bool relu, SplitMix64& rng) {
  LayerSpec l;
  l.kind = LayerKind::Fc;
  l.in_shape = in_shape;
  l.out_shape = {out};
  l.weights = TensorI8({out, in});
  for (auto& w : l.weights.data) w = static_cast<i8>(uniform_int(rng, -kWeightMax, kWeightMax));
  l.bias = TensorI32({out});
  l.nlf = relu ? Lut::relu() : Lut::identity();
  return l;
}

LayerSpec make_conv(const Shape& in_shape, int out_ch, int k, int pad, SplitMix64& rng) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.in_shape = in_shape;
  l.weights = TensorI8({out_ch, in_shape[0], k, k});
  for (auto& w : l.weights.data) w = static_cast<i8>(uniform_int(rng, -kWeightMax, kWeightMax));
  l.bias = TensorI32({out_ch});
  l.pad_h = l.pad_w = pad;
  l.nlf = Lut::relu();
  l.pool = PoolSpec{};
  const auto g = l.conv_geometry();
  l.out_shape = {out_ch, g.out_h() / 2, g.out_w() / 2};
  return l;
}

}  // namespace

Fixture gen_fixture(FixtureKind kind, std::uint64_t seed) {
  SplitMix64 rng(seed ^ mix64(static_cast<std::uint64_t>(kind) + 1));
  Fixture fx;
  fx.model.name = fmt::format("{}-synthetic-seed{}", fixture_name(kind), seed);

  const Shape input = kind == FixtureKind::LenetLikeRgb ? Shape{3, 32, 32} : Shape{1, 28, 28};
  std::vector<TensorI8> images;
  for (int i = 0; i < kFixtureImages; ++i) images.push_back(stroke_image(rng, input));

  std::vector<LayerSpec> layers;
  if (kind == FixtureKind::Fc3) {
    layers.push_back(make_fc(784, 128, input, true, rng));
    layers.push_back(make_fc(128, 64, {128}, true, rng));
    layers.push_back(make_fc(64, 10, {64}, false, rng));
  } else {
    layers.push_back(make_conv(input, 6, 5, kind == FixtureKind::LenetLike ? 2 : 0, rng));
    layers.push_back(make_conv(layers.back().out_shape, 16, 5, 0, rng));
    const auto flat = static_cast<int>(element_count(layers.back().out_shape));
    layers.push_back(make_fc(flat, 120, layers.back().out_shape, true, rng));
    layers.push_back(make_fc(120, 84, {120}, true, rng));
    layers.push_back(make_fc(84, 10, {84}, false, rng));
  }

  std::vector<TensorI8> acts = images;
  for (auto& layer : layers) {
    calibrate(layer, acts, rng);
    for (auto& x : acts) {
      auto y = solve_reference(lower_layer(layer, x));
      x = TensorI8(layer.out_shape, std::move(y.data));
    }
    fx.model.layers.push_back(std::move(layer));
  }
  fx.model.validate();

  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto label = static_cast<int>(argmax(acts[i].data));
    fx.dataset.images.push_back({label, std::move(images[i])});
  }
  return fx;
}

}  // namespace sysfi
