#include "sysfi/model.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace sysfi {

std::string shape_string(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, ",")); }

const char* to_string(LayerKind kind) { return kind == LayerKind::Fc ? "fc" : "conv2d"; }

LayerKind parse_layer_kind(const std::string& s) {
  if (s == "fc") return LayerKind::Fc;
  if (s == "conv2d") return LayerKind::Conv2d;
  throw ShapeError("unknown layer kind '" + s + "'");
}

int ConvGeometry::out_h() const { return (in_h + 2 * pad_h - k_h) / stride_h + 1; }
int ConvGeometry::out_w() const { return (in_w + 2 * pad_w - k_w) / stride_w + 1; }

void ConvGeometry::validate() const {
  if (in_channels <= 0 || in_h <= 0 || in_w <= 0 || out_channels <= 0 || k_h <= 0 || k_w <= 0)
    throw ShapeError("conv geometry dimensions must be positive");
  if (stride_h <= 0 || stride_w <= 0) throw ShapeError("conv stride must be positive");
  if (pad_h < 0 || pad_w < 0) throw ShapeError("conv padding must be non-negative");
  const int span_h = in_h + 2 * pad_h - k_h;
  const int span_w = in_w + 2 * pad_w - k_w;
  if (span_h < 0 || span_w < 0) throw ShapeError("conv kernel larger than padded input");
  if (span_h % stride_h != 0 || span_w % stride_w != 0)
    throw ShapeError("conv output extent is not an integer for this stride");
}

ConvGeometry LayerSpec::conv_geometry() const {
  if (kind != LayerKind::Conv2d) throw ShapeError("conv_geometry() on a non-conv layer");
  if (in_shape.size() != 3) throw ShapeError("conv2d in_shape must be [C,H,W], got " + shape_string(in_shape));
  if (weights.shape.size() != 4)
    throw ShapeError("conv2d weights must be [out,in,kh,kw], got " + shape_string(weights.shape));
  ConvGeometry g;
  g.in_channels = in_shape[0];
  g.in_h = in_shape[1];
  g.in_w = in_shape[2];
  g.out_channels = weights.shape[0];
  g.k_h = weights.shape[2];
  g.k_w = weights.shape[3];
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  g.pad_h = pad_h;
  g.pad_w = pad_w;
  if (weights.shape[1] != g.in_channels)
    throw ShapeError(fmt::format("conv2d weights expect {} input channels, input has {}", weights.shape[1],
                                 g.in_channels));
  return g;
}

int LayerSpec::out_features() const {
  if (weights.shape.empty()) throw ShapeError("layer has no weights");
  return weights.shape[0];
}

int LayerSpec::reduction_length() const {
  if (kind == LayerKind::Fc) {
    if (weights.shape.size() != 2) throw ShapeError("fc weights must be [out,in], got " + shape_string(weights.shape));
    return weights.shape[1];
  }
  const auto g = conv_geometry();
  return g.in_channels * g.k_h * g.k_w;
}

Shape LayerSpec::pre_pool_shape() const {
  if (kind == LayerKind::Fc) return {out_features()};
  const auto g = conv_geometry();
  return {g.out_channels, g.out_h(), g.out_w()};
}

namespace {

void validate_layer(const LayerSpec& layer, std::size_t index) {
  auto fail = [&](const std::string& what) {
    throw ShapeError(fmt::format("layer {} ({}): {}", index, to_string(layer.kind), what));
  };
  if (layer.weights.data.size() != element_count(layer.weights.shape)) fail("weight data length mismatch");
  if (layer.bias.data.size() != element_count(layer.bias.shape)) fail("bias data length mismatch");

  Shape expected_out;
  if (layer.kind == LayerKind::Fc) {
    if (layer.weights.shape.size() != 2) fail("fc weights must be [out,in]");
    if (static_cast<std::size_t>(layer.weights.shape[1]) != element_count(layer.in_shape))
      fail(fmt::format("fc expects {} inputs, in_shape {} has {}", layer.weights.shape[1],
                       shape_string(layer.in_shape), element_count(layer.in_shape)));
    if (layer.pool) fail("pooling is only supported after conv2d layers");
    expected_out = {layer.weights.shape[0]};
  } else {
    try {
      layer.conv_geometry().validate();
    } catch (const ShapeError& e) {
      fail(e.what());
    }
    expected_out = layer.pre_pool_shape();
    if (layer.pool) {
      if (*layer.pool != PoolSpec{}) fail("only 2x2/stride-2 max pooling is supported");
      if (expected_out[1] % 2 != 0 || expected_out[2] % 2 != 0) fail("pooling needs even output extents");
      expected_out[1] /= 2;
      expected_out[2] /= 2;
    }
  }
  if (layer.bias.shape != Shape{layer.out_features()})
    fail(fmt::format("bias shape {} does not match {} outputs", shape_string(layer.bias.shape),
                     layer.out_features()));
  if (layer.out_shape != expected_out)
    fail(fmt::format("out_shape {} but layer produces {}", shape_string(layer.out_shape),
                     shape_string(expected_out)));
}

}  // namespace

void ModelSpec::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    validate_layer(layers[i], i);
    if (i > 0 && layers[i].in_shape != layers[i - 1].out_shape)
      throw ShapeError(fmt::format("layer {} in_shape {} does not chain with layer {} out_shape {}", i,
                                   shape_string(layers[i].in_shape), i - 1, shape_string(layers[i - 1].out_shape)));
  }
}

}  // namespace sysfi
