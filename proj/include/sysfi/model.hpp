#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sysfi/quant.hpp"
#include "sysfi/tensor.hpp"

namespace sysfi {

enum class LayerKind { Fc, Conv2d };

const char* to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& s);

/// Non-overlapping max pooling. Only 2x2 windows with stride 2 are supported
/// by the streaming pool unit.
struct PoolSpec {
  int window_h = 2, window_w = 2;
  int stride_h = 2, stride_w = 2;
  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

struct ConvGeometry {
  int in_channels = 0, in_h = 0, in_w = 0;
  int out_channels = 0;
  int k_h = 0, k_w = 0;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;

  int out_h() const;
  int out_w() const;
  /// Throws ShapeError unless the output extent is a positive integer.
  void validate() const;
  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

/// One quantized layer as stored in the model container.
///
/// Weights keep the container layout: fc is [out, in], conv2d is
/// [out_ch, in_ch, k_h, k_w]. Lowering reshapes them to K x N.
struct LayerSpec {
  LayerKind kind = LayerKind::Fc;
  Shape in_shape;
  Shape out_shape;  // after pooling, i.e. what is written back
  TensorI8 weights;
  TensorI32 bias;
  Shift shift;
  Lut nlf = Lut::identity();
  std::optional<PoolSpec> pool;
  int stride_h = 1, stride_w = 1;  // conv2d only
  int pad_h = 0, pad_w = 0;        // conv2d only

  /// Geometry of a conv2d layer, derived from in_shape and weights.shape.
  ConvGeometry conv_geometry() const;
  /// Number of matmul output columns (neurons or output channels).
  int out_features() const;
  /// Reduction length of the lowered matmul.
  int reduction_length() const;
  /// Output shape before pooling.
  Shape pre_pool_shape() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
  std::string name;
  std::optional<double> claimed_accuracy;
  /// Any further metadata keys, kept verbatim as a compact JSON object.
  std::string extra_metadata;
  std::vector<LayerSpec> layers;

  const Shape& input_shape() const { return layers.front().in_shape; }
  const Shape& output_shape() const { return layers.back().out_shape; }

  /// Checks every layer and that adjacent shapes chain. Throws ShapeError.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

}  // namespace sysfi
