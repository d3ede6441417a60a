#pragma once

#include <optional>
#include <vector>

#include "sysfi/model.hpp"

namespace sysfi {

/// A layer expressed as Y = post(A x W + bias), ready for the array.
struct MatmulProblem {
  TensorI8 a;      // M x K, unrolled activations
  TensorI8 w;      // K x N, one column per output neuron/channel
  TensorI32 bias;  // N
  Shift shift;
  Lut nlf = Lut::identity();
  std::optional<PoolSpec> pool;
  int out_h = 1, out_w = 1;  // spatial arrangement of the M rows (M = out_h*out_w)

  int m() const { return a.shape.at(0); }
  int k() const { return a.shape.at(1); }
  int n() const { return w.shape.at(1); }
};

/// For every (output pixel m, reduction index k) the flat index into the
/// [C,H,W] input, or -1 where the receptive field falls into zero padding.
/// Rows enumerate output pixels row-major, columns follow (channel, k_row, k_col).
std::vector<int> im2col_indices(const ConvGeometry& geom);

TensorI8 im2col(const TensorI8& input, const ConvGeometry& geom);

/// Gather table for a layer: M x K input indices (-1 = zero).
std::vector<int> activation_gather(const LayerSpec& layer);

/// Container weights reshaped to K x N.
TensorI8 lowered_weights(const LayerSpec& layer);

MatmulProblem lower_layer(const LayerSpec& layer, const TensorI8& input);

/// Reorders the out_h x out_w output rows so that the four members of every
/// 2x2/stride-2 window are consecutive. Windows follow the pooled grid
/// row-major; members within a window go (0,0), (0,1), (1,0), (1,1).
std::vector<int> pool_plan(int out_h, int out_w);

}  // namespace sysfi
