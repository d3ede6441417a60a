#include "sysfi/lowering.hpp"

#include <fmt/format.h>

namespace sysfi {

std::vector<int> im2col_indices(const ConvGeometry& g) {
  g.validate();
  const int oh = g.out_h(), ow = g.out_w();
  const int k = g.in_channels * g.k_h * g.k_w;
  std::vector<int> idx(static_cast<std::size_t>(oh) * ow * k, -1);
  std::size_t pos = 0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int c = 0; c < g.in_channels; ++c) {
        for (int ky = 0; ky < g.k_h; ++ky) {
          for (int kx = 0; kx < g.k_w; ++kx) {
            const int y = oy * g.stride_h - g.pad_h + ky;
            const int x = ox * g.stride_w - g.pad_w + kx;
            if (y >= 0 && y < g.in_h && x >= 0 && x < g.in_w) idx[pos] = (c * g.in_h + y) * g.in_w + x;
            ++pos;
          }
        }
      }
    }
  }
  return idx;
}

TensorI8 im2col(const TensorI8& input, const ConvGeometry& g) {
  if (input.shape != Shape{g.in_channels, g.in_h, g.in_w})
    throw ShapeError(fmt::format("im2col input shape {} does not match geometry [{},{},{}]",
                                 shape_string(input.shape), g.in_channels, g.in_h, g.in_w));
  const auto idx = im2col_indices(g);
  const int k = g.in_channels * g.k_h * g.k_w;
  TensorI8 out({g.out_h() * g.out_w(), k});
  for (std::size_t i = 0; i < idx.size(); ++i) out.data[i] = idx[i] < 0 ? i8{0} : input.data[idx[i]];
  return out;
}

std::vector<int> activation_gather(const LayerSpec& layer) {
  if (layer.kind == LayerKind::Conv2d) return im2col_indices(layer.conv_geometry());
  std::vector<int> idx(static_cast<std::size_t>(layer.reduction_length()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

TensorI8 lowered_weights(const LayerSpec& layer) {
  const int n = layer.out_features();
  const int k = layer.reduction_length();
  if (layer.weights.size() != static_cast<std::size_t>(n) * k)
    throw ShapeError(fmt::format("weights hold {} values, expected {}x{}", layer.weights.size(), n, k));
  // Both container layouts are output-major with the reduction axis
  // contiguous in (channel, k_row, k_col) order, so this is a transpose.
  TensorI8 w({k, n});
  for (int out = 0; out < n; ++out)
    for (int r = 0; r < k; ++r) w.data[static_cast<std::size_t>(r) * n + out] = layer.weights.data[static_cast<std::size_t>(out) * k + r];
  return w;
}

MatmulProblem lower_layer(const LayerSpec& layer, const TensorI8& input) {
  if (input.shape != layer.in_shape)
    throw ShapeError(fmt::format("layer input shape {} does not match in_shape {}", shape_string(input.shape),
                                 shape_string(layer.in_shape)));
  MatmulProblem p;
  if (layer.kind == LayerKind::Fc) {
    const int k = layer.reduction_length();
    if (input.size() != static_cast<std::size_t>(k))
      throw ShapeError(fmt::format("fc layer expects {} inputs, got {}", k, input.size()));
    p.a = TensorI8({1, k}, input.data);
  } else {
    const auto g = layer.conv_geometry();
    p.a = im2col(input, g);
    p.out_h = g.out_h();
    p.out_w = g.out_w();
  }
  p.w = lowered_weights(layer);
  p.bias = layer.bias;
  p.shift = layer.shift;
  p.nlf = layer.nlf;
  p.pool = layer.pool;
  return p;
}

std::vector<int> pool_plan(int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ShapeError("pool_plan needs a positive output extent");
  if (out_h % 2 != 0 || out_w % 2 != 0)
    throw ShapeError(fmt::format("unsupported pooling geometry {}x{}: extents must be even", out_h, out_w));
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(out_h) * out_w);
  for (int py = 0; py < out_h / 2; ++py)
    for (int px = 0; px < out_w / 2; ++px)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) order.push_back((2 * py + dy) * out_w + 2 * px + dx);
  return order;
}

}  // namespace sysfi
