#pragma once

// Shared generators and independent oracles for the test suites.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "sysfi/model.hpp"
#include "sysfi/quant.hpp"

namespace sysfi::testing {

using Rng = std::mt19937_64;

inline int rand_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline TensorI8 random_i8(Rng& rng, Shape shape, int lo = -128, int hi = 127) {
  TensorI8 t(std::move(shape));
  for (auto& v : t.data) v = static_cast<i8>(rand_int(rng, lo, hi));
  return t;
}

inline TensorI32 random_i32(Rng& rng, Shape shape, int lo, int hi) {
  TensorI32 t(std::move(shape));
  for (auto& v : t.data) v = rand_int(rng, lo, hi);
  return t;
}

inline LayerSpec random_fc(Rng& rng, const Shape& in_shape, int n, int shift, bool relu) {
  LayerSpec l;
  l.kind = LayerKind::Fc;
  l.in_shape = in_shape;
  int k = 1;
  for (int d : in_shape) k *= d;
  l.out_shape = {n};
  l.weights = random_i8(rng, {n, k});
  l.bias = random_i32(rng, {n}, -5000, 5000);
  l.shift = Shift(shift);
  l.nlf = relu ? Lut::relu() : Lut::identity();
  return l;
}

inline LayerSpec random_conv(Rng& rng, const Shape& in_shape, int out_ch, int kh, int kw, int stride, int pad,
                             int shift, bool relu, bool pool) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.in_shape = in_shape;
  l.weights = random_i8(rng, {out_ch, in_shape[0], kh, kw});
  l.bias = random_i32(rng, {out_ch}, -5000, 5000);
  l.shift = Shift(shift);
  l.nlf = relu ? Lut::relu() : Lut::identity();
  l.stride_h = l.stride_w = stride;
  l.pad_h = l.pad_w = pad;
  const int oh = (in_shape[1] + 2 * pad - kh) / stride + 1;
  const int ow = (in_shape[2] + 2 * pad - kw) / stride + 1;
  if (pool) {
    l.pool = PoolSpec{};
    l.out_shape = {out_ch, oh / 2, ow / 2};
  } else {
    l.out_shape = {out_ch, oh, ow};
  }
  return l;
}

inline ModelSpec model_of(std::vector<LayerSpec> layers, std::string name = "test") {
  ModelSpec m;
  m.name = std::move(name);
  m.layers = std::move(layers);
  return m;
}

/// Direct nested-loop convolution on the container weight layout, with the
/// same bias / requantize / NLF / 2x2 max-pool post-processing.
inline TensorI8 direct_conv(const LayerSpec& l, const TensorI8& x) {
  const int c_in = l.in_shape[0], h = l.in_shape[1], w = l.in_shape[2];
  const int c_out = l.weights.shape[0], kh = l.weights.shape[2], kw = l.weights.shape[3];
  const int oh = (h + 2 * l.pad_h - kh) / l.stride_h + 1;
  const int ow = (w + 2 * l.pad_w - kw) / l.stride_w + 1;
  std::vector<i8> y(static_cast<std::size_t>(c_out) * oh * ow);
  for (int o = 0; o < c_out; ++o)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        std::int64_t acc = l.bias.data[o];
        for (int c = 0; c < c_in; ++c)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * l.stride_h - l.pad_h + ky, ix = ox * l.stride_w - l.pad_w + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += static_cast<std::int64_t>(x.data[(static_cast<std::size_t>(c) * h + iy) * w + ix]) *
                     l.weights.data[((static_cast<std::size_t>(o) * c_in + c) * kh + ky) * kw + kx];
            }
        const auto wrapped = static_cast<i32>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(acc)));
        y[(static_cast<std::size_t>(o) * oh + oy) * ow + ox] = l.nlf(requantize(wrapped, l.shift));
      }
  if (!l.pool) return TensorI8({c_out, oh, ow}, y);
  TensorI8 p({c_out, oh / 2, ow / 2});
  for (int o = 0; o < c_out; ++o)
    for (int py = 0; py < oh / 2; ++py)
      for (int px = 0; px < ow / 2; ++px) {
        int best = -128;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            best = std::max<int>(best, y[(static_cast<std::size_t>(o) * oh + 2 * py + dy) * ow + 2 * px + dx]);
        p.data[(static_cast<std::size_t>(o) * (oh / 2) + py) * (ow / 2) + px] = static_cast<i8>(best);
      }
  return p;
}

/// Direct fully connected evaluation on the [out, in] container layout.
inline TensorI8 direct_fc(const LayerSpec& l, const TensorI8& x) {
  const int n = l.weights.shape[0], k = l.weights.shape[1];
  TensorI8 y({n});
  for (int o = 0; o < n; ++o) {
    std::int64_t acc = l.bias.data[o];
    for (int i = 0; i < k; ++i) acc += static_cast<std::int64_t>(x.data[i]) * l.weights.data[static_cast<std::size_t>(o) * k + i];
    const auto wrapped = static_cast<i32>(static_cast<std::uint32_t>(static_cast<std::uint64_t>(acc)));
    y.data[o] = l.nlf(requantize(wrapped, l.shift));
  }
  return y;
}

/// A random single-layer matmul problem with M, K, N <= 16 expressed as a
/// model: fc for M = 1, otherwise a conv whose im2col yields the matmul.
inline ModelSpec random_small_problem(Rng& rng, bool& pooled) {
  const int shift = rand_int(rng, 0, 8);
  const bool relu = rand_int(rng, 0, 1) == 1;
  pooled = rand_int(rng, 0, 2) == 0;
  if (!pooled && rand_int(rng, 0, 3) == 0) {
    const int k = rand_int(rng, 1, 16), n = rand_int(rng, 1, 16);
    return model_of({random_fc(rng, {k}, n, shift, relu)});
  }
  int h, w;
  if (pooled) {
    h = 2 * rand_int(rng, 1, 2);
    w = h == 4 ? 4 : 2 * rand_int(rng, 1, 2);
  } else {
    h = rand_int(rng, 1, 4);
    w = rand_int(rng, 1, 16 / h);
  }
  const int n = rand_int(rng, 1, 16);
  if (rand_int(rng, 0, 1) == 0) {
    // 1x1 kernel: M = h*w pixels, K = channels.
    const int k = rand_int(rng, 1, 16);
    return model_of({random_conv(rng, {k, h, w}, n, 1, 1, 1, 0, shift, relu, pooled)});
  }
  // 3x3 kernel with unit padding keeps the spatial size; K = 9*C <= 16 -> C = 1.
  return model_of({random_conv(rng, {1, h, w}, n, 3, 3, 1, 1, shift, relu, pooled)});
}

}  // namespace sysfi::testing
