#include "sysfi/reference.hpp"

#include <fmt/format.h>

namespace sysfi {

TensorI8 solve_reference(const MatmulProblem& p) {
  const int m = p.m(), k = p.k(), n = p.n();
  if (p.w.shape.at(0) != k) throw ShapeError("matmul K mismatch between activations and weights");
  if (p.bias.size() != static_cast<std::size_t>(n)) throw ShapeError("matmul bias length mismatch");
  if (m != p.out_h * p.out_w) throw ShapeError("matmul M does not match out_h*out_w");

  std::vector<i8> post(static_cast<std::size_t>(m) * n);
  for (int row = 0; row < m; ++row) {
    for (int col = 0; col < n; ++col) {
      i32 acc = p.bias.data[col];
      for (int r = 0; r < k; ++r)
        acc = mac(p.a.data[static_cast<std::size_t>(row) * k + r], p.w.data[static_cast<std::size_t>(r) * n + col], acc);
      post[static_cast<std::size_t>(col) * m + row] = nlf_apply(p.nlf, requantize(acc, p.shift));
    }
  }
  if (!p.pool) return TensorI8({n, m}, std::move(post));

  const int ph = p.out_h / 2, pw = p.out_w / 2;
  if (p.out_h % 2 != 0 || p.out_w % 2 != 0) throw ShapeError("pooling needs even output extents");
  TensorI8 pooled({n, ph * pw});
  for (int col = 0; col < n; ++col) {
    const i8* plane = post.data() + static_cast<std::size_t>(col) * m;
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        i8 best = plane[(2 * y) * p.out_w + 2 * x];
        best = max2(best, plane[(2 * y) * p.out_w + 2 * x + 1]);
        best = max2(best, plane[(2 * y + 1) * p.out_w + 2 * x]);
        best = max2(best, plane[(2 * y + 1) * p.out_w + 2 * x + 1]);
        pooled.data[static_cast<std::size_t>(col) * ph * pw + y * pw + x] = best;
      }
    }
  }
  return pooled;
}

TensorI8 reference_inference(const ModelSpec& model, const TensorI8& image) {
  if (model.layers.empty()) throw ShapeError("model has no layers");
  TensorI8 x = image;
  for (const auto& layer : model.layers) {
    auto y = solve_reference(lower_layer(layer, x));
    x = TensorI8(layer.out_shape, std::move(y.data));
  }
  return x;
}

}  // namespace sysfi
