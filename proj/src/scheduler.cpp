#include "sysfi/scheduler.hpp"

#include <fmt/format.h>

#include "sysfi/lowering.hpp"

namespace sysfi {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

std::uint64_t group_period(const LayerPlan& layer, const SaConfig& sa) {
  return static_cast<std::uint64_t>(layer.k_tiles) * tile_period(sa) + 1;
}

}  // namespace

std::uint64_t last_accumulate_cycle(const LayerPlan& layer, const SaConfig& sa, std::uint64_t group) {
  const std::uint64_t start = layer.first_cycle + group * group_period(layer, sa);
  return start + static_cast<std::uint64_t>(layer.k_tiles) * tile_period(sa);
}

std::uint64_t writeback_cycle(const LayerPlan& layer, const SaConfig& sa, std::uint64_t group) {
  return last_accumulate_cycle(layer, sa, group) + (layer.pooled ? 4 : 3);
}

CycleProgram compile(const ModelSpec& model, const SaConfig& sa) {
  sa.validate();
  model.validate();
  if (model.layers.size() > 0xFFFF) throw ShapeError("too many layers");

  const int rows = sa.rows, cols = sa.cols;
  const int period = tile_period(sa);

  CycleProgram prog;
  prog.sa = sa;
  prog.input_shape = model.input_shape();
  prog.output_shape = model.output_shape();

  std::size_t amem_cursor = element_count(prog.input_shape);
  std::size_t in_offset = 0;
  std::uint64_t layer_start = 0;

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const auto& spec = model.layers[li];
    LayerPlan plan;
    plan.shift = spec.shift;
    plan.lut = spec.nlf;
    plan.pooled = spec.pool.has_value();
    plan.k = spec.reduction_length();
    plan.n = spec.out_features();
    plan.k_tiles = ceil_div(plan.k, rows);
    plan.n_tiles = ceil_div(plan.n, cols);
    plan.in_offset = in_offset;
    plan.in_size = element_count(spec.in_shape);
    plan.out_offset = amem_cursor;
    plan.out_size = element_count(spec.out_shape);
    plan.first_cycle = layer_start;

    const auto gather = activation_gather(spec);
    plan.m = static_cast<int>(gather.size() / plan.k);
    const Shape pre_pool = spec.pre_pool_shape();
    if (plan.pooled) {
      plan.row_order = pool_plan(pre_pool[1], pre_pool[2]);
    } else {
      plan.row_order.resize(plan.m);
      for (int i = 0; i < plan.m; ++i) plan.row_order[i] = i;
    }

    const std::size_t w_base = prog.wmem.size();
    const std::size_t b_base = prog.bmem.size();
    prog.wmem.insert(prog.wmem.end(), spec.weights.data.begin(), spec.weights.data.end());
    prog.bmem.insert(prog.bmem.end(), spec.bias.data.begin(), spec.bias.data.end());

    // Activation vectors, one per (output row, K tile).
    const auto act_base = static_cast<std::int32_t>(prog.act_addrs.size() / rows);
    for (int m = 0; m < plan.m; ++m) {
      for (int kt = 0; kt < plan.k_tiles; ++kt) {
        for (int r = 0; r < rows; ++r) {
          const int k = kt * rows + r;
          const int src = k < plan.k ? gather[static_cast<std::size_t>(m) * plan.k + k] : -1;
          prog.act_addrs.push_back(src < 0 ? -1 : static_cast<std::int32_t>(in_offset + src));
        }
      }
    }
    // Weight tiles, one per (column tile, K tile); zero-padded at the edges.
    const auto w_tile_base = static_cast<std::int32_t>(prog.weight_addrs.size() / (rows * cols));
    for (int nt = 0; nt < plan.n_tiles; ++nt) {
      for (int kt = 0; kt < plan.k_tiles; ++kt) {
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            const int k = kt * rows + r, n = nt * cols + c;
            prog.weight_addrs.push_back(k < plan.k && n < plan.n
                                            ? static_cast<std::int32_t>(w_base + static_cast<std::size_t>(n) * plan.k + k)
                                            : -1);
          }
        }
      }
    }
    const auto bias_base = static_cast<std::int32_t>(prog.bias_addrs.size() / cols);
    for (int nt = 0; nt < plan.n_tiles; ++nt)
      for (int c = 0; c < cols; ++c) {
        const int n = nt * cols + c;
        prog.bias_addrs.push_back(n < plan.n ? static_cast<std::int32_t>(b_base + n) : -1);
      }

    const std::uint64_t groups = static_cast<std::uint64_t>(plan.n_tiles) * plan.m;
    const std::uint64_t end = writeback_cycle(plan, sa, groups - 1) + 1;
    prog.cycles.resize(end);
    for (auto c = layer_start; c < end; ++c) prog.cycles[c].layer = static_cast<std::uint16_t>(li);

    const int pooled_rows = plan.pooled ? plan.m / 4 : plan.m;
    std::uint64_t g = 0;
    for (int nt = 0; nt < plan.n_tiles; ++nt) {
      for (int mi = 0; mi < plan.m; ++mi, ++g) {
        const int m = plan.row_order[mi];
        const std::uint64_t start = plan.first_cycle + g * group_period(plan, sa);
        prog.cycles[start].bias = bias_base + nt;
        for (int kt = 0; kt < plan.k_tiles; ++kt) {
          auto& cc = prog.cycles[start + static_cast<std::uint64_t>(kt) * period];
          cc.weight_tile = w_tile_base + nt * plan.k_tiles + kt;
          cc.activation = act_base + m * plan.k_tiles + kt;
          prog.cycles[start + static_cast<std::uint64_t>(kt + 1) * period].accumulate = true;
        }
        const std::uint64_t last_acc = start + static_cast<std::uint64_t>(plan.k_tiles) * period;
        prog.cycles[last_acc + 1].round = true;
        prog.cycles[last_acc + 2].nlf = true;

        std::int64_t out_pos = -1;
        std::uint64_t wb_at = last_acc + 3;
        if (plan.pooled) {
          prog.cycles[last_acc + 3].pool = mi % 4 == 0 ? PoolOp::Restart : PoolOp::Update;
          if (mi % 4 == 3) {
            out_pos = mi / 4;
            wb_at = last_acc + 4;
          }
        } else {
          out_pos = m;
        }
        if (out_pos >= 0) {
          auto& wb = prog.cycles[wb_at];
          wb.writeback = static_cast<std::int32_t>(prog.wb_addrs.size() / cols);
          wb.writeback_from_pool = plan.pooled;
          for (int c = 0; c < cols; ++c) {
            const int n = nt * cols + c;
            prog.wb_addrs.push_back(
                n < plan.n ? static_cast<std::int32_t>(plan.out_offset + static_cast<std::size_t>(n) * pooled_rows + out_pos)
                           : -1);
          }
        }
      }
    }
    plan.end_cycle = end;
    layer_start = end;
    in_offset = plan.out_offset;
    amem_cursor += plan.out_size;
    prog.layers.push_back(std::move(plan));
  }
  prog.amem_size = amem_cursor;
  return prog;
}

}  // namespace sysfi
