#pragma once

#include <cstdint>
#include <vector>

#include "sysfi/datapath.hpp"
#include "sysfi/model.hpp"

namespace sysfi {

/// Activation, weight and bias storage. Weights and biases keep the model
/// container layout; activation memory holds the input image followed by one
/// write-back region per layer.
struct Memories {
  std::vector<i8> amem;
  std::vector<i8> wmem;
  std::vector<i32> bmem;
};

/// Control bundle for one clock edge. Indices refer to the address tables of
/// the owning CycleProgram; -1 means "not this cycle".
struct CycleControl {
  std::int32_t weight_tile = -1;  // R*C WMEM addresses, broadcast into w-reg
  std::int32_t activation = -1;   // R AMEM addresses fed to the skew chains
  std::int32_t bias = -1;         // C BMEM addresses, loads the accumulators
  std::int32_t writeback = -1;    // C AMEM addresses receiving the mux output
  std::uint16_t layer = 0;
  bool accumulate = false;
  bool round = false;
  bool nlf = false;
  PoolOp pool = PoolOp::None;
  bool writeback_from_pool = false;
};

struct LayerPlan {
  Shift shift;
  Lut lut = Lut::identity();
  bool pooled = false;
  int m = 0, k = 0, n = 0;
  int k_tiles = 0, n_tiles = 0;
  std::size_t in_offset = 0, in_size = 0;
  std::size_t out_offset = 0, out_size = 0;
  std::uint64_t first_cycle = 0;
  std::uint64_t end_cycle = 0;  // one past the last write-back edge
  /// Order in which output rows are processed (pool_plan order when pooled).
  std::vector<int> row_order;
};

/// Fully scheduled inference: one control bundle per clock edge over all
/// layers. Replaying it is deterministic.
struct CycleProgram {
  SaConfig sa;
  std::vector<CycleControl> cycles;
  std::vector<std::int32_t> weight_addrs;
  std::vector<std::int32_t> act_addrs;
  std::vector<std::int32_t> bias_addrs;
  std::vector<std::int32_t> wb_addrs;
  std::vector<LayerPlan> layers;
  std::vector<i8> wmem;
  std::vector<i32> bmem;
  std::size_t amem_size = 0;
  Shape input_shape;
  Shape output_shape;

  std::uint64_t total_cycles() const { return cycles.size(); }
  const LayerPlan& output_layer() const { return layers.back(); }
};

/// Clock edges between successive K-tile issues (and from issue to accumulate).
inline int tile_period(const SaConfig& sa) { return sa.rows + sa.cols; }

/// Edge of the final accumulate for output group `group` of a layer.
std::uint64_t last_accumulate_cycle(const LayerPlan& layer, const SaConfig& sa, std::uint64_t group);

/// Edge at which output group `group` (n_tile * M + position in row_order)
/// of a layer is written back. Pooled layers only write on the fourth member
/// of each window.
std::uint64_t writeback_cycle(const LayerPlan& layer, const SaConfig& sa, std::uint64_t group);

/// Tiles every layer onto the array: column tiles outer, output rows, then
/// K tiles inner. The first K tile loads the bias, later ones accumulate;
/// after the last one the rounding, NLF and pool stages are strobed and the
/// result is written back. Layer l+1 starts one edge after layer l's last
/// write-back.
CycleProgram compile(const ModelSpec& model, const SaConfig& sa);

}  // namespace sysfi
