#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sysfi/quant.hpp"

namespace sysfi {

/// Systolic array parametrisation: R rows (reduction) by C columns (outputs).
struct SaConfig {
  int rows = 2;
  int cols = 2;

  void validate() const;
  std::string label() const;  // "RxC"
  static SaConfig parse(std::string_view text);
  friend bool operator==(const SaConfig&, const SaConfig&) = default;
};

/// Flip-flop groups of the pipeline, in canonical enumeration order.
enum class RegisterGroup : std::uint8_t {
  WReg,        // stationary weights, R*C x 8 bit
  SaFfchainH,  // input skew chains, row r holds r+1 x 8 bit
  SaHReg,      // activation forwarding, R*(C-1) x 8 bit
  SaVReg,      // partial sums between rows, (R-1)*C x 32 bit
  SaFfchainV,  // output deskew chains, column c holds C-c x 32 bit
  AccumReg,    // column accumulators, C x 32 bit
  RoundReg,    // C x 8 bit
  NlfReg,      // C x 8 bit
  PoolReg,     // running max, C x 8 bit
};

inline constexpr std::array<RegisterGroup, 9> kAllGroups = {
    RegisterGroup::WReg,     RegisterGroup::SaFfchainH, RegisterGroup::SaHReg,
    RegisterGroup::SaVReg,   RegisterGroup::SaFfchainV, RegisterGroup::AccumReg,
    RegisterGroup::RoundReg, RegisterGroup::NlfReg,     RegisterGroup::PoolReg,
};

std::string_view group_name(RegisterGroup group);
RegisterGroup parse_group(std::string_view name);
int register_width(RegisterGroup group);
int register_count(RegisterGroup group, const SaConfig& sa);

/// One flip-flop: a bit of one register instance.
///
/// Instances are numbered row-major for grids (w-reg, sa-h-reg, sa-v-reg),
/// by (row, chain position) for the skew chains, by (column, chain position)
/// for the deskew chains and by column for the accumulator and
/// post-processing registers. Chain position 0 is the chain entry.
struct RegisterAddress {
  RegisterGroup group = RegisterGroup::WReg;
  int instance = 0;
  int bit = 0;
  friend bool operator==(const RegisterAddress&, const RegisterAddress&) = default;
};

class IncompletePipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AccumOp : std::uint8_t { Hold, LoadBias, Accumulate };
enum class PoolOp : std::uint8_t { None, Restart, Update };

/// Control inputs for one clock edge. Empty spans mean idle lanes (zeros)
/// or no weight load.
struct StepControl {
  std::span<const i8> row_inputs;  // R values entering the skew chains
  std::span<const i8> weights;     // R*C row-major, broadcast into w-reg
  AccumOp accum = AccumOp::Hold;
  std::span<const i32> bias;  // C values, used with AccumOp::LoadBias
  bool round = false;
  Shift shift;
  bool nlf = false;
  const Lut* lut = nullptr;
  PoolOp pool = PoolOp::None;
};

/// Register-level state of the weight-stationary pipeline. Every register is
/// updated once per step() from the values latched at the previous edge.
class PipelineState {
 public:
  explicit PipelineState(SaConfig sa);

  const SaConfig& config() const { return sa_; }
  std::uint64_t cycle() const { return cycle_; }

  /// Applies one clock edge.
  void step(const StepControl& ctrl);

  /// One-edge broadcast weight load with all other inputs idle.
  void load_weights(std::span<const i8> tile);

  /// Post-mux output of column `col`: pool-reg in pooling mode, nlf-reg on bypass.
  i8 output(int col, bool pool_mode) const { return pool_mode ? pool_[col] : nlf_[col]; }

  /// Outputs of the completed row. Throws IncompletePipelineError when data
  /// issued into the array has not yet reached the selected register.
  std::vector<i8> drain(bool pool_mode) const;

  /// Raw register contents, zero-extended to 32 bits.
  std::uint32_t read(RegisterGroup group, int instance) const;
  /// XORs one bit. Throws std::out_of_range for addresses outside this config.
  void flip(const RegisterAddress& address);

  /// Visits every register in canonical order.
  void for_each_register(const std::function<void(RegisterGroup, int, std::uint32_t)>& fn) const;

  /// Register-and-cycle equality (control history is not compared).
  bool same_registers(const PipelineState& other) const;

  std::span<const i8> weight_regs() const { return w_; }
  std::span<const i32> accumulators() const { return accum_; }
  std::span<const i8> round_regs() const { return round_; }
  std::span<const i8> nlf_regs() const { return nlf_; }
  std::span<const i8> pool_regs() const { return pool_; }

 private:
  std::size_t skew_offset(int row) const { return static_cast<std::size_t>(row) * (row + 1) / 2; }

  SaConfig sa_;
  std::uint64_t cycle_ = 0;
  std::vector<i8> w_;
  std::vector<i8> skew_;
  std::vector<i8> sa_h_;
  std::vector<i32> sa_v_;
  std::vector<i32> deskew_;
  std::vector<std::size_t> deskew_offset_;  // C+1 entries
  std::vector<i32> accum_;
  std::vector<i8> round_;
  std::vector<i8> nlf_;
  std::vector<i8> pool_;

  // Last edge at which each stage was strobed, -1 if never.
  std::int64_t last_issue_ = -1;
  std::int64_t last_accum_ = -1;
  std::int64_t last_round_ = -1;
  std::int64_t last_nlf_ = -1;
  std::int64_t last_pool_ = -1;
};

/// Trace line for the state after an edge:
/// `<cycle> <group>:<instance>=<hex> ...` over every register in canonical order.
std::string trace_line(const PipelineState& state);

}  // namespace sysfi
