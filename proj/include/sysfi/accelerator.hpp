#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sysfi/datapath.hpp"
#include "sysfi/scheduler.hpp"

namespace sysfi {

struct Checkpoint;

/// Executes a CycleProgram on a private PipelineState and activation memory.
/// Weight and bias memories are read from the program.
class Accelerator {
 public:
  using TraceFn = std::function<void(const PipelineState&)>;
  using WriteFn = std::function<void(std::uint64_t cycle, std::size_t address, i8 value)>;

  Accelerator(std::shared_ptr<const CycleProgram> program, const TensorI8& image);

  const CycleProgram& program() const { return *program_; }
  std::uint64_t cycle() const { return state_.cycle(); }
  bool done() const { return state_.cycle() >= program_->total_cycles(); }

  /// Executes the control bundle of the current cycle.
  void step();
  void run_until(std::uint64_t cycle);
  void run() { run_until(program_->total_cycles()); }

  PipelineState& state() { return state_; }
  const PipelineState& state() const { return state_; }
  const std::vector<i8>& amem() const { return amem_; }

  /// Final-layer write-back region.
  TensorI8 output() const;

  /// Pipeline registers, cycle and activation memory all equal.
  bool same_state(const Accelerator& other) const;
  bool matches(const Checkpoint& checkpoint) const;
  void restore(const Checkpoint& checkpoint);

  /// Called after every edge with the new register state.
  void set_trace(TraceFn fn) { trace_ = std::move(fn); }
  /// Called for every activation-memory write.
  void set_write_hook(WriteFn fn) { on_write_ = std::move(fn); }

 private:
  std::shared_ptr<const CycleProgram> program_;
  PipelineState state_;
  std::vector<i8> amem_;
  std::vector<i8> row_buf_;
  std::vector<i8> weight_buf_;
  std::vector<i32> bias_buf_;
  TraceFn trace_;
  WriteFn on_write_;
};

/// Snapshot of a fault-free run at a cycle boundary.
struct Checkpoint {
  PipelineState state;
  std::vector<i8> amem;
};

struct GoldenRun {
  TensorI8 logits;
  std::uint64_t model_cycles = 0;
  std::uint64_t checkpoint_interval = 0;
  /// checkpoints[i] is the state before cycle i*checkpoint_interval executes.
  std::vector<Checkpoint> checkpoints;
};

/// Fault-free execution. When checkpoint_interval > 0 the golden state is
/// recorded every that many cycles so faulty runs can resume from it.
GoldenRun run_golden(std::shared_ptr<const CycleProgram> program, const TensorI8& image,
                     std::uint64_t checkpoint_interval = 0, const Accelerator::TraceFn& trace = {});

}  // namespace sysfi
