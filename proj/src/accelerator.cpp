#include "sysfi/accelerator.hpp"

#include <fmt/format.h>

namespace sysfi {

Accelerator::Accelerator(std::shared_ptr<const CycleProgram> program, const TensorI8& image)
    : program_(std::move(program)), state_(program_->sa) {
  if (image.shape != program_->input_shape)
    throw ShapeError(fmt::format("image shape {} does not match model input {}", shape_string(image.shape),
                                 shape_string(program_->input_shape)));
  amem_.assign(program_->amem_size, 0);
  std::copy(image.data.begin(), image.data.end(), amem_.begin());
  const auto& sa = program_->sa;
  row_buf_.resize(sa.rows);
  weight_buf_.resize(static_cast<std::size_t>(sa.rows) * sa.cols);
  bias_buf_.resize(sa.cols);
}

void Accelerator::step() {
  const auto& prog = *program_;
  const auto now = state_.cycle();
  if (now >= prog.total_cycles()) throw std::out_of_range("program already finished");
  const CycleControl& cc = prog.cycles[now];
  const auto& sa = prog.sa;
  const int rows = sa.rows, cols = sa.cols;

  // Write-back samples the mux output latched at the previous edge.
  if (cc.writeback >= 0) {
    const std::int32_t* addrs = prog.wb_addrs.data() + static_cast<std::size_t>(cc.writeback) * cols;
    for (int c = 0; c < cols; ++c) {
      if (addrs[c] < 0) continue;
      const i8 v = state_.output(c, cc.writeback_from_pool);
      amem_[addrs[c]] = v;
      if (on_write_) on_write_(now, static_cast<std::size_t>(addrs[c]), v);
    }
  }

  StepControl ctrl;
  if (cc.activation >= 0) {
    const std::int32_t* addrs = prog.act_addrs.data() + static_cast<std::size_t>(cc.activation) * rows;
    for (int r = 0; r < rows; ++r) row_buf_[r] = addrs[r] < 0 ? i8{0} : amem_[addrs[r]];
    ctrl.row_inputs = row_buf_;
  }
  if (cc.weight_tile >= 0) {
    const std::size_t n = weight_buf_.size();
    const std::int32_t* addrs = prog.weight_addrs.data() + static_cast<std::size_t>(cc.weight_tile) * n;
    for (std::size_t i = 0; i < n; ++i) weight_buf_[i] = addrs[i] < 0 ? i8{0} : prog.wmem[addrs[i]];
    ctrl.weights = weight_buf_;
  }
  if (cc.bias >= 0) {
    const std::int32_t* addrs = prog.bias_addrs.data() + static_cast<std::size_t>(cc.bias) * cols;
    for (int c = 0; c < cols; ++c) bias_buf_[c] = addrs[c] < 0 ? 0 : prog.bmem[addrs[c]];
    ctrl.accum = AccumOp::LoadBias;
    ctrl.bias = bias_buf_;
  } else if (cc.accumulate) {
    ctrl.accum = AccumOp::Accumulate;
  }
  const auto& layer = prog.layers[cc.layer];
  ctrl.round = cc.round;
  ctrl.shift = layer.shift;
  ctrl.nlf = cc.nlf;
  ctrl.lut = &layer.lut;
  ctrl.pool = cc.pool;

  state_.step(ctrl);
  if (trace_) trace_(state_);
}

void Accelerator::run_until(std::uint64_t cycle) {
  const auto stop = std::min(cycle, program_->total_cycles());
  while (state_.cycle() < stop) step();
}

TensorI8 Accelerator::output() const {
  const auto& out = program_->output_layer();
  std::vector<i8> data(amem_.begin() + static_cast<std::ptrdiff_t>(out.out_offset),
                       amem_.begin() + static_cast<std::ptrdiff_t>(out.out_offset + out.out_size));
  return TensorI8(program_->output_shape, std::move(data));
}

bool Accelerator::same_state(const Accelerator& other) const {
  return state_.same_registers(other.state_) && amem_ == other.amem_;
}

bool Accelerator::matches(const Checkpoint& checkpoint) const {
  return state_.same_registers(checkpoint.state) && amem_ == checkpoint.amem;
}

void Accelerator::restore(const Checkpoint& checkpoint) {
  if (!(checkpoint.state.config() == program_->sa)) throw std::invalid_argument("checkpoint from a different array");
  state_ = checkpoint.state;
  amem_ = checkpoint.amem;
}

GoldenRun run_golden(std::shared_ptr<const CycleProgram> program, const TensorI8& image,
                     std::uint64_t checkpoint_interval, const Accelerator::TraceFn& trace) {
  Accelerator acc(program, image);
  if (trace) acc.set_trace(trace);
  GoldenRun golden;
  golden.model_cycles = program->total_cycles();
  golden.checkpoint_interval = checkpoint_interval;
  if (checkpoint_interval > 0) {
    golden.checkpoints.reserve(golden.model_cycles / checkpoint_interval + 1);
    while (!acc.done()) {
      golden.checkpoints.push_back({acc.state(), acc.amem()});
      acc.run_until(acc.cycle() + checkpoint_interval);
    }
  } else {
    acc.run();
  }
  golden.logits = acc.output();
  return golden;
}

}  // namespace sysfi
