#include "sysfi/fault.hpp"

#include <cstdlib>

#include <fmt/format.h>

namespace sysfi {

std::vector<RegisterAddress> enumerate_ffs(const SaConfig& sa) {
  sa.validate();
  std::vector<RegisterAddress> out;
  out.reserve(total_ff_bits(sa));
  for (auto group : kAllGroups) {
    const int count = register_count(group, sa), width = register_width(group);
    for (int i = 0; i < count; ++i)
      for (int b = 0; b < width; ++b) out.push_back({group, i, b});
  }
  return out;
}

std::uint64_t group_bits(RegisterGroup group, const SaConfig& sa) {
  return static_cast<std::uint64_t>(register_count(group, sa)) * register_width(group);
}

std::uint64_t total_ff_bits(const SaConfig& sa) {
  std::uint64_t n = 0;
  for (auto g : kAllGroups) n += group_bits(g, sa);
  return n;
}

void validate_address(const RegisterAddress& a, const SaConfig& sa) {
  if (a.instance < 0 || a.instance >= register_count(a.group, sa))
    throw std::out_of_range(fmt::format("{} instance {} does not exist on a {} array", group_name(a.group), a.instance,
                                        sa.label()));
  if (a.bit < 0 || a.bit >= register_width(a.group))
    throw std::out_of_range(fmt::format("{} has no bit {}", group_name(a.group), a.bit));
}

std::string_view outcome_name(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Masked: return "masked";
    case OutcomeKind::NonCritical: return "noncrit";
    case OutcomeKind::Critical: return "crit";
  }
  return "?";
}

OutcomeKind parse_outcome(std::string_view name) {
  if (name == "masked") return OutcomeKind::Masked;
  if (name == "noncrit") return OutcomeKind::NonCritical;
  if (name == "crit") return OutcomeKind::Critical;
  throw std::invalid_argument(fmt::format("unknown outcome '{}'", name));
}

std::size_t argmax(std::span<const i8> logits) {
  if (logits.empty()) throw ShapeError("argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

Outcome classify(const TensorI8& golden, const TensorI8& faulty) {
  if (golden.shape != faulty.shape || golden.size() != faulty.size())
    throw ShapeError(fmt::format("cannot compare logits of shape {} and {}", shape_string(golden.shape),
                                 shape_string(faulty.shape)));
  Outcome out;
  for (std::size_t i = 0; i < golden.size(); ++i)
    out.logit_delta = std::max(out.logit_delta, std::abs(int{golden[i]} - int{faulty[i]}));
  if (out.logit_delta == 0)
    out.kind = OutcomeKind::Masked;
  else if (argmax(golden.data) != argmax(faulty.data))
    out.kind = OutcomeKind::Critical;
  else
    out.kind = OutcomeKind::NonCritical;
  return out;
}

void inject(PipelineState& state, const FaultSpec& fault) {
  validate_address(fault.address, state.config());
  if (state.cycle() != fault.cycle + 1)
    throw std::logic_error(fmt::format("fault scheduled after edge {} but pipeline is at cycle {}", fault.cycle,
                                       state.cycle()));
  state.flip(fault.address);
}

namespace {

void check_fault(const CycleProgram& program, const FaultSpec& fault) {
  validate_address(fault.address, program.sa);
  if (fault.cycle >= program.total_cycles())
    throw std::out_of_range(fmt::format("fault cycle {} beyond model cycles {}", fault.cycle, program.total_cycles()));
}

}  // namespace

TensorI8 run_faulty(std::shared_ptr<const CycleProgram> program, const TensorI8& image, const FaultSpec& fault) {
  check_fault(*program, fault);
  Accelerator acc(program, image);
  acc.run_until(fault.cycle + 1);
  inject(acc.state(), fault);
  acc.run();
  return acc.output();
}

TensorI8 run_faulty(std::shared_ptr<const CycleProgram> program, const GoldenRun& golden, const TensorI8& image,
                    const FaultSpec& fault) {
  check_fault(*program, fault);
  const std::uint64_t interval = golden.checkpoint_interval;
  if (interval == 0 || golden.checkpoints.empty()) return run_faulty(std::move(program), image, fault);

  Accelerator acc(program, image);
  acc.restore(golden.checkpoints[fault.cycle / interval]);
  acc.run_until(fault.cycle + 1);
  inject(acc.state(), fault);
  for (;;) {
    const std::uint64_t next = (acc.cycle() / interval + 1) * interval;
    acc.run_until(next);
    if (acc.done()) break;
    if (acc.matches(golden.checkpoints[next / interval])) return golden.logits;
  }
  return acc.output();
}

}  // namespace sysfi
