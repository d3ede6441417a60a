#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "sysfi/accelerator.hpp"
#include "sysfi/datapath.hpp"

namespace sysfi {

/// Every flip-flop of the pipeline, ordered by group (canonical group
/// order), then instance, then bit (LSB first).
std::vector<RegisterAddress> enumerate_ffs(const SaConfig& sa);

/// Flip-flops in one group: count * width.
std::uint64_t group_bits(RegisterGroup group, const SaConfig& sa);
std::uint64_t total_ff_bits(const SaConfig& sa);

/// Throws std::out_of_range unless the address exists for this array.
void validate_address(const RegisterAddress& address, const SaConfig& sa);

/// A single transient bit flip, applied right after the edge of `cycle`.
struct FaultSpec {
  RegisterAddress address;
  std::uint64_t cycle = 0;
  friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

enum class OutcomeKind : std::uint8_t { Masked, NonCritical, Critical };

std::string_view outcome_name(OutcomeKind kind);  // "masked" | "noncrit" | "crit"
OutcomeKind parse_outcome(std::string_view name);

struct Outcome {
  OutcomeKind kind = OutcomeKind::Masked;
  int logit_delta = 0;  // max |faulty - golden| over the logits
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Index of the largest logit; ties go to the lowest index.
std::size_t argmax(std::span<const i8> logits);

Outcome classify(const TensorI8& golden, const TensorI8& faulty);

/// XORs the addressed bit. The edge of fault.cycle must just have been
/// applied, i.e. state.cycle() == fault.cycle + 1. The corrupted value stays
/// until the register is next written.
void inject(PipelineState& state, const FaultSpec& fault);

/// Full replay with one injected fault.
TensorI8 run_faulty(std::shared_ptr<const CycleProgram> program, const TensorI8& image, const FaultSpec& fault);

/// Same result as the full replay, resumed from the golden checkpoint before
/// the fault and cut short once the faulty state rejoins the golden one.
TensorI8 run_faulty(std::shared_ptr<const CycleProgram> program, const GoldenRun& golden, const TensorI8& image,
                    const FaultSpec& fault);

}  // namespace sysfi
