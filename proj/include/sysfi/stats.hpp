#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sysfi/datapath.hpp"

namespace sysfi {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes out of n at the given two-sided z.
/// n == 0 yields [0, 1].
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

struct GroupStats {
  std::string group;
  std::uint64_t n = 0;
  std::uint64_t masked = 0;
  std::uint64_t noncrit = 0;
  std::uint64_t crit = 0;

  double f_noncrit() const { return n == 0 ? 0.0 : static_cast<double>(noncrit) / static_cast<double>(n); }
  double f_crit() const { return n == 0 ? 0.0 : static_cast<double>(crit) / static_cast<double>(n); }
  Interval f_noncrit_ci() const { return wilson_interval(noncrit, n); }
  Interval f_crit_ci() const { return wilson_interval(crit, n); }
};

/// The four register families used in the discussion of results.
enum class RegisterFamily : std::uint8_t { SaNarrow, SaWide, Accumulator, PostProcessing };

inline constexpr std::array<RegisterFamily, 4> kAllFamilies = {
    RegisterFamily::SaNarrow, RegisterFamily::SaWide, RegisterFamily::Accumulator, RegisterFamily::PostProcessing};

RegisterFamily family_of(RegisterGroup group);
std::string family_name(RegisterFamily family);  // "8-bit-sa" | "32-bit-sa" | "32-bit-accum" | "post-processing"

struct CampaignStats {
  std::string label;  // e.g. model name and array size
  std::string sa;
  std::string sampling;
  std::array<GroupStats, 9> groups;
  std::array<GroupStats, 4> families;
  GroupStats total;

  CampaignStats();
  GroupStats& group(RegisterGroup g) { return groups[static_cast<std::size_t>(g)]; }
  const GroupStats& group(RegisterGroup g) const { return groups[static_cast<std::size_t>(g)]; }
  const GroupStats& family(RegisterFamily f) const { return families[static_cast<std::size_t>(f)]; }
  /// Per-group rows, then families, then total.
  std::vector<const GroupStats*> rows() const;
};

}  // namespace sysfi
