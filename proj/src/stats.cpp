#include "sysfi/stats.hpp"

#include <algorithm>
#include <cmath>

namespace sysfi {

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {k == 0 ? 0.0 : std::max(0.0, center - half), k == n ? 1.0 : std::min(1.0, center + half)};
}

RegisterFamily family_of(RegisterGroup group) {
  switch (group) {
    case RegisterGroup::WReg:
    case RegisterGroup::SaFfchainH:
    case RegisterGroup::SaHReg: return RegisterFamily::SaNarrow;
    case RegisterGroup::SaVReg:
    case RegisterGroup::SaFfchainV: return RegisterFamily::SaWide;
    case RegisterGroup::AccumReg: return RegisterFamily::Accumulator;
    default: return RegisterFamily::PostProcessing;
  }
}

std::string family_name(RegisterFamily family) {
  switch (family) {
    case RegisterFamily::SaNarrow: return "8-bit-sa";
    case RegisterFamily::SaWide: return "32-bit-sa";
    case RegisterFamily::Accumulator: return "32-bit-accum";
    case RegisterFamily::PostProcessing: return "post-processing";
  }
  return "?";
}

CampaignStats::CampaignStats() {
  for (auto g : kAllGroups) group(g).group = std::string(group_name(g));
  for (auto f : kAllFamilies) families[static_cast<std::size_t>(f)].group = family_name(f);
  total.group = "total";
}

std::vector<const GroupStats*> CampaignStats::rows() const {
  std::vector<const GroupStats*> out;
  for (const auto& g : groups) out.push_back(&g);
  for (const auto& f : families) out.push_back(&f);
  out.push_back(&total);
  return out;
}

}  // namespace sysfi
