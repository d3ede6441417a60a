#pragma once

#include <span>
#include <string>
#include <string_view>

#include "sysfi/stats.hpp"

namespace sysfi {

inline constexpr std::string_view kStatsCsvHeader =
    "group,n,masked,noncrit,crit,f_noncrit,f_noncrit_lo,f_noncrit_hi,f_crit,f_crit_lo,f_crit_hi";

/// One row per group with at least one injection: registers, then the four
/// families, then the total.
std::string stats_to_csv(const CampaignStats& stats);

std::string stats_to_json(const CampaignStats& stats);
CampaignStats stats_from_json(std::string_view text);

/// Paired horizontal bar charts per register group: F_crit on the left,
/// F_noncrit on the right, one bar per campaign (e.g. per array size) with
/// Wilson interval whiskers.
std::string render_svg(std::span<const CampaignStats> campaigns);

}  // namespace sysfi
