#include "sysfi/report.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "json.hpp"
#include "sysfi/model_io.hpp"

namespace sysfi {

using ojson = nlohmann::ordered_json;

std::string stats_to_csv(const CampaignStats& stats) {
  std::string out(kStatsCsvHeader);
  out += '\n';
  for (const GroupStats* g : stats.rows()) {
    if (g->n == 0) continue;
    const auto nc = g->f_noncrit_ci();
    const auto cr = g->f_crit_ci();
    out += fmt::format("{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", g->group, g->n, g->masked,
                       g->noncrit, g->crit, g->f_noncrit(), nc.lo, nc.hi, g->f_crit(), cr.lo, cr.hi);
  }
  return out;
}

namespace {

ojson group_json(const GroupStats& g) {
  const auto nc = g.f_noncrit_ci();
  const auto cr = g.f_crit_ci();
  ojson j;
  j["group"] = g.group;
  j["n"] = g.n;
  j["masked"] = g.masked;
  j["noncrit"] = g.noncrit;
  j["crit"] = g.crit;
  j["f_noncrit"] = g.f_noncrit();
  j["f_noncrit_ci"] = ojson::array({nc.lo, nc.hi});
  j["f_crit"] = g.f_crit();
  j["f_crit_ci"] = ojson::array({cr.lo, cr.hi});
  return j;
}

void read_counts(const ojson& j, GroupStats& g) {
  g.n = j.at("n").get<std::uint64_t>();
  g.masked = j.at("masked").get<std::uint64_t>();
  g.noncrit = j.at("noncrit").get<std::uint64_t>();
  g.crit = j.at("crit").get<std::uint64_t>();
  if (g.masked + g.noncrit + g.crit != g.n)
    throw FormatError(fmt::format("stats for {} do not add up to n", g.group));
}

}  // namespace

std::string stats_to_json(const CampaignStats& stats) {
  ojson doc;
  doc["label"] = stats.label;
  doc["sa"] = stats.sa;
  doc["sampling"] = stats.sampling;
  doc["groups"] = ojson::array();
  for (const auto& g : stats.groups) doc["groups"].push_back(group_json(g));
  doc["families"] = ojson::array();
  for (const auto& f : stats.families) doc["families"].push_back(group_json(f));
  doc["total"] = group_json(stats.total);
  return doc.dump(2) + "\n";
}

CampaignStats stats_from_json(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("stats file is not valid JSON: {}", e.what()));
  }
  CampaignStats stats;
  try {
    stats.label = doc.value("label", "");
    stats.sa = doc.value("sa", "");
    stats.sampling = doc.value("sampling", "");
    for (const auto& j : doc.at("groups")) read_counts(j, stats.group(parse_group(j.at("group").get<std::string>())));
    for (const auto& j : doc.at("families")) {
      const auto name = j.at("group").get<std::string>();
      for (auto f : kAllFamilies)
        if (family_name(f) == name) read_counts(j, stats.families[static_cast<std::size_t>(f)]);
    }
    read_counts(doc.at("total"), stats.total);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed stats file: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw FormatError(fmt::format("malformed stats file: {}", e.what()));
  }
  return stats;
}

std::string render_svg(std::span<const CampaignStats> campaigns) {
  constexpr std::array<std::string_view, 6> kColors = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                                        "#d62728", "#9467bd", "#8c564b"};
  constexpr double kLabelW = 140, kPanelW = 300, kGap = 40, kBarH = 10, kGroupPad = 8, kTop = 60;
  const std::size_t series = std::max<std::size_t>(campaigns.size(), 1);
  const double group_h = static_cast<double>(series) * kBarH + kGroupPad;
  const double height = kTop + 9 * group_h + 40;
  const double width = 2 * kLabelW + 2 * kPanelW + kGap;

  double max_rate = 0.0;
  for (const auto& c : campaigns)
    for (const auto& g : c.groups) max_rate = std::max({max_rate, g.f_crit_ci().hi, g.f_noncrit_ci().hi});
  max_rate = max_rate <= 0.0 ? 1.0 : std::min(1.0, max_rate * 1.05);

  std::string svg = fmt::format(
      R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0:.0f}" height="{1:.0f}" viewBox="0 0 {0:.0f} {1:.0f}" font-family="sans-serif" font-size="11">)"
      "\n",
      width, height);
  svg += fmt::format(R"(<rect x="0" y="0" width="{:.0f}" height="{:.0f}" fill="white"/>)"
                     "\n",
                     width, height);

  // Left panel grows leftwards from its axis, right panel rightwards.
  const double left_axis = kLabelW + kPanelW;
  const double right_axis = left_axis + kGap + kLabelW;
  svg += fmt::format(R"(<text x="{:.1f}" y="20" text-anchor="middle" font-weight="bold">F_crit</text>)"
                     "\n",
                     left_axis - kPanelW / 2);
  svg += fmt::format(R"(<text x="{:.1f}" y="20" text-anchor="middle" font-weight="bold">F_noncrit</text>)"
                     "\n",
                     right_axis + kPanelW / 2);
  for (std::size_t s = 0; s < campaigns.size(); ++s) {
    const auto& c = campaigns[s];
    const double lx = 10 + static_cast<double>(s) * 160;
    svg += fmt::format(R"(<g class="legend"><rect x="{:.1f}" y="32" width="10" height="10" fill="{}"/>)"
                       R"(<text x="{:.1f}" y="41">{} {}</text></g>)"
                       "\n",
                       lx, kColors[s % kColors.size()], lx + 14, c.label, c.sa);
  }

  auto bar = [&](double axis, int dir, double y, double rate, Interval ci, std::string_view color) {
    const double len = rate / max_rate * kPanelW;
    const double x = dir < 0 ? axis - len : axis;
    std::string out = fmt::format(R"(<rect class="bar" x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.1f}" fill="{}"/>)",
                                  x, y, len, kBarH - 2, color);
    const double lo = axis + dir * ci.lo / max_rate * kPanelW;
    const double hi = axis + dir * ci.hi / max_rate * kPanelW;
    out += fmt::format(R"(<line x1="{:.2f}" x2="{:.2f}" y1="{:.2f}" y2="{:.2f}" stroke="black" stroke-width="1"/>)", lo,
                       hi, y + (kBarH - 2) / 2, y + (kBarH - 2) / 2);
    return out + "\n";
  };

  for (std::size_t gi = 0; gi < kAllGroups.size(); ++gi) {
    const double y0 = kTop + static_cast<double>(gi) * group_h;
    const auto name = group_name(kAllGroups[gi]);
    svg += fmt::format(R"(<g class="group" data-group="{}">)"
                       "\n",
                       name);
    svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="end">{}</text>)"
                       "\n",
                       kLabelW - 6, y0 + group_h / 2, name);
    svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="end">{}</text>)"
                       "\n",
                       right_axis - 6, y0 + group_h / 2, name);
    for (std::size_t s = 0; s < campaigns.size(); ++s) {
      const auto& g = campaigns[s].groups[gi];
      const auto color = kColors[s % kColors.size()];
      const double y = y0 + static_cast<double>(s) * kBarH;
      svg += bar(left_axis, -1, y, g.f_crit(), g.f_crit_ci(), color);
      svg += bar(right_axis, +1, y, g.f_noncrit(), g.f_noncrit_ci(), color);
    }
    svg += "</g>\n";
  }
  const double axis_bottom = kTop + 9 * group_h;
  for (double axis : {left_axis, right_axis})
    svg += fmt::format(R"(<line x1="{0:.1f}" x2="{0:.1f}" y1="{1:.1f}" y2="{2:.1f}" stroke="black"/>)"
                       "\n",
                       axis, kTop - 4, axis_bottom);
  svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">0 .. {:.3f}</text>)"
                     "\n",
                     left_axis - kPanelW / 2, axis_bottom + 20, max_rate);
  svg += fmt::format(R"(<text x="{:.1f}" y="{:.1f}" text-anchor="middle">0 .. {:.3f}</text>)"
                     "\n",
                     right_axis + kPanelW / 2, axis_bottom + 20, max_rate);
  svg += "</svg>\n";
  return svg;
}

}  // namespace sysfi
