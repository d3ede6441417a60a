#include "sysfi/campaign.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "sysfi/accelerator.hpp"
#include "sysfi/prng.hpp"
#include "sysfi/report.hpp"
#include "sysfi/scheduler.hpp"

namespace sysfi {

std::string_view sampling_name(SamplingMode mode) {
  return mode == SamplingMode::UniformBit ? "uniform-bit" : "stratified";
}

std::vector<RegisterGroup> populated_groups(const SaConfig& sa) {
  std::vector<RegisterGroup> out;
  for (auto g : kAllGroups)
    if (register_count(g, sa) > 0) out.push_back(g);
  return out;
}

namespace {

RegisterAddress address_in_group(RegisterGroup group, std::uint64_t bit_index) {
  const int width = register_width(group);
  return {group, static_cast<int>(bit_index / width), static_cast<int>(bit_index % width)};
}

}  // namespace

FaultSpec draw_fault(const SaConfig& sa, std::uint64_t model_cycles, SamplingMode mode, std::uint64_t seed,
                     std::size_t image, std::uint64_t iter, std::uint64_t iterations) {
  if (model_cycles == 0) throw std::invalid_argument("model has no cycles");
  SplitMix64 rng(injection_stream_seed(seed, image, iter));
  FaultSpec fault;
  if (mode == SamplingMode::UniformBit) {
    std::uint64_t index = rng.below(total_ff_bits(sa));
    for (auto g : kAllGroups) {
      const auto bits = group_bits(g, sa);
      if (index < bits) {
        fault.address = address_in_group(g, index);
        break;
      }
      index -= bits;
    }
  } else {
    const auto groups = populated_groups(sa);
    const auto group = groups[(static_cast<std::uint64_t>(image) * iterations + iter) % groups.size()];
    fault.address = address_in_group(group, rng.below(group_bits(group, sa)));
  }
  fault.cycle = rng.below(model_cycles);
  return fault;
}

CampaignResult run_campaign(const ModelSpec& model, const Dataset& dataset, const CampaignConfig& cfg) {
  cfg.sa.validate();
  if (cfg.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  auto program = std::make_shared<const CycleProgram>(compile(model, cfg.sa));

  std::size_t n_images = dataset.images.size();
  if (cfg.max_images > 0) n_images = std::min(n_images, cfg.max_images);

  CampaignResult result;
  result.records.resize(n_images * cfg.iterations);
  for (std::size_t img = 0; img < n_images; ++img) {
    const auto& image = dataset.images[img].image;
    const GoldenRun golden = run_golden(program, image, cfg.checkpoint_interval);
    result.goldens.push_back({img, golden.model_cycles, golden.logits});
    if (cfg.iterations == 0) continue;

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      try {
        for (std::uint64_t it = next++; it < cfg.iterations; it = next++) {
          CampaignRecord rec;
          rec.image = img;
          rec.iter = it;
          rec.fault = draw_fault(cfg.sa, golden.model_cycles, cfg.sampling, cfg.seed, img, it, cfg.iterations);
          rec.outcome = classify(golden.logits, run_faulty(program, golden, image, rec.fault));
          result.records[img * cfg.iterations + it] = rec;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = cfg.iterations;
      }
    };
    const int threads = static_cast<int>(std::min<std::uint64_t>(cfg.jobs, cfg.iterations));
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
  }
  result.stats = aggregate(result.records);
  result.stats.label = model.name;
  result.stats.sa = cfg.sa.label();
  result.stats.sampling = std::string(sampling_name(cfg.sampling));
  return result;
}

CampaignStats aggregate(std::span<const CampaignRecord> records) {
  CampaignStats stats;
  auto add = [](GroupStats& s, OutcomeKind kind) {
    ++s.n;
    switch (kind) {
      case OutcomeKind::Masked: ++s.masked; break;
      case OutcomeKind::NonCritical: ++s.noncrit; break;
      case OutcomeKind::Critical: ++s.crit; break;
    }
  };
  for (const auto& r : records) {
    const auto g = r.fault.address.group;
    add(stats.group(g), r.outcome.kind);
    add(stats.families[static_cast<std::size_t>(family_of(g))], r.outcome.kind);
    add(stats.total, r.outcome.kind);
  }
  return stats;
}

std::string record_json_line(const CampaignRecord& r) {
  return fmt::format(
      R"({{"image":{},"iter":{},"cycle":{},"group":"{}","instance":{},"bit":{},"outcome":"{}","logit_delta":{}}})",
      r.image, r.iter, r.fault.cycle, group_name(r.fault.address.group), r.fault.address.instance,
      r.fault.address.bit, outcome_name(r.outcome.kind), r.outcome.logit_delta);
}

std::string golden_json_line(const GoldenRecord& g) {
  std::vector<int> logits(g.golden.data.begin(), g.golden.data.end());
  return fmt::format(R"({{"image":{},"model_cycles":{},"golden":[{}]}})", g.image, g.model_cycles,
                     fmt::join(logits, ","));
}

std::string campaign_log(const CampaignResult& result) {
  std::string out;
  std::size_t next_record = 0;
  for (const auto& g : result.goldens) {
    out += golden_json_line(g);
    out += '\n';
    while (next_record < result.records.size() && result.records[next_record].image == g.image) {
      out += record_json_line(result.records[next_record++]);
      out += '\n';
    }
  }
  return out;
}

void write_campaign_outputs(const CampaignResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "records.jsonl", campaign_log(result));
  write_text_file(dir / "stats.csv", stats_to_csv(result.stats));
  write_text_file(dir / "stats.json", stats_to_json(result.stats));
}

}  // namespace sysfi
