#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sysfi/fault.hpp"
#include "sysfi/model.hpp"
#include "sysfi/model_io.hpp"
#include "sysfi/stats.hpp"

namespace sysfi {

enum class SamplingMode { UniformBit, Stratified };

std::string_view sampling_name(SamplingMode mode);  // "uniform-bit" | "stratified"

struct CampaignConfig {
  SaConfig sa;
  std::uint64_t iterations = 1;  // injections per image
  std::uint64_t seed = 0;
  SamplingMode sampling = SamplingMode::UniformBit;
  int jobs = 1;
  /// Golden checkpoint spacing in cycles; 0 replays every faulty run in full.
  std::uint64_t checkpoint_interval = 256;
  /// Use at most this many images from the dataset (0 = all).
  std::size_t max_images = 0;
};

struct GoldenRecord {
  std::size_t image = 0;
  std::uint64_t model_cycles = 0;
  TensorI8 golden;
};

struct CampaignRecord {
  std::size_t image = 0;
  std::uint64_t iter = 0;
  FaultSpec fault;
  Outcome outcome;
  friend bool operator==(const CampaignRecord&, const CampaignRecord&) = default;
};

struct CampaignResult {
  std::vector<GoldenRecord> goldens;
  std::vector<CampaignRecord> records;  // ordered by (image, iter)
  CampaignStats stats;
};

/// Register groups that own at least one flip-flop on this array.
std::vector<RegisterGroup> populated_groups(const SaConfig& sa);

/// The fault for injection `iter` on image `image`. The first draw of the
/// per-injection stream picks the flip-flop, the second the cycle.
/// Stratified mode assigns groups round-robin over image*iterations+iter.
FaultSpec draw_fault(const SaConfig& sa, std::uint64_t model_cycles, SamplingMode mode, std::uint64_t seed,
                     std::size_t image, std::uint64_t iter, std::uint64_t iterations);

/// Golden run per image followed by `iterations` single-bit injections,
/// each classified against the golden logits. Results are independent of
/// cfg.jobs.
CampaignResult run_campaign(const ModelSpec& model, const Dataset& dataset, const CampaignConfig& cfg);

/// Per-group, per-family and total outcome counts with Wilson intervals.
CampaignStats aggregate(std::span<const CampaignRecord> records);

std::string record_json_line(const CampaignRecord& record);
std::string golden_json_line(const GoldenRecord& golden);

/// Golden line for each image followed by its injection records.
std::string campaign_log(const CampaignResult& result);

/// Writes records.jsonl, stats.csv and stats.json into `dir`.
void write_campaign_outputs(const CampaignResult& result, const std::filesystem::path& dir);

}  // namespace sysfi
