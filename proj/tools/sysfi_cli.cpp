// Command-line front end: golden runs, single injections, campaigns,
// reports, fixture generation and the flip-flop census.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sysfi/accelerator.hpp"
#include "sysfi/campaign.hpp"
#include "sysfi/fault.hpp"
#include "sysfi/model_io.hpp"
#include "sysfi/report.hpp"
#include "sysfi/scheduler.hpp"

namespace {

using namespace sysfi;
using ojson = nlohmann::ordered_json;

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (text.size() > 2 && (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0))
      v = std::stoull(text.substr(2), &used, 16), used += 2;
    else
      v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-')
    throw std::invalid_argument(fmt::format("seed must be decimal or 0x-hex, got '{}'", text));
  return v;
}

ojson logits_json(const TensorI8& t) {
  ojson arr = ojson::array();
  for (i8 v : t.data) arr.push_back(int{v});
  return arr;
}

const LabeledImage& pick_image(const Dataset& ds, std::size_t index) {
  if (index >= ds.images.size())
    throw std::out_of_range(fmt::format("image {} not in dataset ({} images)", index, ds.images.size()));
  return ds.images[index];
}

struct CommonArgs {
  std::string model;
  std::string dataset;
  std::string sa = "2x2";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--model", args.model, "Model container (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dataset", args.dataset, "Dataset container (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--sa", args.sa, "Systolic array size RxC")->capture_default_str();
}

int cmd_golden(const CommonArgs& args, std::optional<std::size_t> image, const std::string& trace_path) {
  const auto model = load_model(args.model);
  const auto dataset = load_dataset(args.dataset);
  const auto sa = SaConfig::parse(args.sa);
  auto program = std::make_shared<const CycleProgram>(compile(model, sa));

  std::vector<std::size_t> indices;
  if (image) {
    pick_image(dataset, *image);
    indices.push_back(*image);
  } else {
    for (std::size_t i = 0; i < dataset.images.size(); ++i) indices.push_back(i);
  }

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path, std::ios::trunc);
    if (!trace) throw std::runtime_error(fmt::format("cannot write trace '{}'", trace_path));
  }

  ojson out;
  out["model"] = model.name;
  out["sa"] = sa.label();
  out["model_cycles"] = program->total_cycles();
  out["images"] = ojson::array();
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const auto& img = dataset.images[indices[n]];
    Accelerator::TraceFn fn;
    if (trace.is_open() && n == 0) fn = [&](const PipelineState& s) { trace << trace_line(s) << '\n'; };
    const auto golden = run_golden(program, img.image, 0, fn);
    out["images"].push_back({{"image", indices[n]},
                             {"label", img.label},
                             {"argmax", argmax(golden.logits.data)},
                             {"logits", logits_json(golden.logits)}});
  }
  std::cout << out.dump() << '\n';
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Cycle-accurate systolic-array accelerator simulator with single-bit fault injection"};
  app.require_subcommand(1);

  CommonArgs golden_args;
  std::optional<std::size_t> golden_image;
  std::string trace_path;
  auto* golden = app.add_subcommand("golden", "Fault-free inference; prints logits JSON");
  add_common(golden, golden_args);
  golden->add_option("--image", golden_image, "Only this image index");
  golden->add_option("--trace", trace_path, "Write a per-cycle register trace of the first image");

  CommonArgs inject_args;
  std::size_t inject_image = 0;
  std::uint64_t inject_cycle = 0;
  std::string inject_group;
  int inject_instance = 0, inject_bit = 0;
  auto* inject_cmd = app.add_subcommand("inject", "Single bit flip; prints outcome JSON");
  add_common(inject_cmd, inject_args);
  inject_cmd->add_option("--image", inject_image, "Image index")->required();
  inject_cmd->add_option("--cycle", inject_cycle, "Edge after which the bit flips")->required();
  inject_cmd->add_option("--group", inject_group, "Register group, e.g. accum-reg")->required();
  inject_cmd->add_option("--instance", inject_instance, "Register instance")->required();
  inject_cmd->add_option("--bit", inject_bit, "Bit index")->required();

  CommonArgs camp_args;
  std::uint64_t iters = 0;
  std::string seed_text = "0";
  bool stratified = false;
  std::string out_dir;
  int jobs = 1;
  std::size_t max_images = 0;
  std::uint64_t checkpoint = 256;
  auto* camp = app.add_subcommand("campaign", "Monte-Carlo fault-injection campaign");
  add_common(camp, camp_args);
  camp->add_option("--iters", iters, "Injections per image")->required();
  camp->add_option("--seed", seed_text, "Seed, decimal or 0x-hex")->capture_default_str();
  camp->add_flag("--stratified", stratified, "Equal injections per register group");
  camp->add_option("--out", out_dir, "Output directory")->required();
  camp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  camp->add_option("--images", max_images, "Use only the first N images (0 = all)");
  camp->add_option("--checkpoint-interval", checkpoint, "Golden checkpoint spacing in cycles (0 = full replay)")
      ->capture_default_str();

  std::vector<std::string> stats_files;
  std::string svg_out, csv_out, json_out;
  auto* report = app.add_subcommand("report", "Render campaign statistics");
  report->add_option("--stats", stats_files, "stats.json from a campaign (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--svg", svg_out, "SVG bar chart output");
  report->add_option("--csv", csv_out, "CSV output (first stats file)");
  report->add_option("--json", json_out, "JSON output (first stats file)");

  std::string fixture_kind = "fc3";
  std::string fixture_seed = "0";
  std::string fixture_out;
  auto* gen = app.add_subcommand("gen-fixture", "Write a deterministic synthetic model and dataset");
  gen->add_option("--kind", fixture_kind, "fc3 | lenet-like | lenet-like-rgb")->capture_default_str();
  gen->add_option("--seed", fixture_seed, "Seed, decimal or 0x-hex")->capture_default_str();
  gen->add_option("--out", fixture_out, "Output directory")->required();

  std::string enum_sa = "2x2";
  auto* enumerate = app.add_subcommand("enumerate", "Print the flip-flop address map");
  enumerate->add_option("--sa", enum_sa, "Systolic array size RxC")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0
  }

  if (golden->parsed()) return cmd_golden(golden_args, golden_image, trace_path);

  if (inject_cmd->parsed()) {
    const auto model = load_model(inject_args.model);
    const auto dataset = load_dataset(inject_args.dataset);
    const auto sa = SaConfig::parse(inject_args.sa);
    auto program = std::make_shared<const CycleProgram>(compile(model, sa));
    const auto& img = pick_image(dataset, inject_image);
    const FaultSpec fault{{parse_group(inject_group), inject_instance, inject_bit}, inject_cycle};
    const auto golden_run = run_golden(program, img.image);
    const auto faulty = run_faulty(program, img.image, fault);
    const auto outcome = classify(golden_run.logits, faulty);
    ojson out;
    out["image"] = inject_image;
    out["cycle"] = fault.cycle;
    out["group"] = std::string(group_name(fault.address.group));
    out["instance"] = fault.address.instance;
    out["bit"] = fault.address.bit;
    out["outcome"] = std::string(outcome_name(outcome.kind));
    out["logit_delta"] = outcome.logit_delta;
    out["golden"] = logits_json(golden_run.logits);
    out["faulty"] = logits_json(faulty);
    std::cout << out.dump() << '\n';
    return 0;
  }

  if (camp->parsed()) {
    const auto model = load_model(camp_args.model);
    const auto dataset = load_dataset(camp_args.dataset);
    CampaignConfig cfg;
    cfg.sa = SaConfig::parse(camp_args.sa);
    cfg.iterations = iters;
    cfg.seed = parse_seed(seed_text);
    cfg.sampling = stratified ? SamplingMode::Stratified : SamplingMode::UniformBit;
    cfg.jobs = jobs;
    cfg.max_images = max_images;
    cfg.checkpoint_interval = checkpoint;
    std::cerr << fmt::format("campaign: {} on {} ({} sampling), {} images x {} injections\n", model.name,
                             cfg.sa.label(), sampling_name(cfg.sampling),
                             max_images ? std::min(max_images, dataset.images.size()) : dataset.images.size(), iters);
    const auto result = run_campaign(model, dataset, cfg);
    write_campaign_outputs(result, out_dir);
    std::cerr << fmt::format("campaign: {} injections written to {}\n", result.records.size(), out_dir);
    return 0;
  }

  if (report->parsed()) {
    std::vector<CampaignStats> stats;
    for (const auto& f : stats_files) stats.push_back(stats_from_json(read_text_file(f)));
    if (!svg_out.empty()) write_text_file(svg_out, render_svg(stats));
    if (!csv_out.empty()) write_text_file(csv_out, stats_to_csv(stats.front()));
    if (!json_out.empty()) write_text_file(json_out, stats_to_json(stats.front()));
    if (svg_out.empty() && csv_out.empty() && json_out.empty()) std::cout << stats_to_csv(stats.front());
    return 0;
  }

  if (gen->parsed()) {
    const auto fx = gen_fixture(parse_fixture_kind(fixture_kind), parse_seed(fixture_seed));
    std::filesystem::create_directories(fixture_out);
    save_model(fx.model, std::filesystem::path(fixture_out) / "model.json");
    save_dataset(fx.dataset, std::filesystem::path(fixture_out) / "dataset.json");
    std::cerr << fmt::format("wrote {} ({} layers, {} images) to {}\n", fx.model.name, fx.model.layers.size(),
                             fx.dataset.images.size(), fixture_out);
    return 0;
  }

  if (enumerate->parsed()) {
    const auto sa = SaConfig::parse(enum_sa);
    ojson out;
    out["sa"] = sa.label();
    out["total_bits"] = total_ff_bits(sa);
    out["groups"] = ojson::array();
    for (auto g : kAllGroups)
      out["groups"].push_back({{"group", std::string(group_name(g))},
                               {"registers", register_count(g, sa)},
                               {"width", register_width(g)},
                               {"bits", group_bits(g, sa)}});
    out["ffs"] = ojson::array();
    for (const auto& a : enumerate_ffs(sa))
      out["ffs"].push_back({{"group", std::string(group_name(a.group))}, {"instance", a.instance}, {"bit", a.bit}});
    std::cout << out.dump() << '\n';
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
