#include <bit>
#include <memory>

#include "doctest.h"
#include "sysfi/fault.hpp"
#include "sysfi/reference.hpp"
#include "test_util.hpp"

using namespace sysfi;
using namespace sysfi::testing;

namespace {

std::shared_ptr<const CycleProgram> compiled(const ModelSpec& m, SaConfig sa) {
  return std::make_shared<const CycleProgram>(compile(m, sa));
}

// Number of register bits that differ between two pipeline states.
int bit_distance(const PipelineState& a, const PipelineState& b) {
  int d = 0;
  a.for_each_register([&](RegisterGroup g, int i, std::uint32_t v) { d += std::popcount(v ^ b.read(g, i)); });
  return d;
}

TensorI8 logits_of(std::span<const i8> v) { return TensorI8({static_cast<int>(v.size())}, {v.begin(), v.end()}); }

ModelSpec small_model(Rng& rng, int final_shift, bool final_relu) {
  return model_of({random_conv(rng, {2, 4, 4}, 3, 3, 3, 1, 1, 8, true, true),
                   random_fc(rng, {3, 2, 2}, 6, final_shift, final_relu)});
}

}  // namespace

TEST_CASE("flip-flop census") {
  CHECK(total_ff_bits({2, 2}) == 344);
  CHECK(total_ff_bits({1, 1}) == 104);
  const std::vector<std::pair<RegisterGroup, int>> two = {
      {RegisterGroup::WReg, 32},     {RegisterGroup::SaFfchainH, 24}, {RegisterGroup::SaHReg, 16},
      {RegisterGroup::SaVReg, 64},   {RegisterGroup::SaFfchainV, 96}, {RegisterGroup::AccumReg, 64},
      {RegisterGroup::RoundReg, 16}, {RegisterGroup::NlfReg, 16},     {RegisterGroup::PoolReg, 16}};
  for (auto [g, bits] : two) CHECK(group_bits(g, {2, 2}) == static_cast<std::uint64_t>(bits));
  CHECK(group_bits(RegisterGroup::SaHReg, {1, 1}) == 0);
  CHECK(group_bits(RegisterGroup::SaVReg, {1, 1}) == 0);

  const auto ffs = enumerate_ffs({2, 2});
  CHECK(ffs.size() == 344);
  CHECK(ffs == enumerate_ffs({2, 2}));
  CHECK(ffs.front() == RegisterAddress{RegisterGroup::WReg, 0, 0});
  CHECK(ffs[8] == RegisterAddress{RegisterGroup::WReg, 1, 0});
  CHECK(ffs.back() == RegisterAddress{RegisterGroup::PoolReg, 1, 7});
  for (const auto& a : ffs) CHECK_NOTHROW(validate_address(a, {2, 2}));
  CHECK_THROWS_AS(validate_address({RegisterGroup::AccumReg, 0, 32}, {2, 2}), std::out_of_range);
}

TEST_CASE("classify") {
  auto t = [](std::vector<i8> v) { return logits_of(v); };
  CHECK(classify(t({10, 5}), t({10, 5})) == Outcome{OutcomeKind::Masked, 0});
  CHECK(classify(t({10, 5}), t({12, 5})) == Outcome{OutcomeKind::NonCritical, 2});
  CHECK(classify(t({10, 5}), t({4, 5})) == Outcome{OutcomeKind::Critical, 6});
  // Ties go to the lowest index on both sides.
  CHECK(argmax(std::vector<i8>{3, 7, 7}) == 1);
  CHECK(classify(t({5, 5}), t({5, 6})).kind == OutcomeKind::Critical);
  CHECK(classify(t({5, 4}), t({5, 5})).kind == OutcomeKind::NonCritical);
  CHECK_THROWS_AS(classify(t({1, 2}), t({1, 2, 3})), ShapeError);
  for (auto k : {OutcomeKind::Masked, OutcomeKind::NonCritical, OutcomeKind::Critical})
    CHECK(parse_outcome(outcome_name(k)) == k);
}

TEST_CASE("injection timing is enforced") {
  PipelineState st({2, 2});
  st.step({});
  CHECK_THROWS_AS(inject(st, {{RegisterGroup::WReg, 0, 0}, 3}), std::logic_error);
  CHECK_NOTHROW(inject(st, {{RegisterGroup::WReg, 0, 0}, 0}));
  Rng rng(1);
  const ModelSpec m = small_model(rng, 4, false);
  auto prog = compiled(m, {2, 2});
  const TensorI8 x = random_i8(rng, m.input_shape());
  CHECK_THROWS_AS(run_faulty(prog, x, {{RegisterGroup::WReg, 0, 0}, prog->total_cycles()}), std::out_of_range);
  CHECK_THROWS_AS(run_faulty(prog, x, {{RegisterGroup::SaVReg, 9, 0}, 5}), std::out_of_range);
}

TEST_CASE("double flip of the same bit restores the golden run") {
  Rng rng(2);
  const ModelSpec m = small_model(rng, 5, false);
  auto prog = compiled(m, {2, 2});
  const TensorI8 x = random_i8(rng, m.input_shape());
  const TensorI8 golden = run_golden(prog, x).logits;
  const auto ffs = enumerate_ffs({2, 2});
  for (int t = 0; t < 100; ++t) {
    const FaultSpec f{ffs[rng() % ffs.size()], rng() % prog->total_cycles()};
    Accelerator acc(prog, x);
    acc.run_until(f.cycle + 1);
    inject(acc.state(), f);
    inject(acc.state(), f);
    acc.run();
    REQUIRE(acc.output() == golden);
  }
}

TEST_CASE("a flip changes exactly one bit of the register state") {
  Rng rng(3);
  const ModelSpec m = small_model(rng, 5, true);
  auto prog = compiled(m, {3, 2});
  const TensorI8 x = random_i8(rng, m.input_shape());
  const auto ffs = enumerate_ffs({3, 2});
  for (int t = 0; t < 100; ++t) {
    const FaultSpec f{ffs[rng() % ffs.size()], rng() % prog->total_cycles()};
    Accelerator golden(prog, x), faulty(prog, x);
    golden.run_until(f.cycle + 1);
    faulty.run_until(f.cycle + 1);
    REQUIRE(bit_distance(golden.state(), faulty.state()) == 0);
    inject(faulty.state(), f);
    REQUIRE(bit_distance(golden.state(), faulty.state()) == 1);
  }
}

TEST_CASE("accumulator sign flip during accumulation adds 2^31") {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    // Single fc layer, S = 0, identity LUT: the logit is clip(accumulator).
    const int k = rand_int(rng, 3, 9), n = rand_int(rng, 1, 5);
    LayerSpec l = random_fc(rng, {k}, n, 0, false);
    const ModelSpec m = model_of({l});
    const SaConfig sa{2, 2};
    auto prog = compiled(m, sa);
    const LayerPlan& plan = prog->output_layer();
    REQUIRE(plan.k_tiles >= 2);
    const TensorI8 x = random_i8(rng, {k});

    const int out = rand_int(rng, 0, n - 1);
    const std::uint64_t group = out / sa.cols;
    const std::uint64_t first_acc =
        last_accumulate_cycle(plan, sa, group) - static_cast<std::uint64_t>(plan.k_tiles - 1) * tile_period(sa);
    const FaultSpec f{{RegisterGroup::AccumReg, out % sa.cols, 31}, first_acc};

    std::int64_t exact = l.bias.data[out];
    for (int i = 0; i < k; ++i) exact += std::int64_t{x.data[i]} * l.weights.data[static_cast<std::size_t>(out) * k + i];
    const auto faulty_acc = static_cast<i32>(static_cast<std::uint32_t>(exact) + 0x80000000u);

    TensorI8 want = reference_inference(m, x);
    want.data[out] = clip8(faulty_acc);
    REQUIRE(run_faulty(prog, x, f) == want);
  }
}

TEST_CASE("weight flip after its last use is masked") {
  Rng rng(5);
  const ModelSpec m = small_model(rng, 4, false);
  const SaConfig sa{2, 2};
  auto prog = compiled(m, sa);
  const LayerPlan& plan = prog->output_layer();
  const std::uint64_t last = last_accumulate_cycle(plan, sa, static_cast<std::uint64_t>(plan.n_tiles) * plan.m - 1);
  const TensorI8 x = random_i8(rng, m.input_shape());
  const TensorI8 golden = run_golden(prog, x).logits;
  for (int inst = 0; inst < 4; ++inst)
    for (int bit = 0; bit < 8; ++bit)
      for (std::uint64_t c = last - 1; c < prog->total_cycles(); ++c)
        REQUIRE(classify(golden, run_faulty(prog, x, {{RegisterGroup::WReg, inst, bit}, c})).kind ==
                OutcomeKind::Masked);
}

TEST_CASE("rounding register sign flip on the output layer") {
  Rng rng(6);
  const ModelSpec m = small_model(rng, 3, false);
  const SaConfig sa{2, 2};
  auto prog = compiled(m, sa);
  const LayerPlan& plan = prog->output_layer();
  const TensorI8 x = random_i8(rng, m.input_shape());
  const TensorI8 golden = run_golden(prog, x).logits;
  for (int out = 0; out < plan.n; ++out) {
    const std::uint64_t round_edge = last_accumulate_cycle(plan, sa, out / sa.cols) + 1;
    TensorI8 want = golden;
    want.data[out] = static_cast<i8>(want.data[out] ^ 0x80);
    REQUIRE(run_faulty(prog, x, {{RegisterGroup::RoundReg, out % sa.cols, 7}, round_edge}) == want);
  }
}

TEST_CASE("sub-shift accumulator flips before rounding move logits by at most one") {
  Rng rng(7);
  int cases = 0;
  while (cases < 200) {
    const int s = rand_int(rng, 2, 8);
    const ModelSpec m = small_model(rng, s, rand_int(rng, 0, 1) == 1);
    const SaConfig sa{rand_int(rng, 1, 4), rand_int(rng, 1, 4)};
    auto prog = compiled(m, sa);
    const LayerPlan& plan = prog->output_layer();
    const TensorI8 x = random_i8(rng, m.input_shape());
    const TensorI8 golden = run_golden(prog, x).logits;
    for (int j = 0; j < 5; ++j, ++cases) {
      const int out = rand_int(rng, 0, plan.n - 1);
      const FaultSpec f{{RegisterGroup::AccumReg, out % sa.cols, rand_int(rng, 0, s - 2)},
                        last_accumulate_cycle(plan, sa, out / sa.cols)};
      const TensorI8 faulty = run_faulty(prog, x, f);
      for (int i = 0; i < plan.n; ++i) REQUIRE(std::abs(faulty.data[i] - golden.data[i]) <= 1);
    }
  }
}

TEST_CASE("checkpointed faulty runs equal full replays") {
  Rng rng(8);
  const ModelSpec m = small_model(rng, 5, true);
  for (SaConfig sa : {SaConfig{1, 1}, SaConfig{2, 2}, SaConfig{4, 3}}) {
    auto prog = compiled(m, sa);
    const auto ffs = enumerate_ffs(sa);
    const TensorI8 x = random_i8(rng, m.input_shape());
    for (std::uint64_t interval : {1u, 16u, 100u}) {
      const GoldenRun g = run_golden(prog, x, interval);
      REQUIRE(g.logits == run_golden(prog, x).logits);
      for (int t = 0; t < 60; ++t) {
        const FaultSpec f{ffs[rng() % ffs.size()], rng() % prog->total_cycles()};
        REQUIRE(run_faulty(prog, g, x, f) == run_faulty(prog, x, f));
      }
    }
  }
}
