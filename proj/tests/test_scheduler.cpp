#include <map>
#include <memory>
#include <set>

#include "doctest.h"
#include "sysfi/accelerator.hpp"
#include "sysfi/model_io.hpp"
#include "sysfi/reference.hpp"
#include "sysfi/scheduler.hpp"
#include "test_util.hpp"

using namespace sysfi;
using namespace sysfi::testing;

namespace {

std::shared_ptr<const CycleProgram> compiled(const ModelSpec& m, SaConfig sa) {
  return std::make_shared<const CycleProgram>(compile(m, sa));
}

TensorI8 golden(const ModelSpec& m, SaConfig sa, const TensorI8& x) { return run_golden(compiled(m, sa), x).logits; }

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Hand-derived write-back edges for every layer, from the model dimensions
// alone: each output group takes k_tiles*(R+C)+1 edges, the last accumulate
// is k_tiles*(R+C) after the group start, write-back follows 3 edges later
// (4 through the pool unit, and only for the last member of a window).
std::vector<std::vector<std::uint64_t>> expected_writebacks(const ModelSpec& model, SaConfig sa,
                                                            std::uint64_t& total) {
  const int p = sa.rows + sa.cols;
  std::vector<std::vector<std::uint64_t>> out;
  std::uint64_t first = 0;
  for (const LayerSpec& l : model.layers) {
    int m, k, n;
    if (l.kind == LayerKind::Fc) {
      m = 1, k = l.weights.shape[1], n = l.weights.shape[0];
    } else {
      const Shape pre = l.pre_pool_shape();
      m = pre[1] * pre[2], n = l.weights.shape[0];
      k = l.weights.shape[1] * l.weights.shape[2] * l.weights.shape[3];
    }
    const std::uint64_t kt = ceil_div(k, sa.rows), nt = ceil_div(n, sa.cols);
    std::vector<std::uint64_t> wb;
    for (std::uint64_t g = 0; g < nt * m; ++g) {
      const std::uint64_t last_acc = first + g * (kt * p + 1) + kt * p;
      if (!l.pool) wb.push_back(last_acc + 3);
      else if (g % m % 4 == 3) wb.push_back(last_acc + 4);
    }
    first = wb.back() + 1;
    out.push_back(std::move(wb));
  }
  total = first;
  return out;
}

ModelSpec two_layer_conv(Rng& rng) {
  LayerSpec c = random_conv(rng, {2, 6, 6}, 5, 3, 3, 1, 1, 9, true, true);
  LayerSpec f = random_fc(rng, {5, 3, 3}, 7, 8, false);
  return model_of({c, f});
}

}  // namespace

TEST_CASE("single tile when K <= R and N <= C") {
  Rng rng(1);
  const ModelSpec m = model_of({random_fc(rng, {2}, 2, 0, false)});
  const CycleProgram prog = compile(m, {2, 2});
  REQUIRE(prog.layers.size() == 1);
  CHECK(prog.layers[0].k_tiles == 1);
  CHECK(prog.layers[0].n_tiles == 1);
  int bias = 0, acc = 0;
  for (const auto& cc : prog.cycles) bias += cc.bias >= 0, acc += cc.accumulate;
  CHECK(bias == 1);
  CHECK(acc == 1);
}

TEST_CASE("K split into row tiles still matches the reference") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const ModelSpec m = model_of({random_fc(rng, {4}, 3, rand_int(rng, 0, 6), false)});
    const CycleProgram prog = compile(m, {2, 2});
    CHECK(prog.layers[0].k_tiles == 2);
    CHECK(prog.layers[0].n_tiles == 2);
    const TensorI8 x = random_i8(rng, {4});
    REQUIRE(golden(m, {2, 2}, x) == reference_inference(m, x));
  }
}

TEST_CASE("compile is deterministic") {
  Rng rng(3);
  const ModelSpec m = two_layer_conv(rng);
  const CycleProgram a = compile(m, {2, 3}), b = compile(m, {2, 3});
  CHECK(a.total_cycles() == b.total_cycles());
  CHECK(a.act_addrs == b.act_addrs);
  CHECK(a.wb_addrs == b.wb_addrs);
}

TEST_CASE("reference hand example") {
  LayerSpec l;
  l.in_shape = {2};
  l.out_shape = {2};
  l.weights = TensorI8({2, 2}, {1, 3, 2, 4});  // [out, in]: W^T of [[1,2],[3,4]]
  l.bias = TensorI32({2}, {5, 6});
  l.shift = Shift(2);
  const ModelSpec m = model_of({l});
  const TensorI8 x({2}, {3, 4});
  CHECK(reference_inference(m, x).data == std::vector<i8>{5, 7});
  for (SaConfig sa : {SaConfig{1, 1}, SaConfig{2, 2}, SaConfig{1, 2}, SaConfig{4, 4}})
    CHECK(golden(m, sa, x).data == std::vector<i8>{5, 7});
}

TEST_CASE("identity fc layer passes the image through") {
  LayerSpec l;
  l.in_shape = {5};
  l.out_shape = {5};
  l.weights = TensorI8({5, 5});
  for (int i = 0; i < 5; ++i) l.weights.data[i * 5 + i] = 1;
  l.bias = TensorI32({5});
  const ModelSpec m = model_of({l});
  const TensorI8 x({5}, {-128, -1, 0, 1, 127});
  CHECK(golden(m, {2, 2}, x) == x);
  CHECK(golden(m, {3, 2}, x) == golden(m, {3, 2}, x));
}

TEST_CASE("write-back timing matches the closed form") {
  Rng rng(4);
  std::vector<ModelSpec> models = {two_layer_conv(rng),
                                   model_of({random_fc(rng, {9}, 5, 4, true), random_fc(rng, {5}, 3, 2, false)}),
                                   model_of({random_conv(rng, {1, 4, 6}, 3, 3, 3, 1, 1, 6, true, false)})};
  for (const ModelSpec& m : models)
    for (int r = 1; r <= 4; ++r)
      for (int c = 1; c <= 4; ++c) {
        const SaConfig sa{r, c};
        std::uint64_t total = 0;
        const auto want = expected_writebacks(m, sa, total);
        auto prog = compiled(m, sa);
        REQUIRE(prog->total_cycles() == total);
        Accelerator acc(prog, random_i8(rng, m.input_shape()));
        std::vector<std::set<std::uint64_t>> seen(m.layers.size());
        std::vector<std::set<std::size_t>> addrs(m.layers.size());
        acc.set_write_hook([&](std::uint64_t cycle, std::size_t addr, i8) {
          const std::size_t layer = prog->cycles[cycle].layer;
          seen[layer].insert(cycle);
          REQUIRE(addrs[layer].insert(addr).second);  // never re-written within a layer
        });
        acc.run();
        for (std::size_t li = 0; li < m.layers.size(); ++li) {
          REQUIRE(std::vector<std::uint64_t>(seen[li].begin(), seen[li].end()) == want[li]);
          REQUIRE(addrs[li].size() == element_count(m.layers[li].out_shape));
          for (std::size_t g = 0; g < want[li].size(); ++g)
            if (!m.layers[li].pool)
              REQUIRE(writeback_cycle(prog->layers[li], sa, g) == want[li][g]);
        }
      }
}

TEST_CASE("more hardware never slows the schedule when it tiles evenly") {
  // Every reduction length and output count is a multiple of 8, so growing
  // R or C over powers of two shrinks the tile counts exactly.
  Rng rng(5);
  const ModelSpec m = model_of({random_conv(rng, {8, 4, 4}, 16, 1, 1, 1, 0, 7, true, true),
                                random_fc(rng, {16, 2, 2}, 24, 8, true), random_fc(rng, {24}, 8, 6, false)});
  for (int r : {1, 2, 4, 8})
    for (int c : {1, 2, 4, 8}) {
      const auto here = compile(m, {r, c}).total_cycles();
      INFO("R " << r << " C " << c);
      if (r > 1) CHECK(here <= compile(m, {r / 2, c}).total_cycles());
      if (c > 1) CHECK(here <= compile(m, {r, c / 2}).total_cycles());
    }
}

TEST_CASE("an array larger than the layer costs pipeline depth") {
  // Documented limitation: each tile occupies R+C edges, so oversizing the
  // array for a small layer lengthens the schedule.
  Rng rng(6);
  const ModelSpec m = model_of({random_fc(rng, {2}, 2, 0, false)});
  CHECK(compile(m, {4, 4}).total_cycles() > compile(m, {2, 2}).total_cycles());
}

TEST_CASE("cycle-accurate run equals the reference on random models") {
  Rng rng(6);
  for (int t = 0; t < 60; ++t) {
    const ModelSpec m = two_layer_conv(rng);
    const TensorI8 x = random_i8(rng, m.input_shape());
    const SaConfig sa{rand_int(rng, 1, 5), rand_int(rng, 1, 5)};
    REQUIRE(golden(m, sa, x) == reference_inference(m, x));
  }
}

TEST_CASE("fixtures run cycle-accurately") {
  for (FixtureKind kind : {FixtureKind::Fc3, FixtureKind::LenetLike, FixtureKind::LenetLikeRgb}) {
    const Fixture f = gen_fixture(kind, 1);
    for (SaConfig sa : {SaConfig{2, 2}, SaConfig{3, 5}, SaConfig{8, 8}}) {
      auto prog = compiled(f.model, sa);
      for (std::size_t i = 0; i < 3; ++i) {
        const TensorI8& x = f.dataset.images[i].image;
        const GoldenRun g = run_golden(prog, x);
        INFO(fixture_name(kind) << " " << sa.label() << " image " << i);
        REQUIRE(g.logits == reference_inference(f.model, x));
        REQUIRE(g.model_cycles == prog->total_cycles());
      }
    }
  }
}

TEST_CASE("golden runs repeat exactly and checkpoints replay") {
  Rng rng(7);
  const ModelSpec m = two_layer_conv(rng);
  auto prog = compiled(m, {2, 2});
  const TensorI8 x = random_i8(rng, m.input_shape());
  const GoldenRun a = run_golden(prog, x, 64);
  const GoldenRun b = run_golden(prog, x);
  CHECK(a.logits == b.logits);
  REQUIRE(a.checkpoints.size() >= 2);
  Accelerator acc(prog, x);
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    acc.run_until(i * 64);
    REQUIRE(acc.matches(a.checkpoints[i]));
  }
}
