#include <random>
#include <sstream>

#include "bfps/dm_model.hpp"
#include "bfps/reuse_oracle.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bfps;
using bfps::test::make_layer;

namespace {

Mapping make_mapping(const char* order, TileSizes tiles) {
  Mapping m;
  m.order = parse_order(order);
  m.tiles = tiles;
  return m;
}

const Bitwidths kUnit{1.0, 1.0, 1.0};

}  // namespace

TEST_CASE("three-case level formula") {
  CHECK(reuse_level_dm(ReuseClass::none, 4, 100.0, 0.0) == 400.0);
  CHECK(reuse_level_dm(ReuseClass::partial, 4, 100.0, 20.0) == 160.0);
  CHECK(reuse_level_dm(ReuseClass::full, 4, 100.0, 20.0) == 0.0);
  CHECK(reuse_level_dm(ReuseClass::partial, 1, 100.0, 20.0) == 100.0);
  CHECK_THROWS_AS(reuse_level_dm(ReuseClass::none, 0, 1.0, 0.0), Error);
}

TEST_CASE("reuse classes of the three sliding scenarios") {
  // Weights do not depend on the output-height loop.
  const auto l = make_layer(1, 1, 6, 6, 3, 1);
  const auto m = make_mapping("KCYXRS", {1, 1, 1, 1, 3, 3});
  CHECK(classify_reuse(Operand::weight, LoopDim::out_height, l, m) == ReuseClass::full);
  // Neighbouring 3-wide windows at stride 1 overlap in two columns.
  CHECK(classify_reuse(Operand::input, LoopDim::out_width, l, m) == ReuseClass::partial);
  // At stride 3 they are disjoint.
  const auto l3 = make_layer(1, 1, 9, 9, 3, 3);
  CHECK(classify_reuse(Operand::input, LoopDim::out_width, l3, m) == ReuseClass::none);
  CHECK(classify_reuse(Operand::output, LoopDim::in_channel, l, m) == ReuseClass::full);
}

TEST_CASE("new data per step of a sliding window") {
  const auto s1 = make_layer(1, 1, 3, 6, 3, 1);
  const auto m = make_mapping("KCYXRS", {1, 1, 1, 1, 3, 3});
  CHECK(new_data_per_iteration(Operand::input, LoopDim::out_width, s1, m) == 3);
  const auto s2 = make_layer(1, 1, 3, 7, 3, 2);
  CHECK(new_data_per_iteration(Operand::input, LoopDim::out_width, s2, m) == 6);
  const auto s3 = make_layer(1, 1, 3, 9, 3, 3);
  CHECK_THROWS_AS(new_data_per_iteration(Operand::input, LoopDim::out_width, s3, m), Error);
}

TEST_CASE("tile footprints") {
  const auto l = make_layer(1, 1, 6, 6, 3, 1);
  const auto formats = LayerFormats::uniform(8, 3, 2);
  const auto q = effective_bitwidths(formats, l);
  CHECK(q.input == 5.0 + 3.0 / (2.0 * 36.0));
  CHECK(q.output == 5.0 + 3.0 / (2.0 * 16.0));
  CHECK(q.weight == 5.0 + 3.0 / (2.0 * 9.0));
  const auto whole = tile_footprint(l, whole_layer_mapping(l), formats);
  CHECK(whole.elements == std::array<std::int64_t, 3>{36, 16, 9});
  CHECK(whole.bits[0] == 36.0 * q.input);

  const auto patch = tile_footprint(l, make_mapping("KCYXRS", {1, 1, 2, 2, 3, 3}), kUnit);
  CHECK(patch.elements[0] == 16);

  const auto pw = make_layer(4, 4, 5, 5, 1, 1);
  const auto t = tile_footprint(pw, make_mapping("KCYXRS", {1, 1, 2, 3, 1, 1}), kUnit);
  CHECK(t.elements[0] == t.elements[1]);
}

TEST_CASE("whole-layer mapping loads everything once") {
  const auto l = make_layer(3, 5, 7, 7, 3, 1, 1);
  const Bitwidths q{6.5, 7.25, 5.5};
  const auto dm = dm_layer(l, whole_layer_mapping(l), q);
  const auto v = layer_volumes(l);
  CHECK(dm.of(Operand::input).elements == v.inputs);
  CHECK(dm.of(Operand::output).elements == v.outputs);
  CHECK(dm.of(Operand::weight).elements == v.weights);
  CHECK(dm.total_bits == operand_bits(v.inputs, 6.5) + operand_bits(v.outputs, 7.25) +
                             operand_bits(v.weights, 5.5));

  DmOptions literal;
  literal.count_first_load = false;
  CHECK(dm_layer(l, whole_layer_mapping(l), q, literal).total_bits == 0.0);
}

TEST_CASE("6x6 layer with output-width innermost matches both oracles") {
  const auto l = make_layer(1, 1, 6, 6, 3, 1);
  const auto m = make_mapping("KCYXRS", {1, 1, 1, 1, 3, 3});
  const auto dm = dm_layer(l, m, kUnit);
  const auto sim = simulate(l, m, kUnit, 1e9);
  const auto elems = test::count_element_transfers(l, m);
  // Per output row: 9 + 3 * 3 input elements; weights once; outputs once.
  CHECK(elems.moved[0] == 4 * 18);
  CHECK(elems.moved[1] == 16);
  CHECK(elems.moved[2] == 9);
  for (auto op : kAllOperands) {
    CHECK(dm.of(op).elements == elems.moved[index_of(op)]);
    CHECK(sim.elements_of(op) == elems.moved[index_of(op)]);
  }
  CHECK(dm.total_bits == sim.total_bits);
}

TEST_CASE("simulator micro-cases") {
  const auto l = make_layer(2, 3, 6, 6, 3, 1);
  const auto whole = simulate(l, whole_layer_mapping(l), kUnit, 1e9);
  CHECK(whole.tiles == 1);
  CHECK(whole.elements == std::array<std::int64_t, 3>{72, 48, 54});

  // Disjoint windows: every input tile is loaded in full.
  const auto d = make_layer(1, 1, 9, 9, 3, 3);
  const auto m = make_mapping("KCYXRS", {1, 1, 1, 1, 3, 3});
  const auto r = simulate(d, m, kUnit, 1e9);
  CHECK(r.tiles == 9);
  CHECK(r.elements_of(Operand::input) == 9 * 9);

  // Reload policy pays the full footprint on every tile.
  const auto reload = simulate(l, m, kUnit, 1e9, RetentionPolicy::reload_every_tile);
  CHECK(reload.tiles == 3 * 2 * 16);
  CHECK(reload.elements_of(Operand::weight) == reload.tiles * 9);

  CHECK_THROWS_AS(simulate(l, whole_layer_mapping(l), kUnit, 10.0), Error);
  try {
    simulate(l, whole_layer_mapping(l), kUnit, 10.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
  }

  std::ostringstream trace;
  simulate(d, m, kUnit, 1e9, RetentionPolicy::slide_and_retain, &trace);
  const auto lines = trace.str();
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 9);
}

TEST_CASE("every needed element is transferred at least once") {
  std::mt19937_64 rng(3);
  const auto orders = test::all_permutations();
  for (int i = 0; i < 60; ++i) {
    const auto l = make_layer(3, 2, 7, 6, 3, 1 + i % 3, i % 2, 1);
    const auto m = test::random_mapping(l, rng, orders);
    const auto r = simulate(l, m, kUnit, 1e9);
    CHECK(r.elements_of(Operand::output) >= layer_volumes(l).outputs);
    CHECK(r.elements_of(Operand::weight) >= layer_volumes(l).weights);
  }
}

TEST_CASE("closed form, simulator and element oracle agree on random mappings") {
  std::mt19937_64 rng(11);
  const auto orders = test::all_permutations();
  std::uniform_int_distribution<int> ch(1, 4), hw(3, 9), kk(0, 2), st(1, 3), pd(0, 1);
  int checked = 0;
  while (checked < 300) {
    const int k = 1 + 2 * kk(rng);
    const int h = hw(rng), w = hw(rng);
    if (h < k || w < k) continue;
    auto l = make_layer(ch(rng), ch(rng), h, w, k, st(rng), k > 1 ? pd(rng) : 0);
    if (checked % 5 == 0 && l.in_channels % 2 == 0 && l.out_channels % 2 == 0) {
      l.groups = 2;
    }
    const auto m = test::random_mapping(l, rng, orders);
    const Bitwidths q{5.0 + 1.0 / 3.0, 6.125, 4.75};
    const auto dm = dm_layer(l, m, q);
    const auto sim = simulate(l, m, q, 1e12);
    const auto elems = test::count_element_transfers(l, m);
    for (auto op : kAllOperands) {
      const auto i = index_of(op);
      CHECK(dm.of(op).elements == elems.moved[i]);
      CHECK(sim.elements[i] == elems.moved[i]);
      CHECK(dm.of(op).bits == sim.bits[i]);
    }
    CHECK(dm.total_bits == sim.total_bits);
    // DF_t is the largest tile of each operand; their sum bounds every tile.
    const auto fp = tile_footprint(l, m, q);
    CHECK(fp.elements == elems.peak);
    CHECK(fp.total_bits() >= sim.peak_occupancy_bits);
    ++checked;
  }
}

TEST_CASE("literal formula drops only never-reloaded operands") {
  const auto l = make_layer(2, 2, 6, 6, 3, 1);
  const auto m = make_mapping("KCYXRS", {1, 2, 1, 1, 3, 3});
  DmOptions literal;
  literal.count_first_load = false;
  const auto a = dm_layer(l, m, kUnit);
  const auto b = dm_layer(l, m, kUnit, literal);
  CHECK(b.total_bits <= a.total_bits);
  for (auto op : kAllOperands) {
    const auto& lv = a.of(op).levels;
    const bool all_full = std::all_of(lv.begin(), lv.end(), [](const LevelDm& x) {
      return x.reuse == ReuseClass::full || x.iterations == 1;
    });
    if (all_full) CHECK(b.of(op).bits == 0.0);
  }
}

TEST_CASE("dm_sum and perf_loss") {
  const auto l = make_layer(1, 1, 6, 6, 3, 1);
  const std::vector<DmBreakdown> one{dm_layer(l, whole_layer_mapping(l), kUnit)};
  CHECK(dm_sum(one) == one[0].total_bits);
  CHECK(perf_loss(100.0, 100.0) == 1.0);
  CHECK(perf_loss(50.0, 100.0) == 0.5);
  CHECK_THROWS_AS(perf_loss(1.0, 0.0), Error);
}

TEST_CASE("bad mappings are rejected") {
  const auto l = make_layer(2, 2, 6, 6, 3, 1);
  auto m = whole_layer_mapping(l);
  m.tile(LoopDim::out_channel) = 3;
  CHECK_THROWS_AS(dm_layer(l, m, kUnit), Error);
  m = whole_layer_mapping(l);
  m.order[0] = m.order[1];
  CHECK_THROWS_AS(dm_layer(l, m, kUnit), Error);
  CHECK_THROWS_AS(parse_order("KCYXR"), Error);
  CHECK(format_order(parse_order("YXKCRS")) == "YXKCRS");
}
