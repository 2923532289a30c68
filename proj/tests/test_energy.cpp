#include "bfps/energy_model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace bfps;

namespace {

ModelDesc tiny4() { return load_model(BFPS_SOURCE_DIR "/models/tiny4.model").model; }

QuantPlan plan_for(const ModelDesc& m, int qb, int se, int bs,
                   const std::vector<Mapping>& mappings) {
  QuantPlan p;
  p.total_bits = qb;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    p.layers.push_back(cost_layer(m.layers[l], LayerFormats::uniform(qb, se, bs), mappings[l]));
    p.dm_sum += p.layers.back().dm.total_bits;
  }
  return p;
}

}  // namespace

TEST_CASE("per-bit constants and the two reference cases") {
  const EnergyParams params;
  CHECK(params.sram_pj_per_bit == 0.16);
  CHECK(params.dram_pj_per_bit == 20.0);
  // 1e9 DRAM bits at 20 pJ/bit is 20 mJ; 1e9 SRAM bits at 0.16 pJ/bit is 0.16 mJ.
  CHECK(energy_pj(0.0, 1e9, params) * kJoulesPerPicojoule == doctest::Approx(20e-3).epsilon(1e-15));
  CHECK(energy_pj(1e9, 0.0, params) * kJoulesPerPicojoule == doctest::Approx(0.16e-3).epsilon(1e-15));
  CHECK(energy_pj(0.0, 1e9, params) == 2e10);
  CHECK(energy_pj(1e9, 0.0, params) == 1.6e8);
}

TEST_CASE("energy is linear in each traffic component") {
  const EnergyParams params;
  const double a = energy_pj(3e7, 5e8, params);
  CHECK(energy_pj(6e7, 5e8, params) - a == doctest::Approx(3e7 * 0.16));
  CHECK(energy_pj(3e7, 1e9, params) - a == doctest::Approx(5e8 * 20.0));
  CHECK(energy_pj(1.5e7, 2.5e8, params) == a / 2);
}

TEST_CASE("invalid constants are rejected") {
  CHECK_THROWS_AS((EnergyParams{0.0, 20.0}.validate()), Error);
  CHECK_THROWS_AS((EnergyParams{0.16, -1.0}.validate()), Error);
}

TEST_CASE("plan energy sums MAC-level SRAM traffic and DRAM traffic") {
  const auto m = tiny4();
  std::vector<Mapping> whole;
  for (const auto& l : m.layers) whole.push_back(whole_layer_mapping(l));
  const auto plan = plan_for(m, 8, 3, 8, whole);
  const auto r = energy(plan, m);
  double sram = 0.0, dram = 0.0;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& q = plan.layers[l].bitwidths;
    sram += static_cast<double>(m.layers[l].mac_count()) * (q.input + q.output + q.weight);
    dram += plan.layers[l].dm.total_bits;
  }
  CHECK(r.sram_bits == doctest::Approx(sram).epsilon(1e-15));
  CHECK(r.dram_bits == doctest::Approx(dram).epsilon(1e-15));
  CHECK(r.energy_pj == r.sram_bits * 0.16 + r.dram_bits * 20.0);
  CHECK(r.energy_j() == r.energy_pj * 1e-12);
  CHECK(r.layers.size() == 4);

  auto short_plan = plan;
  short_plan.layers.pop_back();
  CHECK_THROWS_AS(energy(short_plan, m), Error);
}

TEST_CASE("normalized energy") {
  const auto m = tiny4();
  std::vector<Mapping> whole;
  for (const auto& l : m.layers) whole.push_back(whole_layer_mapping(l));
  const auto plan = plan_for(m, 8, 3, 8, whole);
  CHECK(normalized_energy(plan, plan, m) == 1.0);

  auto half = plan;
  for (auto& l : half.layers) {
    l.bitwidths = {l.bitwidths.input / 2, l.bitwidths.output / 2, l.bitwidths.weight / 2};
    l.dm.total_bits /= 2;
  }
  CHECK(normalized_energy(half, plan, m) == 0.5);

  auto zero = plan;
  for (auto& l : zero.layers) {
    l.bitwidths = {0, 0, 0};
    l.dm.total_bits = 0;
  }
  CHECK_THROWS_AS(normalized_energy(plan, zero, m), Error);

  const auto base = original_plan(m, 262144.0);
  CHECK(normalized_energy(plan, base, m) < 1.0);
}

TEST_CASE("8-bit formats beat 16-bit formats on the same mappings") {
  const auto m = tiny4();
  for (int se = 2; se <= 6; ++se) {
    for (int bs : default_block_sizes()) {
      std::vector<Mapping> maps;
      for (const auto& l : m.layers) {
        const auto q16 = effective_bitwidths(LayerFormats::uniform(16, se, bs), l);
        const auto r = optimize_layer(l, q16, 65536.0);
        REQUIRE(r.feasible);
        maps.push_back(r.mapping);
      }
      const auto p16 = plan_for(m, 16, se, bs, maps);
      const auto p8 = plan_for(m, 8, se, bs, maps);
      CHECK(p8.dm_sum < p16.dm_sum);
      CHECK(energy(p8, m).energy_pj < energy(p16, m).energy_pj);
    }
  }
}
