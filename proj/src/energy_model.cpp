#include "bfps/energy_model.hpp"

#include <cmath>

#include "bfps/error.hpp"

namespace bfps {

void EnergyParams::validate() const {
  if (!(sram_pj_per_bit > 0.0) || !std::isfinite(sram_pj_per_bit)) {
    fail("SRAM energy per bit must be positive");
  }
  if (!(dram_pj_per_bit > 0.0) || !std::isfinite(dram_pj_per_bit)) {
    fail("DRAM energy per bit must be positive");
  }
}

double energy_pj(double sram_bits, double dram_bits, const EnergyParams& params) {
  return sram_bits * params.sram_pj_per_bit + dram_bits * params.dram_pj_per_bit;
}

double sram_bits(const ConvLayer& layer, const Bitwidths& bitwidths) {
  return static_cast<double>(layer.mac_count()) *
         (bitwidths.input + bitwidths.weight + bitwidths.output);
}

EnergyReport energy(const QuantPlan& plan, const ModelDesc& model,
                    const EnergyParams& params) {
  params.validate();
  if (plan.layers.size() != model.layers.size()) {
    fail("plan covers " + std::to_string(plan.layers.size()) + " layers, model has " +
         std::to_string(model.layers.size()));
  }
  EnergyReport r;
  r.params = params;
  for (std::size_t l = 0; l < plan.layers.size(); ++l) {
    const auto& lp = plan.layers[l];
    LayerEnergy e;
    e.name = lp.name;
    e.sram_bits = sram_bits(model.layers[l], lp.bitwidths);
    e.dram_bits = lp.dm.total_bits;
    e.energy_pj = energy_pj(e.sram_bits, e.dram_bits, params);
    r.sram_bits += e.sram_bits;
    r.dram_bits += e.dram_bits;
    r.layers.push_back(std::move(e));
  }
  r.energy_pj = energy_pj(r.sram_bits, r.dram_bits, params);
  return r;
}

double normalized_energy(const QuantPlan& plan, const QuantPlan& baseline,
                         const ModelDesc& model, const EnergyParams& params) {
  const auto base = energy(baseline, model, params).energy_pj;
  if (!(base > 0.0)) fail("baseline energy is zero");
  return energy(plan, model, params).energy_pj / base;
}

}  // namespace bfps
