#pragma once

// Energy of a plan from its data movement:
//
//     Energy = DM_S * E_S + DM_D * E_D
//
// DM_D is the off-chip traffic of the data-movement model. DM_S counts
// on-chip operand accesses: every MAC reads an input and a weight and
// updates an output, each at its operand's effective bitwidth.

#include <optional>
#include <string>
#include <vector>

#include "bfps/config_search.hpp"

namespace bfps {

struct EnergyParams {
  double sram_pj_per_bit = 0.16;  // E_S
  double dram_pj_per_bit = 20.0;  // E_D

  // Throws unless both costs are finite and positive.
  void validate() const;

  friend bool operator==(const EnergyParams&, const EnergyParams&) = default;
};

inline constexpr double kJoulesPerPicojoule = 1e-12;

// DM_S * E_S + DM_D * E_D, in picojoules.
double energy_pj(double sram_bits, double dram_bits, const EnergyParams& params);

// On-chip operand traffic of one layer in bits.
double sram_bits(const ConvLayer& layer, const Bitwidths& bitwidths);

struct LayerEnergy {
  std::string name;
  double sram_bits = 0.0;
  double dram_bits = 0.0;
  double energy_pj = 0.0;
};

struct EnergyReport {
  EnergyParams params;
  double sram_bits = 0.0;  // DM_S
  double dram_bits = 0.0;  // DM_D
  double energy_pj = 0.0;
  std::vector<LayerEnergy> layers;
  // Ratio to a baseline plan's energy, when one was given.
  std::optional<double> normalized;
  std::string baseline;

  double energy_j() const { return energy_pj * kJoulesPerPicojoule; }
};

EnergyReport energy(const QuantPlan& plan, const ModelDesc& model,
                    const EnergyParams& params = {});

// energy(plan) / energy(baseline). Throws when the baseline energy is zero
// or the plans cover different layers.
double normalized_energy(const QuantPlan& plan, const QuantPlan& baseline,
                         const ModelDesc& model, const EnergyParams& params = {});

}  // namespace bfps
