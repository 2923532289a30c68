#pragma once

// Analytical off-chip data movement of a tiled convolution.
//
// Each operand keeps its current tile on chip. Per loop level the operand
// either reloads every tile (no reuse), loads only the part of a sliding
// window it does not already hold (partial reuse) or keeps the tile resident
// (full reuse). All volumes are in bits: element counts times the operand's
// effective bitwidth.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "bfps/mapping.hpp"
#include "bfps/model_ir.hpp"

namespace bfps {

enum class ReuseClass : std::uint8_t { none, partial, full };
std::string_view to_string(ReuseClass reuse);

enum class LevelSum : std::uint8_t {
  all_levels,     // every tile loop contributes (matches the buffer simulator)
  innermost_only  // only the innermost loop with more than one iteration
};

struct DmOptions {
  // Count the cold load of operands whose every level is full reuse. When off,
  // such operands move nothing, as in the literal three-case formula.
  bool count_first_load = true;
  LevelSum level_sum = LevelSum::all_levels;
};

// Data movement of one operand at one loop level.
struct LevelDm {
  LoopDim dim = LoopDim::out_channel;
  std::int64_t iterations = 1;  // It_i
  ReuseClass reuse = ReuseClass::full;
  double new_data_bits = 0.0;   // DF_n of the first step at this level
  double bits = 0.0;            // DM_i
};

struct OperandDm {
  Operand operand = Operand::input;
  double bitwidth = 0.0;
  double footprint_bits = 0.0;   // DF_t: largest tile, halo included
  double first_load_bits = 0.0;  // cold load of the first tile
  std::array<LevelDm, kLoopDimCount> levels{};  // in loop order, outermost first
  std::int64_t elements = 0;     // total elements moved, all groups
  double bits = 0.0;             // first_load_bits + sum of levels, all groups
};

struct DmBreakdown {
  std::array<OperandDm, 3> operands{};
  std::int64_t groups = 1;
  double total_bits = 0.0;  // DM_l

  const OperandDm& of(Operand o) const { return operands[index_of(o)]; }
};

// Reuse of `operand` across the loop at `dim` under `mapping`: full when the
// operand's footprint does not change across the loop's iterations, partial
// when consecutive footprints overlap and none when they are disjoint.
ReuseClass classify_reuse(Operand operand, LoopDim dim, const ConvLayer& layer,
                          const Mapping& mapping);

struct TileFootprint {
  std::array<std::int64_t, 3> elements{};
  std::array<double, 3> bits{};

  double total_bits() const { return bits[0] + bits[1] + bits[2]; }
};

// DF_t of each operand. Throws if a tile exceeds its loop extent.
TileFootprint tile_footprint(const ConvLayer& layer, const Mapping& mapping,
                             const Bitwidths& bitwidths);
TileFootprint tile_footprint(const ConvLayer& layer, const Mapping& mapping,
                             const LayerFormats& formats);

// DF_n in elements: data new to the buffer on the first step of the loop at
// `dim`. Throws unless that loop is partial reuse for the operand.
std::int64_t new_data_per_iteration(Operand operand, LoopDim dim,
                                    const ConvLayer& layer,
                                    const Mapping& mapping);

// The per-level three-case formula.
double reuse_level_dm(ReuseClass reuse, std::int64_t iterations,
                      double tile_bits, double new_bits);

DmBreakdown dm_layer(const ConvLayer& layer, const Mapping& mapping,
                     const Bitwidths& bitwidths, const DmOptions& options = {});
DmBreakdown dm_layer(const ConvLayer& layer, const Mapping& mapping,
                     const LayerFormats& formats, const DmOptions& options = {});

// Bits weighted the same way everywhere so independent routes agree exactly.
inline double operand_bits(std::int64_t elements, double bitwidth) {
  return static_cast<double>(elements) * bitwidth;
}
inline double total_bits(const std::array<double, 3>& per_operand) {
  return per_operand[0] + per_operand[1] + per_operand[2];
}

double dm_sum(std::span<const DmBreakdown> layers);

// DM_sum / DM_max. Throws when dm_max is not positive.
double perf_loss(double dm_sum_bits, double dm_max_bits);

}  // namespace bfps
