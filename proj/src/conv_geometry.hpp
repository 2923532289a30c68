#pragma once

// Closed-form transfer accounting for one operand of a tiled convolution.
//
// The on-chip buffer holds exactly the current tile of each operand. Moving
// to the next tile loads |new \ old| elements. A tile footprint is a box, the
// product of one interval per footprint axis, and each axis interval depends
// only on the tile indices of that axis' own loops. Summed over the schedule,
// the transitions at loop level j therefore factor into per-axis sums:
//
//   D_j = m_j * ( prod_a  sum|new_a|  -  prod_a  sum|old_a & new_a| )
//
// where loops outside j range freely, loop j steps t -> t+1, loops inside j
// wrap from their last index back to 0, and m_j counts the iterations of
// loops the operand does not depend on.

#include <array>
#include <cstdint>
#include <vector>

#include "bfps/mapping.hpp"

namespace bfps::detail {

struct Range {
  std::int64_t lo = 0;  // inclusive
  std::int64_t hi = 0;  // exclusive

  std::int64_t length() const { return hi > lo ? hi - lo : 0; }
};

inline Range intersect(Range a, Range b) {
  return {a.lo > b.lo ? a.lo : b.lo, a.hi < b.hi ? a.hi : b.hi};
}

inline Range tile_range(std::int64_t index, std::int64_t tile,
                        std::int64_t extent) {
  const auto lo = index * tile;
  const auto hi = lo + tile;
  return {lo, hi < extent ? hi : extent};
}

// One axis of an operand footprint. Direct axes follow a single loop; window
// axes map an output-spatial loop and a kernel loop onto input rows/cols,
// clipped to the valid (unpadded) input range.
struct FootprintAxis {
  LoopDim primary = LoopDim::out_channel;
  bool window = false;
  LoopDim kernel = LoopDim::kernel_h;  // window axes only
  std::int64_t primary_tile = 1;
  std::int64_t primary_extent = 1;
  std::int64_t kernel_tile = 1;
  std::int64_t kernel_extent = 1;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  std::int64_t input_extent = 1;

  Range interval(std::int64_t primary_index, std::int64_t kernel_index) const;
};

std::vector<FootprintAxis> footprint_axes(Operand operand,
                                          const ConvLayer& layer,
                                          const Mapping& mapping);

struct OperandTransfers {
  std::int64_t first_load = 0;                       // elements of tile 0
  std::array<std::int64_t, kLoopDimCount> level{};   // D_j by loop position
  std::array<std::int64_t, kLoopDimCount> overlap{}; // summed old & new
  std::array<std::int64_t, kLoopDimCount> first_step_new{};  // DF_n
  std::array<std::int64_t, kLoopDimCount> iterations{};

  std::int64_t total() const {
    std::int64_t t = first_load;
    for (auto d : level) t += d;
    return t;
  }
};

// Transfers for one group; grouped layers repeat this once per group.
OperandTransfers operand_transfers(Operand operand, const ConvLayer& layer,
                                   const Mapping& mapping);

// Largest per-operand tile footprint in elements over every tile of the
// schedule, halo included and clipped to the unpadded input.
std::int64_t tile_footprint_elements(Operand operand, const ConvLayer& layer,
                                     const TileSizes& tiles);

}  // namespace bfps::detail
