#pragma once

// Brute-force tile-schedule simulator: walks every tile of a mapping against
// an explicit on-chip buffer and counts the exact off-chip transfers. It is
// the reference the analytical model in dm_model is checked against.

#include <array>
#include <cstdint>
#include <iosfwd>

#include "bfps/mapping.hpp"
#include "bfps/model_ir.hpp"

namespace bfps {

enum class RetentionPolicy : std::uint8_t {
  // Keep the current tile of each operand; on a step, load only elements the
  // new tile needs that are not resident, and evict the rest.
  slide_and_retain,
  // Reload every tile from scratch.
  reload_every_tile,
};

// A resident index set: one half-open interval per tensor dimension.
struct IndexBox {
  std::array<std::int64_t, 4> lo{};
  std::array<std::int64_t, 4> hi{};

  std::int64_t volume() const;
  IndexBox intersect(const IndexBox& other) const;
};

struct BufferState {
  std::array<IndexBox, 3> resident{};  // by operand
  double capacity_bits = 0.0;
  double occupancy_bits = 0.0;
};

struct SimulationResult {
  std::array<std::int64_t, 3> elements{};  // transferred, by operand
  std::array<double, 3> bits{};
  double total_bits = 0.0;
  double peak_occupancy_bits = 0.0;
  std::int64_t tiles = 0;

  std::int64_t elements_of(Operand o) const { return elements[index_of(o)]; }
  double bits_of(Operand o) const { return bits[index_of(o)]; }
};

// Throws Error(infeasible) when any single tile does not fit in
// `capacity_bits`. With `trace` set, writes one line per tile.
SimulationResult simulate(const ConvLayer& layer, const Mapping& mapping,
                          const Bitwidths& bitwidths, double capacity_bits,
                          RetentionPolicy policy = RetentionPolicy::slide_and_retain,
                          std::ostream* trace = nullptr);

}  // namespace bfps
