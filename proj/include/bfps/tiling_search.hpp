#pragma once

// Tile-size and loop-order search under an on-chip capacity constraint:
// minimize a layer's data movement subject to the summed tile footprints of
// the three operands fitting in the buffer.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bfps/dm_model.hpp"
#include "bfps/mapping.hpp"

namespace bfps {

struct TilingOptions {
  DmOptions dm;
  // Kernel loops stay untiled (one tile covering the kernel) unless set.
  bool tile_kernel = false;
  // Every integer tile size is a candidate when the full tiling space of the
  // layer has at most this many points; the result is then the true optimum.
  std::int64_t full_enumeration_limit = 8192;
  // Otherwise candidates per loop are divisors of the extent plus
  // ceil(extent / k) for k <= 8. Up to this many candidate tilings are
  // searched exhaustively; larger spaces use coordinate descent.
  std::int64_t exhaustive_limit = 100000;
  int descent_seeds = 16;
  std::uint64_t descent_seed = 0x5eed;
  // Loop orders to consider; empty means default_loop_orders().
  std::vector<LoopOrder> orders;
  unsigned jobs = 1;
};

// The 24 orders of the K, C, Y, X loops with the kernel loops innermost.
std::vector<LoopOrder> default_loop_orders();

// Drops orders that only differ in where single-trip loops sit, keeping the
// lexicographically smallest representative of each class.
std::vector<LoopOrder> dedupe_orders(const ConvLayer& layer,
                                     std::vector<LoopOrder> orders);

// Candidate tile sizes of one loop, ascending.
std::vector<std::int64_t> tile_candidates(std::int64_t extent,
                                          bool every_integer);

struct TilingProblem {
  ConvLayer layer;
  LoopOrder order = kAllLoopDims;
  Bitwidths bitwidths;
  double capacity_bits = 0.0;  // MC
};

enum class SearchStrategy : std::uint8_t { full, exhaustive, coordinate_descent };
std::string_view to_string(SearchStrategy strategy);

struct TilingResult {
  bool feasible = false;
  Mapping mapping;
  DmBreakdown dm;
  TileFootprint footprint;
  SearchStrategy strategy = SearchStrategy::exhaustive;
  std::int64_t evaluated = 0;  // (order, tiling) points costed
};

// Precomputed, format-independent cost table of one layer: element transfers
// and tile footprints for every candidate (order, tiling). Costing a BFP
// configuration is then a scan weighted by its bitwidths.
class LayerSearchSpace {
 public:
  LayerSearchSpace(const ConvLayer& layer, const TilingOptions& options);
  ~LayerSearchSpace();
  LayerSearchSpace(LayerSearchSpace&&) noexcept;
  LayerSearchSpace& operator=(LayerSearchSpace&&) noexcept;

  const ConvLayer& layer() const;
  SearchStrategy strategy() const;
  std::int64_t tiling_count() const;

  // Best mapping for the given bitwidths and capacity; feasible=false when
  // even the smallest tiling does not fit.
  TilingResult best(const Bitwidths& bitwidths, double capacity_bits) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TilingResult optimize_tiling(const TilingProblem& problem,
                             const TilingOptions& options = {});

TilingResult optimize_layer(const ConvLayer& layer, const Bitwidths& bitwidths,
                            double capacity_bits,
                            const TilingOptions& options = {});

// Deterministic preference between two costed mappings: less data movement,
// then larger tiles, then the lexicographically smaller loop order.
bool mapping_preferred(double dm_a, const Mapping& a, double dm_b,
                       const Mapping& b);

}  // namespace bfps
