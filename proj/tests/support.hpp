#pragma once

// Test-only helpers: layer builders, an element-set transfer counter and an
// exhaustive tiling oracle. None of them share code with the library's cost
// paths beyond the public types.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bfps/dm_model.hpp"
#include "bfps/mapping.hpp"
#include "bfps/model_ir.hpp"

namespace bfps::test {

inline ConvLayer make_layer(std::int64_t cin, std::int64_t cout, std::int64_t h,
                            std::int64_t w, std::int64_t k, std::int64_t stride,
                            std::int64_t pad = 0, std::int64_t groups = 1) {
  ConvLayer l;
  l.in_channels = cin;
  l.out_channels = cout;
  l.in_h = h;
  l.in_w = w;
  l.kernel_h = l.kernel_w = k;
  l.stride_h = l.stride_w = stride;
  l.pad_h = l.pad_w = pad;
  l.groups = groups;
  derive_output_dims(l);
  return l;
}

inline std::int64_t extent_of(const ConvLayer& l, LoopDim d) {
  switch (d) {
    case LoopDim::out_channel:
      return l.out_channels / l.groups;
    case LoopDim::in_channel:
      return l.in_channels / l.groups;
    case LoopDim::out_height:
      return l.out_h;
    case LoopDim::out_width:
      return l.out_w;
    case LoopDim::kernel_h:
      return l.kernel_h;
    case LoopDim::kernel_w:
      return l.kernel_w;
  }
  return 1;
}

using Element = std::array<std::int64_t, 4>;

// Elements each operand of one tile occupies on chip. Input footprints are
// the row/column bounding box of every (output, kernel) pair in the tile,
// clipped to the unpadded input.
inline std::array<std::set<Element>, 3> tile_elements(
    const ConvLayer& l, std::int64_t g, const std::array<std::int64_t, 6>& lo,
    const std::array<std::int64_t, 6>& hi) {
  const auto K = index_of(LoopDim::out_channel), C = index_of(LoopDim::in_channel),
             Y = index_of(LoopDim::out_height), X = index_of(LoopDim::out_width),
             R = index_of(LoopDim::kernel_h), S = index_of(LoopDim::kernel_w);
  const auto cg = l.in_channels / l.groups, kg = l.out_channels / l.groups;
  std::array<std::set<Element>, 3> out;
  std::int64_t rmin = std::numeric_limits<std::int64_t>::max(), rmax = -1;
  std::int64_t cmin = rmin, cmax = -1;
  for (auto y = lo[Y]; y < hi[Y]; ++y) {
    for (auto r = lo[R]; r < hi[R]; ++r) {
      const auto row = y * l.stride_h + r - l.pad_h;
      if (row >= 0 && row < l.in_h) {
        rmin = std::min(rmin, row);
        rmax = std::max(rmax, row);
      }
    }
  }
  for (auto x = lo[X]; x < hi[X]; ++x) {
    for (auto s = lo[S]; s < hi[S]; ++s) {
      const auto col = x * l.stride_w + s - l.pad_w;
      if (col >= 0 && col < l.in_w) {
        cmin = std::min(cmin, col);
        cmax = std::max(cmax, col);
      }
    }
  }
  for (auto c = lo[C]; c < hi[C]; ++c) {
    for (auto row = rmin; row <= rmax; ++row) {
      for (auto col = cmin; col <= cmax; ++col) {
        out[0].insert({g * cg + c, row, col, 0});
      }
    }
  }
  for (auto k = lo[K]; k < hi[K]; ++k) {
    for (auto y = lo[Y]; y < hi[Y]; ++y) {
      for (auto x = lo[X]; x < hi[X]; ++x) out[1].insert({g * kg + k, y, x, 0});
    }
    for (auto c = lo[C]; c < hi[C]; ++c) {
      for (auto r = lo[R]; r < hi[R]; ++r) {
        for (auto s = lo[S]; s < hi[S]; ++s) out[2].insert({g * kg + k, c, r, s});
      }
    }
  }
  return out;
}

struct ElementCount {
  std::array<std::int64_t, 3> moved{};
  std::array<std::int64_t, 3> peak{};  // largest tile per operand
  std::int64_t tiles = 0;
};

// Walks the tile schedule (groups outermost, then `mapping.order`) keeping
// only the current tile of each operand and counting elements not already
// held.
inline ElementCount count_element_transfers(const ConvLayer& l, const Mapping& m) {
  std::array<std::int64_t, 6> ext{}, cnt{};
  for (std::size_t p = 0; p < 6; ++p) {
    ext[p] = extent_of(l, m.order[p]);
    cnt[p] = (ext[p] + m.tile(m.order[p]) - 1) / m.tile(m.order[p]);
  }
  ElementCount out;
  std::array<std::set<Element>, 3> held;
  for (std::int64_t g = 0; g < l.groups; ++g) {
    std::array<std::int64_t, 6> idx{};
    for (;;) {
      std::array<std::int64_t, 6> lo{}, hi{};
      for (std::size_t p = 0; p < 6; ++p) {
        const auto d = index_of(m.order[p]);
        const auto t = m.tile(m.order[p]);
        lo[d] = idx[p] * t;
        hi[d] = std::min(lo[d] + t, ext[p]);
      }
      auto now = tile_elements(l, g, lo, hi);
      for (std::size_t o = 0; o < 3; ++o) {
        for (const auto& e : now[o]) out.moved[o] += held[o].count(e) ? 0 : 1;
        out.peak[o] = std::max<std::int64_t>(out.peak[o], static_cast<std::int64_t>(now[o].size()));
        held[o] = std::move(now[o]);
      }
      ++out.tiles;
      std::size_t p = 6;
      bool done = true;
      while (p > 0) {
        --p;
        if (++idx[p] < cnt[p]) {
          done = false;
          break;
        }
        idx[p] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

// All 720 permutations of the six loops.
inline std::vector<LoopOrder> all_permutations() {
  LoopOrder o = kAllLoopDims;
  std::sort(o.begin(), o.end());
  std::vector<LoopOrder> out;
  do out.push_back(o);
  while (std::next_permutation(o.begin(), o.end()));
  return out;
}

// Random mapping whose tiles are arbitrary integers in [1, extent].
inline Mapping random_mapping(const ConvLayer& l, std::mt19937_64& rng,
                              const std::vector<LoopOrder>& orders) {
  Mapping m;
  m.order = orders[std::uniform_int_distribution<std::size_t>(0, orders.size() - 1)(rng)];
  for (auto d : kAllLoopDims) {
    m.tile(d) = std::uniform_int_distribution<std::int64_t>(1, extent_of(l, d))(rng);
  }
  return m;
}

struct ExhaustiveBest {
  bool feasible = false;
  double dm = 0.0;
  std::int64_t tilings = 0;
};

// Minimum DM over every integer tiling of the non-kernel loops (kernel loops
// whole) and every order in `orders`, costed by dm_layer and checked against
// the capacity by tile_footprint.
inline ExhaustiveBest exhaustive_minimum(const ConvLayer& l, const Bitwidths& q,
                                         double capacity,
                                         const std::vector<LoopOrder>& orders,
                                         const DmOptions& dm = {}) {
  ExhaustiveBest best;
  const auto K = extent_of(l, LoopDim::out_channel), C = extent_of(l, LoopDim::in_channel);
  for (const auto& order : orders) {
    for (std::int64_t k = 1; k <= K; ++k) {
      for (std::int64_t c = 1; c <= C; ++c) {
        for (std::int64_t y = 1; y <= l.out_h; ++y) {
          for (std::int64_t x = 1; x <= l.out_w; ++x) {
            Mapping m;
            m.order = order;
            m.tiles = {k, c, y, x, l.kernel_h, l.kernel_w};
            if (&order == &orders.front()) ++best.tilings;
            if (tile_footprint(l, m, q).total_bits() > capacity) continue;
            const double v = dm_layer(l, m, q, dm).total_bits;
            if (!best.feasible || v < best.dm) best.dm = v;
            best.feasible = true;
          }
        }
      }
    }
  }
  return best;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bfps_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace bfps::test
