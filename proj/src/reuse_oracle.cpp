#include "bfps/reuse_oracle.hpp"

#include <algorithm>
#include <ostream>
#include <utility>

#include "bfps/dm_model.hpp"
#include "bfps/error.hpp"

namespace bfps {

std::int64_t IndexBox::volume() const {
  std::int64_t v = 1;
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (hi[d] <= lo[d]) return 0;
    v *= hi[d] - lo[d];
  }
  return v;
}

IndexBox IndexBox::intersect(const IndexBox& other) const {
  IndexBox out;
  for (std::size_t d = 0; d < lo.size(); ++d) {
    out.lo[d] = std::max(lo[d], other.lo[d]);
    out.hi[d] = std::min(hi[d], other.hi[d]);
  }
  return out;
}

namespace {

struct TileBounds {
  // Half-open [begin, end) of the tile in every loop dimension.
  std::array<std::int64_t, kLoopDimCount> begin{};
  std::array<std::int64_t, kLoopDimCount> end{};

  std::int64_t b(LoopDim d) const { return begin[index_of(d)]; }
  std::int64_t e(LoopDim d) const { return end[index_of(d)]; }
};

// [min, max + 1) of the in-range input coordinates o*stride + k - pad over
// o in [o0, o1) and k in [k0, k1); empty when none is in range.
std::pair<std::int64_t, std::int64_t> read_span(std::int64_t o0, std::int64_t o1,
                                                std::int64_t k0, std::int64_t k1,
                                                std::int64_t stride, std::int64_t pad,
                                                std::int64_t extent) {
  std::int64_t lo = extent, hi = -1;
  for (auto o = o0; o < o1; ++o) {
    for (auto k = k0; k < k1; ++k) {
      const auto x = o * stride + k - pad;
      if (x < 0 || x >= extent) continue;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  return hi < lo ? std::pair<std::int64_t, std::int64_t>{0, 0}
                 : std::pair<std::int64_t, std::int64_t>{lo, hi + 1};
}

// Index sets touched by one tile, in absolute tensor coordinates.
std::array<IndexBox, 3> tile_boxes(const ConvLayer& layer, std::int64_t group,
                                   const TileBounds& t) {
  const auto cin0 = group * layer.in_channels_per_group();
  const auto cout0 = group * layer.out_channels_per_group();
  std::array<IndexBox, 3> boxes;

  auto& in = boxes[index_of(Operand::input)];
  in.lo = {cin0 + t.b(LoopDim::in_channel), 0, 0, 0};
  in.hi = {cin0 + t.e(LoopDim::in_channel), 0, 0, 1};
  // Smallest and largest valid input row/col any (output, kernel) pair of
  // the tile reads; the box spans the gaps between them.
  const auto rows = read_span(t.b(LoopDim::out_height), t.e(LoopDim::out_height),
                              t.b(LoopDim::kernel_h), t.e(LoopDim::kernel_h),
                              layer.stride_h, layer.pad_h, layer.in_h);
  const auto cols = read_span(t.b(LoopDim::out_width), t.e(LoopDim::out_width),
                              t.b(LoopDim::kernel_w), t.e(LoopDim::kernel_w),
                              layer.stride_w, layer.pad_w, layer.in_w);
  in.lo[1] = rows.first;
  in.hi[1] = rows.second;
  in.lo[2] = cols.first;
  in.hi[2] = cols.second;

  auto& out = boxes[index_of(Operand::output)];
  out.lo = {cout0 + t.b(LoopDim::out_channel), t.b(LoopDim::out_height),
            t.b(LoopDim::out_width), 0};
  out.hi = {cout0 + t.e(LoopDim::out_channel), t.e(LoopDim::out_height),
            t.e(LoopDim::out_width), 1};

  auto& w = boxes[index_of(Operand::weight)];
  w.lo = {cout0 + t.b(LoopDim::out_channel), t.b(LoopDim::in_channel),
          t.b(LoopDim::kernel_h), t.b(LoopDim::kernel_w)};
  w.hi = {cout0 + t.e(LoopDim::out_channel), t.e(LoopDim::in_channel),
          t.e(LoopDim::kernel_h), t.e(LoopDim::kernel_w)};
  return boxes;
}

}  // namespace

SimulationResult simulate(const ConvLayer& layer, const Mapping& mapping,
                          const Bitwidths& bitwidths, double capacity_bits,
                          RetentionPolicy policy, std::ostream* trace) {
  mapping.validate(layer);
  if (!(capacity_bits > 0.0)) fail("buffer capacity must be positive");

  std::array<std::int64_t, kLoopDimCount> extent{};
  std::array<std::int64_t, kLoopDimCount> count{};  // tiles per loop position
  for (std::size_t p = 0; p < kLoopDimCount; ++p) {
    const auto d = mapping.order[p];
    extent[p] = loop_extent(layer, d);
    count[p] = (extent[p] + mapping.tile(d) - 1) / mapping.tile(d);
  }

  BufferState buffer;
  buffer.capacity_bits = capacity_bits;
  SimulationResult result;
  bool first = true;

  for (std::int64_t g = 0; g < layer.groups; ++g) {
    std::array<std::int64_t, kLoopDimCount> idx{};  // odometer, outermost first
    for (;;) {
      TileBounds t;
      for (std::size_t p = 0; p < kLoopDimCount; ++p) {
        const auto d = mapping.order[p];
        const auto size = mapping.tile(d);
        t.begin[index_of(d)] = idx[p] * size;
        t.end[index_of(d)] = std::min(idx[p] * size + size, extent[p]);
      }
      const auto boxes = tile_boxes(layer, g, t);

      double occupancy = 0.0;
      for (auto op : kAllOperands) {
        occupancy += operand_bits(boxes[index_of(op)].volume(), bitwidths.of(op));
      }
      if (occupancy > capacity_bits) {
        fail_infeasible("tile needs " + std::to_string(occupancy) +
                        " bits, buffer holds " + std::to_string(capacity_bits));
      }

      std::array<std::int64_t, 3> moved{};
      for (auto op : kAllOperands) {
        const auto i = index_of(op);
        const auto& fresh = boxes[i];
        std::int64_t load = fresh.volume();
        if (!first && policy == RetentionPolicy::slide_and_retain) {
          load -= fresh.intersect(buffer.resident[i]).volume();
        }
        moved[i] = load;
        result.elements[i] += load;
        buffer.resident[i] = fresh;
      }
      buffer.occupancy_bits = occupancy;
      result.peak_occupancy_bits = std::max(result.peak_occupancy_bits, occupancy);
      ++result.tiles;
      first = false;

      if (trace) {
        *trace << "tile " << result.tiles - 1 << " group " << g << " idx";
        for (std::size_t p = 0; p < kLoopDimCount; ++p) {
          *trace << ' ' << to_string(mapping.order[p]) << '=' << idx[p];
        }
        *trace << " load in=" << moved[0] << " out=" << moved[1]
               << " w=" << moved[2] << " occupancy=" << occupancy << '\n';
      }

      std::size_t p = kLoopDimCount;
      while (p > 0) {
        --p;
        if (++idx[p] < count[p]) break;
        idx[p] = 0;
        if (p == 0) {
          p = kLoopDimCount + 1;  // odometer wrapped: group done
          break;
        }
      }
      if (p == kLoopDimCount + 1) break;
    }
  }

  for (auto op : kAllOperands) {
    const auto i = index_of(op);
    result.bits[i] = operand_bits(result.elements[i], bitwidths.of(op));
  }
  result.total_bits = total_bits(result.bits);
  return result;
}

}  // namespace bfps
