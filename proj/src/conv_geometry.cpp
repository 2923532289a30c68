#include "conv_geometry.hpp"

#include <algorithm>

namespace bfps::detail {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0);
}
std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

Range FootprintAxis::interval(std::int64_t primary_index,
                              std::int64_t kernel_index) const {
  const auto out = tile_range(primary_index, primary_tile, primary_extent);
  if (!window) return out;
  const auto ker = tile_range(kernel_index, kernel_tile, kernel_extent);
  // Output o reads rows [o*stride + ker.lo - pad, o*stride + ker.hi - 1 - pad].
  // Clip to the first output whose rows reach row 0 and the last whose rows
  // start inside the input, so padding-side gaps never count.
  const auto first = std::max(out.lo, ceil_div(pad - (ker.hi - 1), stride));
  const auto last = std::min(out.hi - 1, floor_div(input_extent - 1 + pad - ker.lo, stride));
  if (first > last) return {0, 0};
  const auto lo = std::max<std::int64_t>(first * stride + ker.lo - pad, 0);
  const auto hi = std::min(last * stride + (ker.hi - 1) - pad + 1, input_extent);
  return {lo, hi};
}

namespace {

FootprintAxis direct_axis(LoopDim dim, const ConvLayer& layer,
                          const Mapping& mapping) {
  FootprintAxis axis;
  axis.primary = dim;
  axis.primary_tile = mapping.tile(dim);
  axis.primary_extent = loop_extent(layer, dim);
  return axis;
}

FootprintAxis window_axis(LoopDim out_dim, LoopDim kernel_dim,
                          std::int64_t stride, std::int64_t pad,
                          std::int64_t input_extent, const ConvLayer& layer,
                          const Mapping& mapping) {
  auto axis = direct_axis(out_dim, layer, mapping);
  axis.window = true;
  axis.kernel = kernel_dim;
  axis.kernel_tile = mapping.tile(kernel_dim);
  axis.kernel_extent = loop_extent(layer, kernel_dim);
  axis.stride = stride;
  axis.pad = pad;
  axis.input_extent = input_extent;
  return axis;
}

// Index transitions a loop takes part in, relative to the stepping level.
enum class LoopRole { outer, step, inner };

struct IndexPair {
  std::int64_t old_index;
  std::int64_t new_index;
};

void append_pairs(LoopRole role, std::int64_t iterations, bool first_only,
                  std::vector<IndexPair>& out) {
  out.clear();
  switch (role) {
    case LoopRole::outer:
      if (first_only) {
        out.push_back({0, 0});
      } else {
        for (std::int64_t i = 0; i < iterations; ++i) out.push_back({i, i});
      }
      break;
    case LoopRole::step:
      if (first_only) {
        out.push_back({0, 1});
      } else {
        for (std::int64_t t = 0; t + 1 < iterations; ++t) out.push_back({t, t + 1});
      }
      break;
    case LoopRole::inner:
      out.push_back({iterations - 1, 0});
      break;
  }
}

struct AxisSums {
  std::int64_t fresh = 0;    // sum of |new|
  std::int64_t overlap = 0;  // sum of |old & new|
};

}  // namespace

std::vector<FootprintAxis> footprint_axes(Operand operand,
                                          const ConvLayer& layer,
                                          const Mapping& mapping) {
  switch (operand) {
    case Operand::input:
      return {direct_axis(LoopDim::in_channel, layer, mapping),
              window_axis(LoopDim::out_height, LoopDim::kernel_h,
                          layer.stride_h, layer.pad_h, layer.in_h, layer,
                          mapping),
              window_axis(LoopDim::out_width, LoopDim::kernel_w,
                          layer.stride_w, layer.pad_w, layer.in_w, layer,
                          mapping)};
    case Operand::output:
      return {direct_axis(LoopDim::out_channel, layer, mapping),
              direct_axis(LoopDim::out_height, layer, mapping),
              direct_axis(LoopDim::out_width, layer, mapping)};
    case Operand::weight:
      return {direct_axis(LoopDim::out_channel, layer, mapping),
              direct_axis(LoopDim::in_channel, layer, mapping),
              direct_axis(LoopDim::kernel_h, layer, mapping),
              direct_axis(LoopDim::kernel_w, layer, mapping)};
  }
  return {};
}

OperandTransfers operand_transfers(Operand operand, const ConvLayer& layer,
                                   const Mapping& mapping) {
  const auto axes = footprint_axes(operand, layer, mapping);

  std::array<std::size_t, kLoopDimCount> position{};
  for (std::size_t p = 0; p < kLoopDimCount; ++p) {
    position[index_of(mapping.order[p])] = p;
  }
  auto iters = [&](LoopDim d) { return iteration_count(layer, mapping, d); };

  OperandTransfers result;
  result.first_load = 1;
  for (const auto& axis : axes) result.first_load *= axis.interval(0, 0).length();

  std::vector<IndexPair> primary_pairs;
  std::vector<IndexPair> kernel_pairs;
  const IndexPair fixed{0, 0};

  for (std::size_t j = 0; j < kLoopDimCount; ++j) {
    const auto dim_j = mapping.order[j];
    const auto it_j = iters(dim_j);
    result.iterations[j] = it_j;
    if (it_j <= 1) continue;

    std::int64_t mult = 1;
    for (std::size_t k = 0; k < j; ++k) {
      if (!depends_on(operand, mapping.order[k])) mult *= iters(mapping.order[k]);
    }
    if (!depends_on(operand, dim_j)) mult *= it_j - 1;

    auto role_of = [&](LoopDim d) {
      const auto p = position[index_of(d)];
      return p < j ? LoopRole::outer : p == j ? LoopRole::step : LoopRole::inner;
    };

    std::int64_t prod_fresh = 1, prod_overlap = 1;
    std::int64_t first_fresh = 1, first_overlap = 1;
    for (const auto& axis : axes) {
      for (const bool first_only : {false, true}) {
        append_pairs(role_of(axis.primary), iters(axis.primary), first_only,
                     primary_pairs);
        if (axis.window) {
          append_pairs(role_of(axis.kernel), iters(axis.kernel), first_only,
                       kernel_pairs);
        } else {
          kernel_pairs.assign(1, fixed);
        }
        AxisSums sums;
        for (const auto& pp : primary_pairs) {
          for (const auto& kp : kernel_pairs) {
            const auto fresh = axis.interval(pp.new_index, kp.new_index);
            const auto old = axis.interval(pp.old_index, kp.old_index);
            sums.fresh += fresh.length();
            sums.overlap += intersect(fresh, old).length();
          }
        }
        if (first_only) {
          first_fresh *= sums.fresh;
          first_overlap *= sums.overlap;
        } else {
          prod_fresh *= sums.fresh;
          prod_overlap *= sums.overlap;
        }
      }
    }
    result.level[j] = mult * (prod_fresh - prod_overlap);
    result.overlap[j] = mult * prod_overlap;
    result.first_step_new[j] = first_fresh - first_overlap;
  }
  return result;
}

std::int64_t tile_footprint_elements(Operand operand, const ConvLayer& layer,
                                     const TileSizes& t) {
  Mapping mapping;
  mapping.tiles = t;
  // Axes are independent, so the largest box is the product of each axis'
  // longest interval. Window axes are clipped unevenly, so scan every tile.
  std::int64_t volume = 1;
  for (const auto& axis : footprint_axes(operand, layer, mapping)) {
    std::int64_t longest = 0;
    if (!axis.window) {
      longest = axis.interval(0, 0).length();
    } else {
      const auto np = (axis.primary_extent + axis.primary_tile - 1) / axis.primary_tile;
      const auto nk = (axis.kernel_extent + axis.kernel_tile - 1) / axis.kernel_tile;
      for (std::int64_t i = 0; i < np; ++i) {
        for (std::int64_t k = 0; k < nk; ++k) {
          longest = std::max(longest, axis.interval(i, k).length());
        }
      }
    }
    volume *= longest;
  }
  return volume;
}

}  // namespace bfps::detail
