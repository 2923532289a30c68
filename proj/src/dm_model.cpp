#include "bfps/dm_model.hpp"

#include "bfps/error.hpp"
#include "conv_geometry.hpp"

namespace bfps {

std::string_view to_string(ReuseClass reuse) {
  switch (reuse) {
    case ReuseClass::none:
      return "none";
    case ReuseClass::partial:
      return "partial";
    case ReuseClass::full:
      return "full";
  }
  return "?";
}

namespace {

ReuseClass level_class(const detail::OperandTransfers& t, std::size_t j) {
  if (t.iterations[j] <= 1 || t.level[j] == 0) return ReuseClass::full;
  return t.overlap[j] > 0 ? ReuseClass::partial : ReuseClass::none;
}

std::size_t position_of(const Mapping& mapping, LoopDim dim) {
  for (std::size_t p = 0; p < kLoopDimCount; ++p) {
    if (mapping.order[p] == dim) return p;
  }
  fail("loop " + std::string(to_string(dim)) + " missing from order");
}

}  // namespace

ReuseClass classify_reuse(Operand operand, LoopDim dim, const ConvLayer& layer,
                          const Mapping& mapping) {
  mapping.validate(layer);
  const auto t = detail::operand_transfers(operand, layer, mapping);
  return level_class(t, position_of(mapping, dim));
}

TileFootprint tile_footprint(const ConvLayer& layer, const Mapping& mapping,
                             const Bitwidths& bitwidths) {
  mapping.validate(layer);
  TileFootprint fp;
  for (auto op : kAllOperands) {
    const auto i = index_of(op);
    fp.elements[i] = detail::tile_footprint_elements(op, layer, mapping.tiles);
    fp.bits[i] = operand_bits(fp.elements[i], bitwidths.of(op));
  }
  return fp;
}

TileFootprint tile_footprint(const ConvLayer& layer, const Mapping& mapping,
                             const LayerFormats& formats) {
  return tile_footprint(layer, mapping, effective_bitwidths(formats, layer));
}

std::int64_t new_data_per_iteration(Operand operand, LoopDim dim,
                                    const ConvLayer& layer,
                                    const Mapping& mapping) {
  mapping.validate(layer);
  const auto t = detail::operand_transfers(operand, layer, mapping);
  const auto j = position_of(mapping, dim);
  const auto reuse = level_class(t, j);
  if (reuse != ReuseClass::partial) {
    fail("new_data_per_iteration: " + std::string(to_string(operand)) +
         " across loop " + std::string(to_string(dim)) + " is " +
         std::string(to_string(reuse)) + " reuse, not partial");
  }
  return t.first_step_new[j];
}

double reuse_level_dm(ReuseClass reuse, std::int64_t iterations,
                      double tile_bits, double new_bits) {
  if (iterations < 1) fail("iteration count must be >= 1");
  switch (reuse) {
    case ReuseClass::none:
      return static_cast<double>(iterations) * tile_bits;
    case ReuseClass::partial:
      return tile_bits + static_cast<double>(iterations - 1) * new_bits;
    case ReuseClass::full:
      return 0.0;
  }
  return 0.0;
}

DmBreakdown dm_layer(const ConvLayer& layer, const Mapping& mapping,
                     const Bitwidths& bitwidths, const DmOptions& options) {
  mapping.validate(layer);
  DmBreakdown out;
  out.groups = layer.groups;
  std::array<double, 3> per_operand{};

  for (auto op : kAllOperands) {
    const auto t = detail::operand_transfers(op, layer, mapping);
    const double q = bitwidths.of(op);
    auto& od = out.operands[index_of(op)];
    od.operand = op;
    od.bitwidth = q;
    od.footprint_bits =
        operand_bits(detail::tile_footprint_elements(op, layer, mapping.tiles), q);

    bool all_full = true;
    for (std::size_t j = 0; j < kLoopDimCount; ++j) {
      auto& lv = od.levels[j];
      lv.dim = mapping.order[j];
      lv.iterations = t.iterations[j];
      lv.reuse = level_class(t, j);
      lv.new_data_bits = operand_bits(t.first_step_new[j], q);
      all_full = all_full && lv.reuse == ReuseClass::full;
    }

    std::int64_t per_group = 0;
    if (options.level_sum == LevelSum::all_levels) {
      const bool cold = options.count_first_load || !all_full;
      const std::int64_t first = cold ? t.first_load : 0;
      od.first_load_bits = operand_bits(first * layer.groups, q);
      per_group = first;
      for (std::size_t j = 0; j < kLoopDimCount; ++j) {
        od.levels[j].bits = operand_bits(t.level[j] * layer.groups, q);
        per_group += t.level[j];
      }
    } else {
      std::size_t inner = kLoopDimCount;
      for (std::size_t j = kLoopDimCount; j-- > 0;) {
        if (t.iterations[j] > 1) {
          inner = j;
          break;
        }
      }
      const auto reuse =
          inner < kLoopDimCount ? od.levels[inner].reuse : ReuseClass::full;
      if (reuse == ReuseClass::full) {
        per_group = options.count_first_load ? t.first_load : 0;
        od.first_load_bits = operand_bits(per_group * layer.groups, q);
      } else {
        const auto it = t.iterations[inner];
        per_group = reuse == ReuseClass::none
                        ? it * t.first_load
                        : t.first_load + (it - 1) * t.first_step_new[inner];
        od.levels[inner].bits = operand_bits(per_group * layer.groups, q);
      }
    }
    od.elements = per_group * layer.groups;
    od.bits = operand_bits(od.elements, q);
    per_operand[index_of(op)] = od.bits;
  }
  out.total_bits = total_bits(per_operand);
  return out;
}

DmBreakdown dm_layer(const ConvLayer& layer, const Mapping& mapping,
                     const LayerFormats& formats, const DmOptions& options) {
  return dm_layer(layer, mapping, effective_bitwidths(formats, layer), options);
}

double dm_sum(std::span<const DmBreakdown> layers) {
  double sum = 0.0;
  for (const auto& l : layers) sum += l.total_bits;
  return sum;
}

double perf_loss(double dm_sum_bits, double dm_max_bits) {
  if (!(dm_max_bits > 0.0)) fail("DM_max must be positive");
  return dm_sum_bits / dm_max_bits;
}

}  // namespace bfps
