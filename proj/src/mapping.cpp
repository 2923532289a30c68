#include "bfps/mapping.hpp"

#include <algorithm>

#include "bfps/error.hpp"

namespace bfps {

std::string_view to_string(LoopDim dim) {
  switch (dim) {
    case LoopDim::out_channel:
      return "K";
    case LoopDim::in_channel:
      return "C";
    case LoopDim::out_height:
      return "Y";
    case LoopDim::out_width:
      return "X";
    case LoopDim::kernel_h:
      return "R";
    case LoopDim::kernel_w:
      return "S";
  }
  return "?";
}

LoopDim parse_loop_dim(std::string_view text) {
  for (auto d : kAllLoopDims) {
    if (to_string(d) == text) return d;
  }
  fail("unknown loop dimension '" + std::string(text) + "'");
}

std::string_view to_string(Operand operand) {
  switch (operand) {
    case Operand::input:
      return "input";
    case Operand::output:
      return "output";
    case Operand::weight:
      return "weight";
  }
  return "?";
}

std::int64_t loop_extent(const ConvLayer& layer, LoopDim dim) {
  switch (dim) {
    case LoopDim::out_channel:
      return layer.out_channels_per_group();
    case LoopDim::in_channel:
      return layer.in_channels_per_group();
    case LoopDim::out_height:
      return layer.out_h;
    case LoopDim::out_width:
      return layer.out_w;
    case LoopDim::kernel_h:
      return layer.kernel_h;
    case LoopDim::kernel_w:
      return layer.kernel_w;
  }
  return 0;
}

void Mapping::validate(const ConvLayer& layer) const {
  std::array<bool, kLoopDimCount> seen{};
  for (auto d : order) {
    if (seen[index_of(d)]) {
      fail("loop order " + format_order(order) + " repeats " +
           std::string(to_string(d)));
    }
    seen[index_of(d)] = true;
  }
  for (auto d : kAllLoopDims) {
    const auto t = tile(d);
    const auto e = loop_extent(layer, d);
    if (t < 1 || t > e) {
      fail("tile " + std::to_string(t) + " for loop " +
           std::string(to_string(d)) + " outside [1, " + std::to_string(e) +
           "]");
    }
  }
}

Mapping whole_layer_mapping(const ConvLayer& layer, const LoopOrder& order) {
  Mapping m;
  m.order = order;
  for (auto d : kAllLoopDims) m.tile(d) = loop_extent(layer, d);
  return m;
}

std::int64_t iteration_count(const ConvLayer& layer, const Mapping& mapping,
                             LoopDim dim) {
  const auto e = loop_extent(layer, dim);
  const auto t = mapping.tile(dim);
  return (e + t - 1) / t;
}

std::string format_order(const LoopOrder& order) {
  std::string out;
  for (auto d : order) out += to_string(d);
  return out;
}

LoopOrder parse_order(std::string_view text) {
  if (text.size() != kLoopDimCount) {
    fail("loop order '" + std::string(text) + "' must name all six loops");
  }
  LoopOrder order{};
  for (std::size_t i = 0; i < kLoopDimCount; ++i) {
    order[i] = parse_loop_dim(text.substr(i, 1));
  }
  std::array<bool, kLoopDimCount> seen{};
  for (auto d : order) {
    if (seen[index_of(d)]) fail("loop order '" + std::string(text) + "' repeats a loop");
    seen[index_of(d)] = true;
  }
  return order;
}

LayerFormats LayerFormats::uniform(int total_bits, int exponent_bits,
                                   int block_size) {
  return {{total_bits, exponent_bits, block_size, TensorRole::input},
          {total_bits, exponent_bits, block_size, TensorRole::output},
          {total_bits, exponent_bits, block_size, TensorRole::weight}};
}

Bitwidths effective_bitwidths(const LayerFormats& f, const ConvLayer& layer) {
  return {effective_bitwidth(f.input, layer.in_h, layer.in_w),
          effective_bitwidth(f.output, layer.out_h, layer.out_w),
          effective_bitwidth(f.weight, layer.kernel_h, layer.kernel_w)};
}

}  // namespace bfps
