#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bfps/bfp_codec.hpp"
#include "bfps/model_ir.hpp"

namespace bfps {

// Tile-level loops of the convolution nest.
enum class LoopDim : std::uint8_t {
  out_channel,
  in_channel,
  out_height,
  out_width,
  kernel_h,
  kernel_w,
};
inline constexpr std::size_t kLoopDimCount = 6;

inline constexpr std::array<LoopDim, kLoopDimCount> kAllLoopDims = {
    LoopDim::out_channel, LoopDim::in_channel, LoopDim::out_height,
    LoopDim::out_width,   LoopDim::kernel_h,   LoopDim::kernel_w};

constexpr std::size_t index_of(LoopDim d) { return static_cast<std::size_t>(d); }

std::string_view to_string(LoopDim dim);
LoopDim parse_loop_dim(std::string_view text);

enum class Operand : std::uint8_t { input, output, weight };
inline constexpr std::array<Operand, 3> kAllOperands = {
    Operand::input, Operand::output, Operand::weight};

constexpr std::size_t index_of(Operand o) { return static_cast<std::size_t>(o); }
std::string_view to_string(Operand operand);

// Whether the operand's footprint depends on the loop variable at all.
constexpr bool depends_on(Operand operand, LoopDim dim) {
  switch (operand) {
    case Operand::input:
      return dim != LoopDim::out_channel;
    case Operand::output:
      return dim == LoopDim::out_channel || dim == LoopDim::out_height ||
             dim == LoopDim::out_width;
    case Operand::weight:
      return dim == LoopDim::out_channel || dim == LoopDim::in_channel ||
             dim == LoopDim::kernel_h || dim == LoopDim::kernel_w;
  }
  return false;
}

// Trip count of each loop dimension within one group.
std::int64_t loop_extent(const ConvLayer& layer, LoopDim dim);

using LoopOrder = std::array<LoopDim, kLoopDimCount>;
using TileSizes = std::array<std::int64_t, kLoopDimCount>;  // by index_of(dim)

// Loop permutation (outermost first) plus tile size per dimension. Groups of a
// grouped convolution are iterated by an implicit outermost loop.
struct Mapping {
  LoopOrder order = kAllLoopDims;
  TileSizes tiles = {1, 1, 1, 1, 1, 1};

  std::int64_t tile(LoopDim d) const { return tiles[index_of(d)]; }
  std::int64_t& tile(LoopDim d) { return tiles[index_of(d)]; }

  // Throws unless `order` is a permutation and every tile is in [1, extent].
  void validate(const ConvLayer& layer) const;

  friend bool operator==(const Mapping&, const Mapping&) = default;
};

// Mapping with one tile covering the whole layer.
Mapping whole_layer_mapping(const ConvLayer& layer,
                            const LoopOrder& order = kAllLoopDims);

std::int64_t iteration_count(const ConvLayer& layer, const Mapping& mapping,
                             LoopDim dim);

std::string format_order(const LoopOrder& order);
LoopOrder parse_order(std::string_view text);

// Real-valued bits per element of each operand.
struct Bitwidths {
  double input = 32.0;
  double output = 32.0;
  double weight = 32.0;

  double of(Operand o) const {
    switch (o) {
      case Operand::input:
        return input;
      case Operand::output:
        return output;
      case Operand::weight:
        return weight;
    }
    return 0.0;
  }

  friend bool operator==(const Bitwidths&, const Bitwidths&) = default;
};

// The three per-role BFP specs of one layer.
struct LayerFormats {
  BfpSpec input{8, 3, 2, TensorRole::input};
  BfpSpec output{8, 3, 2, TensorRole::output};
  BfpSpec weight{8, 3, 2, TensorRole::weight};

  static LayerFormats uniform(int total_bits, int exponent_bits,
                              int block_size);

  friend bool operator==(const LayerFormats&, const LayerFormats&) = default;
};

// Per-operand effective bitwidths on this layer's dimensions.
Bitwidths effective_bitwidths(const LayerFormats& formats,
                              const ConvLayer& layer);

// Unblocked float32 for every operand.
inline constexpr Bitwidths kFloat32Bitwidths{32.0, 32.0, 32.0};

}  // namespace bfps
