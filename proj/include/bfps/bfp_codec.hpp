#pragma once

// Block floating point codec.
//
// A block of values shares one exponent E (the largest binary exponent in the
// block) and stores one two's-complement mantissa per value, each
// `total_bits - exponent_bits` wide including the sign. Mantissas carry
// `width - 2` fraction bits relative to E, so a decoded element is
//
//     value = mantissa * 2^(E - (width - 2))
//
// and the rounding error of any element is at most 2^(E - (width - 1)).
// Rounding is to nearest, ties to even. When rounding the largest element
// would overflow the positive mantissa range the block is renormalized by
// bumping E once, which keeps the error bound while E stays an upper bound
// on every element exponent.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfps/error.hpp"

namespace bfps {

enum class TensorRole : std::uint8_t { input, output, weight };

std::string_view to_string(TensorRole role);
TensorRole parse_tensor_role(std::string_view text);

struct BfpSpec {
  int total_bits = 8;     // q_b
  int exponent_bits = 3;  // SE
  int block_size = 2;     // BS
  TensorRole role = TensorRole::input;

  int mantissa_width() const { return total_bits - exponent_bits; }
  int fraction_bits() const { return mantissa_width() - 2; }
  std::int64_t mantissa_max() const {
    return (std::int64_t{1} << (mantissa_width() - 1)) - 1;
  }
  std::int64_t mantissa_min() const {
    return -(std::int64_t{1} << (mantissa_width() - 1));
  }

  // Throws on exponent_bits < 1, block_size < 1, mantissa width < 2 or a
  // total width beyond 32 bits.
  void validate() const;

  friend bool operator==(const BfpSpec&, const BfpSpec&) = default;
};

// Optional clamp of the shared exponent to the signed window an SE-bit field
// can hold: [bias - 2^(SE-1), bias + 2^(SE-1) - 1]. Unset means the exponent
// field is treated as wide enough for any value.
struct CodecOptions {
  std::optional<int> exponent_bias;
};

// Exponent stored for an all-zero block.
int zero_block_exponent(const BfpSpec& spec, const CodecOptions& options = {});

struct BfpBlock {
  int shared_exponent = 0;
  std::vector<std::int32_t> mantissas;
  bool exponent_saturated = false;  // shared exponent hit the window edge

  std::size_t occupancy() const { return mantissas.size(); }

  friend bool operator==(const BfpBlock&, const BfpBlock&) = default;
};

// Binary exponent floor(log2|x|) of a finite nonzero value.
inline int binary_exponent(double x) { return std::ilogb(x); }

namespace detail {

// Encodes up to `capacity` values as one block. All public encoders funnel
// through here after their own size checks.
BfpBlock encode_values(std::span<const double> values, const BfpSpec& spec,
                       const CodecOptions& options);

void decode_values(const BfpBlock& block, const BfpSpec& spec,
                   std::span<double> out);

template <typename Derived>
std::vector<double> to_doubles(const Eigen::DenseBase<Derived>& values) {
  std::vector<double> out(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<double>(values(i));
  }
  return out;
}

}  // namespace detail

template <typename Derived>
BfpBlock encode_block(const Eigen::DenseBase<Derived>& values,
                      const BfpSpec& spec, const CodecOptions& options = {}) {
  if (values.size() > spec.block_size) {
    fail("encode_block: " + std::to_string(values.size()) +
         " values exceed block size " + std::to_string(spec.block_size));
  }
  const auto buffer = detail::to_doubles(values);
  return detail::encode_values(buffer, spec, options);
}

BfpBlock encode_block(std::span<const double> values, const BfpSpec& spec,
                      const CodecOptions& options = {});

template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 1> decode_block(const BfpBlock& block,
                                                     const BfpSpec& spec) {
  std::vector<double> buffer(block.mantissas.size());
  detail::decode_values(block, spec, buffer);
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out(
      static_cast<Eigen::Index>(buffer.size()));
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = static_cast<Scalar>(buffer[i]);
  }
  return out;
}

// Effective bits per element once the shared exponent is amortized over
// BS * extent_a * extent_b elements. The extents are (I_h, I_w) for inputs,
// (O_h, O_w) for outputs and (K_x, K_y) for weights.
double effective_bitwidth(const BfpSpec& spec, std::int64_t extent_a,
                          std::int64_t extent_b);

// Blocking rule for a tensor viewed as [outer][channels][spatial]. A block
// spans `block_size` consecutive channels times the whole spatial extent of
// one outer index; the flat layout is {1, element_count, 1}.
struct BlockLayout {
  std::int64_t outer = 1;
  std::int64_t channels = 1;
  std::int64_t spatial = 1;

  static BlockLayout flat(std::int64_t element_count) {
    return {1, element_count, 1};
  }
  std::int64_t element_count() const { return outer * channels * spatial; }
  std::int64_t block_count(int block_size) const;

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

struct BfpTensor {
  std::vector<std::int64_t> shape;
  BlockLayout layout;
  BfpSpec spec;
  std::vector<BfpBlock> blocks;

  std::int64_t element_count() const { return layout.element_count(); }
};

BfpTensor encode_tensor(std::span<const double> values,
                        std::vector<std::int64_t> shape,
                        const BlockLayout& layout, const BfpSpec& spec,
                        const CodecOptions& options = {});

std::vector<double> decode_tensor(const BfpTensor& tensor);

template <typename Derived>
BfpTensor encode_tensor(const Eigen::DenseBase<Derived>& values,
                        std::vector<std::int64_t> shape,
                        const BlockLayout& layout, const BfpSpec& spec,
                        const CodecOptions& options = {}) {
  const auto buffer = detail::to_doubles(values);
  return encode_tensor(std::span<const double>(buffer), std::move(shape),
                       layout, spec, options);
}

struct QuantizationError {
  double max_abs = 0.0;
  double mse = 0.0;
  double signal_power = 0.0;  // mean of x^2
  double sqnr_db = std::numeric_limits<double>::infinity();

  // mse / signal_power, zero for an all-zero signal.
  double normalized_mse() const {
    return signal_power > 0.0 ? mse / signal_power : 0.0;
  }
};

QuantizationError quantization_error(std::span<const double> values,
                                     const BlockLayout& layout,
                                     const BfpSpec& spec,
                                     const CodecOptions& options = {});

template <typename Derived>
QuantizationError quantization_error(const Eigen::DenseBase<Derived>& values,
                                     const BlockLayout& layout,
                                     const BfpSpec& spec,
                                     const CodecOptions& options = {}) {
  const auto buffer = detail::to_doubles(values);
  return quantization_error(std::span<const double>(buffer), layout, spec,
                            options);
}

// Flat little-endian float32 tensor files.
std::vector<float> read_f32_file(const std::string& path,
                                 std::int64_t expected_count);
void write_f32_file(const std::string& path, std::span<const float> values);

std::vector<std::int64_t> parse_shape(std::string_view text);
std::string format_shape(std::span<const std::int64_t> shape);

}  // namespace bfps
