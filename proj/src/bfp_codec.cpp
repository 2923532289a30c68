#include "bfps/bfp_codec.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace bfps {

std::string_view to_string(TensorRole role) {
  switch (role) {
    case TensorRole::input:
      return "input";
    case TensorRole::output:
      return "output";
    case TensorRole::weight:
      return "weight";
  }
  return "?";
}

TensorRole parse_tensor_role(std::string_view text) {
  if (text == "input") return TensorRole::input;
  if (text == "output") return TensorRole::output;
  if (text == "weight") return TensorRole::weight;
  fail("unknown tensor role '" + std::string(text) + "'");
}

void BfpSpec::validate() const {
  if (exponent_bits < 1) {
    fail("shared exponent width must be >= 1, got " +
         std::to_string(exponent_bits));
  }
  if (block_size < 1) {
    fail("block size must be >= 1, got " + std::to_string(block_size));
  }
  if (total_bits > 32) {
    fail("total width " + std::to_string(total_bits) + " exceeds 32 bits");
  }
  if (mantissa_width() < 2) {
    fail("signed mantissa width q_b - SE = " +
         std::to_string(mantissa_width()) + " is below 2");
  }
}

namespace {

struct ExponentWindow {
  int lo;
  int hi;
  bool clamped;
};

ExponentWindow exponent_window(const BfpSpec& spec,
                               const CodecOptions& options) {
  if (!options.exponent_bias) {
    return {std::numeric_limits<double>::min_exponent -
                std::numeric_limits<double>::digits,
            std::numeric_limits<double>::max_exponent, false};
  }
  // SE is at most 31 here since validate() caps the total width.
  const int half = 1 << (spec.exponent_bits - 1);
  return {*options.exponent_bias - half, *options.exponent_bias + half - 1,
          true};
}

}  // namespace

int zero_block_exponent(const BfpSpec& spec, const CodecOptions& options) {
  return exponent_window(spec, options).lo;
}

namespace detail {

BfpBlock encode_values(std::span<const double> values, const BfpSpec& spec,
                       const CodecOptions& options) {
  spec.validate();
  if (values.empty()) fail("cannot encode an empty block");

  bool any_nonzero = false;
  int max_exponent = std::numeric_limits<int>::min();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      fail("non-finite value at block position " + std::to_string(i));
    }
    if (v != 0.0) {
      any_nonzero = true;
      max_exponent = std::max(max_exponent, binary_exponent(v));
    }
  }

  const auto window = exponent_window(spec, options);
  BfpBlock block;
  block.mantissas.assign(values.size(), 0);
  if (!any_nonzero) {
    block.shared_exponent = window.lo;
    return block;
  }

  int exponent = max_exponent;
  if (exponent > window.hi) {
    exponent = window.hi;
    block.exponent_saturated = true;
  } else if (exponent < window.lo) {
    exponent = window.lo;
    block.exponent_saturated = true;
  }

  const std::int64_t hi = spec.mantissa_max();
  const std::int64_t lo = spec.mantissa_min();
  for (;;) {
    bool overflow = false;
    const int shift = spec.fraction_bits() - exponent;
    for (std::size_t i = 0; i < values.size(); ++i) {
      // Scaling by a power of two is exact; nearbyint rounds half to even
      // under the default floating-point environment.
      auto m = static_cast<std::int64_t>(
          std::nearbyint(std::ldexp(values[i], shift)));
      if (m > hi) {
        overflow = true;
        m = hi;
      } else if (m < lo) {
        m = lo;
      }
      block.mantissas[i] = static_cast<std::int32_t>(m);
    }
    if (!overflow || exponent >= window.hi) {
      if (overflow) block.exponent_saturated = true;
      break;
    }
    ++exponent;
  }
  block.shared_exponent = exponent;
  return block;
}

void decode_values(const BfpBlock& block, const BfpSpec& spec,
                   std::span<double> out) {
  spec.validate();
  const std::int64_t hi = spec.mantissa_max();
  const std::int64_t lo = spec.mantissa_min();
  const int scale = block.shared_exponent - spec.fraction_bits();
  for (std::size_t i = 0; i < block.mantissas.size(); ++i) {
    const std::int64_t m = block.mantissas[i];
    if (m > hi || m < lo) {
      fail("mantissa " + std::to_string(m) + " at position " +
           std::to_string(i) + " is outside [" + std::to_string(lo) + ", " +
           std::to_string(hi) + "]");
    }
    out[i] = std::ldexp(static_cast<double>(m), scale);
  }
}

}  // namespace detail

BfpBlock encode_block(std::span<const double> values, const BfpSpec& spec,
                      const CodecOptions& options) {
  if (static_cast<std::int64_t>(values.size()) > spec.block_size) {
    fail("encode_block: " + std::to_string(values.size()) +
         " values exceed block size " + std::to_string(spec.block_size));
  }
  return detail::encode_values(values, spec, options);
}

double effective_bitwidth(const BfpSpec& spec, std::int64_t extent_a,
                          std::int64_t extent_b) {
  spec.validate();
  if (extent_a < 1 || extent_b < 1) {
    fail("effective_bitwidth: extents must be >= 1, got " +
         std::to_string(extent_a) + "x" + std::to_string(extent_b));
  }
  const double amortized = static_cast<double>(spec.block_size) *
                           static_cast<double>(extent_a) *
                           static_cast<double>(extent_b);
  return static_cast<double>(spec.mantissa_width()) +
         static_cast<double>(spec.exponent_bits) / amortized;
}

std::int64_t BlockLayout::block_count(int block_size) const {
  return outer * ((channels + block_size - 1) / block_size);
}

BfpTensor encode_tensor(std::span<const double> values,
                        std::vector<std::int64_t> shape,
                        const BlockLayout& layout, const BfpSpec& spec,
                        const CodecOptions& options) {
  spec.validate();
  if (layout.outer < 1 || layout.channels < 1 || layout.spatial < 1) {
    fail("block layout dimensions must be >= 1");
  }
  if (layout.element_count() != static_cast<std::int64_t>(values.size())) {
    fail("block layout covers " + std::to_string(layout.element_count()) +
         " elements but tensor has " + std::to_string(values.size()));
  }
  BfpTensor tensor{std::move(shape), layout, spec, {}};
  tensor.blocks.reserve(static_cast<std::size_t>(layout.block_count(spec.block_size)));
  for (std::int64_t o = 0; o < layout.outer; ++o) {
    for (std::int64_t c0 = 0; c0 < layout.channels; c0 += spec.block_size) {
      const std::int64_t c1 =
          std::min<std::int64_t>(c0 + spec.block_size, layout.channels);
      const auto begin = (o * layout.channels + c0) * layout.spatial;
      const auto count = (c1 - c0) * layout.spatial;
      tensor.blocks.push_back(detail::encode_values(
          values.subspan(static_cast<std::size_t>(begin),
                         static_cast<std::size_t>(count)),
          spec, options));
    }
  }
  return tensor;
}

std::vector<double> decode_tensor(const BfpTensor& tensor) {
  std::vector<double> out(static_cast<std::size_t>(tensor.element_count()));
  std::size_t offset = 0;
  for (const auto& block : tensor.blocks) {
    detail::decode_values(
        block, tensor.spec,
        std::span<double>(out).subspan(offset, block.occupancy()));
    offset += block.occupancy();
  }
  if (offset != out.size()) fail("tensor blocks do not cover its elements");
  return out;
}

QuantizationError quantization_error(std::span<const double> values,
                                     const BlockLayout& layout,
                                     const BfpSpec& spec,
                                     const CodecOptions& options) {
  if (values.empty()) fail("quantization_error: empty tensor");
  const auto encoded = encode_tensor(values, {}, layout, spec, options);
  const auto decoded = decode_tensor(encoded);

  QuantizationError err;
  double sq_err = 0.0;
  double sq_sig = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - decoded[i];
    err.max_abs = std::max(err.max_abs, std::abs(d));
    sq_err += d * d;
    sq_sig += values[i] * values[i];
  }
  const auto n = static_cast<double>(values.size());
  err.mse = sq_err / n;
  err.signal_power = sq_sig / n;
  if (err.mse > 0.0) {
    err.sqnr_db = err.signal_power > 0.0
                      ? 10.0 * std::log10(err.signal_power / err.mse)
                      : -std::numeric_limits<double>::infinity();
  }
  return err;
}

std::vector<float> read_f32_file(const std::string& path,
                                 std::int64_t expected_count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail_io("cannot open tensor file '" + path + "'");
  const auto bytes = static_cast<std::int64_t>(in.tellg());
  if (bytes % 4 != 0) {
    fail_io("tensor file '" + path + "' size " + std::to_string(bytes) +
            " is not a multiple of 4");
  }
  if (expected_count >= 0 && bytes / 4 != expected_count) {
    fail_io("tensor file '" + path + "' holds " + std::to_string(bytes / 4) +
            " floats, shape expects " + std::to_string(expected_count));
  }
  in.seekg(0);
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(bytes / 4));
  in.read(reinterpret_cast<char*>(raw.data()), bytes);
  if (!in) fail_io("short read on tensor file '" + path + "'");

  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::uint32_t word = raw[i];
    if constexpr (std::endian::native == std::endian::big) {
      word = __builtin_bswap32(word);
    }
    out[i] = std::bit_cast<float>(word);
  }
  return out;
}

void write_f32_file(const std::string& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot write tensor file '" + path + "'");
  for (float v : values) {
    auto word = std::bit_cast<std::uint32_t>(v);
    if constexpr (std::endian::native == std::endian::big) {
      word = __builtin_bswap32(word);
    }
    out.write(reinterpret_cast<const char*>(&word), 4);
  }
  if (!out) fail_io("write failed on tensor file '" + path + "'");
}

std::vector<std::int64_t> parse_shape(std::string_view text) {
  std::vector<std::int64_t> dims;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find_first_of("x,", pos);
    const auto token =
        text.substr(pos, next == std::string_view::npos ? text.size() - pos
                                                        : next - pos);
    std::int64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() ||
        value < 1) {
      fail("bad shape '" + std::string(text) + "'");
    }
    dims.push_back(value);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return dims;
}

std::string format_shape(std::span<const std::int64_t> shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

}  // namespace bfps
