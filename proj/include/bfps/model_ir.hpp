#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bfps {

// One convolution layer. Kernel height pairs with the input height and
// kernel width with the input width.
struct ConvLayer {
  int index = 0;  // position in the model
  std::string name;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t in_h = 1;
  std::int64_t in_w = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride_h = 1;
  std::int64_t stride_w = 1;
  std::int64_t pad_h = 0;
  std::int64_t pad_w = 0;
  std::int64_t groups = 1;
  std::int64_t out_h = 1;
  std::int64_t out_w = 1;

  // Sample tensors for the accuracy proxy, as written in the model file.
  std::string input_samples;
  std::string output_samples;
  std::string weight_samples;

  std::int64_t in_channels_per_group() const { return in_channels / groups; }
  std::int64_t out_channels_per_group() const { return out_channels / groups; }

  std::int64_t input_volume() const { return in_channels * in_h * in_w; }
  std::int64_t output_volume() const { return out_channels * out_h * out_w; }
  std::int64_t weight_volume() const {
    return out_channels * in_channels_per_group() * kernel_h * kernel_w;
  }
  std::int64_t mac_count() const {
    return output_volume() * in_channels_per_group() * kernel_h * kernel_w;
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

std::int64_t conv_output_extent(std::int64_t in, std::int64_t kernel,
                                std::int64_t stride, std::int64_t pad);

// Fills out_h/out_w from the shape formula.
void derive_output_dims(ConvLayer& layer);

// Throws on nonpositive shapes, bad grouping or output dims that disagree
// with the shape formula.
void validate_layer(const ConvLayer& layer);

struct LayerVolumes {
  std::int64_t inputs = 0;
  std::int64_t outputs = 0;
  std::int64_t weights = 0;

  friend bool operator==(const LayerVolumes&, const LayerVolumes&) = default;
};

LayerVolumes layer_volumes(const ConvLayer& layer);

struct ModelDesc {
  std::string name;
  std::vector<ConvLayer> layers;
  std::filesystem::path base_directory;  // sample paths resolve against it

  std::size_t layer_count() const { return layers.size(); }
};

struct Diagnostic {
  enum class Severity { note, warning, error };
  int line = 0;
  Severity severity = Severity::warning;
  std::string message;
};

std::string format_diagnostic(const Diagnostic& diagnostic,
                              std::string_view source);

struct LoadedModel {
  ModelDesc model;
  std::vector<Diagnostic> diagnostics;  // warnings only; errors throw
};

inline constexpr int kModelFormatVersion = 1;

// Parses the model description format (see docs/model-format.md). Errors are
// thrown as bfps::Error carrying every error diagnostic, one per line.
LoadedModel parse_model(std::string_view text, std::string_view source_name);
LoadedModel load_model(const std::filesystem::path& path);

std::string serialize_model(const ModelDesc& model);

}  // namespace bfps
