#pragma once

// Accuracy-loss sources for the configuration search.
//
// The proxy scores a configuration by the normalized quantization MSE of
// representative tensors of every layer. A layer's loss sums its three roles;
// the model loss weights layers by output volume (weights sum to 1). Raw
// losses are normalized over the candidate set by the search.
//
// An AccuracyTable holds externally measured losses instead, either for a
// whole-model configuration or per (layer, role).

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfps/bfp_codec.hpp"
#include "bfps/mapping.hpp"
#include "bfps/model_ir.hpp"

namespace bfps {

inline constexpr std::uint64_t kSyntheticSampleSeed = 0x5eed'bf95;

struct SampleTensor {
  std::vector<double> values;
  BlockLayout layout;
};

// Representative tensors of one layer, indexed by TensorRole.
struct LayerSamples {
  std::array<SampleTensor, 3> tensors;
  std::array<bool, 3> synthetic{};

  const SampleTensor& of(TensorRole r) const {
    return tensors[static_cast<std::size_t>(r)];
  }
};

struct SampleOptions {
  // Substitute seeded unit-variance Gaussian tensors for missing files.
  bool synthetic_fallback = true;
  std::uint64_t seed = kSyntheticSampleSeed;
  // Synthetic tensor extents: activations keep up to max_channels channels
  // and a max_spatial x max_spatial window; weights up to max_out_channels
  // filters of up to max_channels input channels.
  std::int64_t max_channels = 96;
  std::int64_t max_spatial = 8;
  std::int64_t max_out_channels = 16;
};

// Synthetic tensors for a layer. Deterministic in (seed, layer.index).
LayerSamples synthetic_samples(const ConvLayer& layer,
                               const SampleOptions& options = {});

// Loads the sample files named by each layer (paths relative to the model's
// base directory), falling back to synthetic tensors where allowed.
// Activation files hold N whole [C][H][W] tensors; weight files exactly
// [C_out][C_in/groups][K_h][K_w]. All are little-endian float32.
std::vector<LayerSamples> load_samples(const ModelDesc& model,
                                       const SampleOptions& options = {});

// Normalized MSE of one role's samples under `spec`.
double role_proxy_loss(const SampleTensor& samples, const BfpSpec& spec,
                       const CodecOptions& codec = {});

// Sum of the three roles' normalized MSE.
double layer_proxy_loss(const LayerSamples& samples, const LayerFormats& formats,
                        const CodecOptions& codec = {});

// Per-layer weights proportional to output volume, summing to 1.
std::vector<double> layer_loss_weights(const ModelDesc& model);

// Volume-weighted model loss; `formats` has one entry per layer.
double proxy_acc_loss(const ModelDesc& model,
                      std::span<const LayerSamples> samples,
                      std::span<const LayerFormats> formats,
                      const CodecOptions& codec = {});

// Role field of a table record: one tensor role or every role of the scope.
enum class TableRole : std::uint8_t { input, output, weight, all };
std::string_view to_string(TableRole role);

struct AccuracyKey {
  int layer = -1;  // -1 for whole-model entries
  TableRole role = TableRole::all;
  int exponent_bits = 0;
  int block_size = 0;
  int total_bits = 0;

  auto operator<=>(const AccuracyKey&) const = default;
};

// Text format, one record per line, '#' starts a comment:
//
//   <scope> <role> <se> <bs> <qb> <loss>
//
// scope is `model` or `layer:<index>`; role is input, output, weight or all.
// Whole-model records must use role `all` and describe the configuration
// that applies (se, bs) to every role of every layer.
class AccuracyTable {
 public:
  void add(const AccuracyKey& key, double loss);
  std::optional<double> find(const AccuracyKey& key) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::map<AccuracyKey, double>& entries() const { return entries_; }

  // Loss of one layer under `formats`: a layer-wide `all` entry when every
  // role shares one format, otherwise the sum of the per-role entries.
  std::optional<double> layer_loss(int layer, const LayerFormats& formats) const;

 private:
  std::map<AccuracyKey, double> entries_;
};

AccuracyTable parse_accuracy_table(std::string_view text,
                                   std::string_view source_name);
AccuracyTable load_accuracy_table(const std::filesystem::path& path);
std::string serialize_accuracy_table(const AccuracyTable& table);

struct LookupOptions {
  // Fall back to the sum of per-layer losses when no whole-model entry
  // matches.
  bool compose = true;
};

// Tabulated loss of a configuration: the matching whole-model entry when
// present, otherwise the per-layer sum. Throws when not covered.
double lookup_acc_loss(const AccuracyTable& table, const ModelDesc& model,
                       std::span<const LayerFormats> formats,
                       const LookupOptions& options = {});

// Accuracy drop between two top-1 accuracies given as fractions, clamped at 0.
double accuracy_loss_from_top1(double baseline, double quantized);

}  // namespace bfps
