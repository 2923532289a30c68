#pragma once

// Everything one invocation needs, with a lossless JSON form.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bfps/accuracy_proxy.hpp"
#include "bfps/config_search.hpp"
#include "bfps/dm_model.hpp"
#include "bfps/energy_model.hpp"

namespace bfps {

inline constexpr int kRunConfigVersion = 1;

// Trade-off weights of the default alpha sweep.
inline const std::vector<double> kDefaultSweepAlphas = {0.015, 0.05, 0.15, 0.2,
                                                        0.25,  1.5,  3.0};

struct RunConfig {
  std::string model_path;
  int total_bits = 8;                 // q_b
  double alpha = 0.2;
  double capacity_bits = 262144.0;    // MC
  std::vector<int> exponent_bits;     // empty: defaults for total_bits
  std::vector<int> block_sizes;       // empty: defaults
  SearchScope scope = SearchScope::uniform;
  RoleBinding roles = RoleBinding::shared;
  SearchMode mode = SearchMode::full;
  bool decompose = false;             // per-layer decomposition instead of joint

  LossSource loss_source = LossSource::proxy;
  std::string table_path;             // loss_source == table
  bool compose_table = true;
  bool synthetic_fallback = true;
  std::uint64_t seed = kSyntheticSampleSeed;
  std::optional<int> exponent_bias;   // clamp shared exponents to the SE window

  bool count_first_load = true;
  LevelSum level_sum = LevelSum::all_levels;
  bool tile_kernel = false;
  std::int64_t full_enumeration_limit = 8192;
  std::int64_t exhaustive_limit = 100000;
  std::int64_t max_candidates = 1'000'000;

  EnergyParams energy;
  bool energy_baseline = true;        // also cost the float32 reference

  std::string output_dir = "bfps-out";
  bool write_csv = true;
  unsigned jobs = 0;                  // 0: one per hardware thread
  std::vector<double> sweep_alphas = kDefaultSweepAlphas;

  // Throws on values no search can use.
  void validate() const;

  CandidateSpace candidate_space() const;
  SearchOptions search_options() const;
  SampleOptions sample_options() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::string_view to_string(LevelSum v);
LevelSum parse_level_sum(std::string_view text);

// Pretty-printed JSON with every field, keys sorted.
std::string dump_config(const RunConfig& config);
// Missing keys keep their defaults; unknown keys are errors.
RunConfig parse_config(std::string_view text, std::string_view source_name);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace bfps
