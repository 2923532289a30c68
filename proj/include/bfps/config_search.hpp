#pragma once

// Search over BFP configurations for the objective
//
//     O = Acc_loss + alpha * Perf_loss,   Perf_loss = DM_sum / DM_max
//
// Every (layer, format choice) pair is costed once: the layer's best mapping
// under the capacity constraint and its accuracy loss. Candidates combine
// layer choices; DM_max and the accuracy normalizer are maxima over the
// feasible candidates of one search.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfps/accuracy_proxy.hpp"
#include "bfps/dm_model.hpp"
#include "bfps/mapping.hpp"
#include "bfps/model_ir.hpp"
#include "bfps/tiling_search.hpp"

namespace bfps {

enum class SearchMode : std::uint8_t {
  full,    // minimize O
  no_qat,  // minimize DM_sum, ignoring accuracy
  no_dm,   // minimize Acc_loss, ignoring data movement
  pareto,  // knee of the (Acc_loss, Perf_loss) frontier
};
enum class SearchScope : std::uint8_t {
  uniform,    // one choice for every layer
  per_layer,  // an independent choice per layer (joint enumeration)
};
enum class RoleBinding : std::uint8_t {
  shared,    // input, output and weight use the same (SE, BS)
  per_role,  // each role picks its own (SE, BS)
};
enum class LossSource : std::uint8_t { proxy, table };

std::string_view to_string(SearchMode v);
std::string_view to_string(SearchScope v);
std::string_view to_string(RoleBinding v);
std::string_view to_string(LossSource v);
SearchMode parse_search_mode(std::string_view text);
SearchScope parse_search_scope(std::string_view text);
RoleBinding parse_role_binding(std::string_view text);
LossSource parse_loss_source(std::string_view text);

struct FormatChoice {
  int exponent_bits = 3;
  int block_size = 8;

  friend bool operator==(const FormatChoice&, const FormatChoice&) = default;
};

// (SE, BS) of one layer, by operand.
struct LayerChoice {
  std::array<FormatChoice, 3> roles{};

  LayerFormats formats(int total_bits) const;
  friend bool operator==(const LayerChoice&, const LayerChoice&) = default;
};

std::vector<int> default_exponent_bits(int total_bits);
std::vector<int> default_block_sizes();

struct CandidateSpace {
  int total_bits = 8;
  std::vector<int> exponent_bits;
  std::vector<int> block_sizes;
  SearchScope scope = SearchScope::uniform;
  RoleBinding roles = RoleBinding::shared;

  static CandidateSpace defaults(int total_bits);

  // Throws on empty sets or formats the codec cannot represent.
  void validate() const;

  // (SE, BS) pairs in preference order: larger BS first, then smaller SE.
  std::vector<FormatChoice> formats() const;
  // Choices one layer can take, in preference order.
  std::vector<LayerChoice> layer_choices() const;
};

// Where accuracy losses come from. Proxy losses are normalized by their
// maximum over the candidate set; table losses are used as stored.
struct AccuracySource {
  LossSource kind = LossSource::proxy;
  std::vector<LayerSamples> samples;
  AccuracyTable table;
  CodecOptions codec;
  LookupOptions lookup;

  static AccuracySource proxy(std::vector<LayerSamples> samples,
                              CodecOptions codec = {});
  static AccuracySource from_table(AccuracyTable table, LookupOptions lookup = {});
};

struct SearchOptions {
  double alpha = 0.2;
  double capacity_bits = 262144.0;  // MC
  SearchMode mode = SearchMode::full;
  TilingOptions tiling;
  // Joint enumerations larger than this are refused.
  std::int64_t max_candidates = 1'000'000;
  // Candidate lists longer than this are not copied into plans.
  std::size_t max_recorded_candidates = 4096;
  unsigned jobs = 0;
};

// Scores of one candidate entering the selection.
struct CandidatePoint {
  bool feasible = false;
  double dm_sum = 0.0;
  double acc_raw = 0.0;
};

struct CandidateScore {
  double acc_loss = 0.0;
  double perf_loss = 0.0;
  double objective = 0.0;
};

struct Selection {
  std::size_t chosen = 0;
  double dm_max = 0.0;
  double acc_normalizer = 1.0;
  std::vector<CandidateScore> scores;  // by candidate; zero when infeasible
  std::vector<std::size_t> frontier;   // pareto mode: ascending Perf_loss
};

// Picks a candidate. Points are listed in preference order, so remaining
// ties go to the lower index after comparing DM_sum. Throws
// Error(infeasible) when no point is feasible.
Selection select_candidate(std::span<const CandidatePoint> points, double alpha,
                           SearchMode mode, bool normalize_acc);

// Non-dominated points in (Acc_loss, Perf_loss), ascending Perf_loss.
std::vector<std::size_t> pareto_frontier(std::span<const CandidateScore> scores,
                                         std::span<const CandidatePoint> points);

// Point of the frontier farthest from the chord between its endpoints; with
// two or fewer points, the one with the smallest Acc_loss + Perf_loss.
std::size_t knee_point(std::span<const CandidateScore> scores,
                       std::span<const std::size_t> frontier);

struct LayerPlan {
  std::int64_t index = 0;
  std::string name;
  std::optional<LayerFormats> formats;  // empty: unquantized float32
  Bitwidths bitwidths;
  Mapping mapping;
  DmBreakdown dm;
  TileFootprint footprint;
  SearchStrategy strategy = SearchStrategy::exhaustive;
  // The layer's own loss term before weighting; unknown when a table only
  // holds whole-model entries.
  std::optional<double> acc_raw;
};

struct CandidateSummary {
  std::size_t index = 0;
  std::string label;
  bool feasible = false;
  double dm_sum = 0.0;
  double acc_raw = 0.0;
  CandidateScore score;
};

struct QuantPlan {
  std::string model_name;
  int total_bits = 8;
  SearchMode mode = SearchMode::full;
  SearchScope scope = SearchScope::uniform;
  RoleBinding roles = RoleBinding::shared;
  LossSource loss_source = LossSource::proxy;
  bool decomposed = false;
  double alpha = 0.2;
  double capacity_bits = 0.0;

  std::vector<LayerPlan> layers;
  std::string label;
  double acc_raw = 0.0;
  double acc_normalizer = 1.0;
  double acc_loss = 0.0;
  double perf_loss = 0.0;
  double objective = 0.0;
  double dm_sum = 0.0;
  double dm_max = 0.0;

  std::int64_t candidate_count = 0;
  std::int64_t feasible_count = 0;
  std::vector<CandidateSummary> candidates;  // empty when too many
  std::vector<CandidateSummary> frontier;    // pareto mode
};

// Evaluates a model once over a candidate space; plans for any alpha and
// mode are then selections over the same evaluations.
class SearchSession {
 public:
  SearchSession(const ModelDesc& model, const CandidateSpace& space,
                const AccuracySource& source, const SearchOptions& options);
  ~SearchSession();
  SearchSession(SearchSession&&) noexcept;
  SearchSession& operator=(SearchSession&&) noexcept;

  const ModelDesc& model() const;
  const CandidateSpace& space() const;
  const std::vector<LayerChoice>& layer_choices() const;

  // Joint candidates in preference order. Empty when the joint space
  // exceeds max_candidates.
  std::span<const CandidatePoint> points() const;
  std::int64_t candidate_count() const;
  std::string candidate_label(std::size_t index) const;
  // Layer choice indices of a candidate.
  std::vector<std::size_t> candidate_choices(std::size_t index) const;

  QuantPlan plan(double alpha, SearchMode mode) const;

  // Per-layer independent minimization of the layer-separable objective
  //   sum_l  w_l * acc_l / A  +  alpha * DM_l / D
  // with A and D the sums of per-layer maxima. These equal the normalizers
  // of the per-layer joint space, so the result is that space's optimum.
  // Pareto mode is not supported.
  QuantPlan decomposed_plan(double alpha, SearchMode mode) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

QuantPlan search(const ModelDesc& model, const CandidateSpace& space,
                 const AccuracySource& source, const SearchOptions& options);

QuantPlan decompose_search(const ModelDesc& model, const CandidateSpace& space,
                           const AccuracySource& source,
                           const SearchOptions& options);

// Costs fixed formats and mappings without searching.
LayerPlan cost_layer(const ConvLayer& layer, const std::optional<LayerFormats>& formats,
                     const Mapping& mapping, const DmOptions& dm = {});

// The unquantized float32 reference: every operand at 32 bits, mapped by the
// same tiling optimizer. Throws Error(infeasible) if a layer cannot fit.
QuantPlan original_plan(const ModelDesc& model, double capacity_bits,
                        const TilingOptions& tiling = {});

}  // namespace bfps
