#include "bfps/config_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "bfps/error.hpp"
#include "bfps/parallel.hpp"

namespace bfps {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values,
                std::string_view what) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  std::string names;
  for (auto v : values) names += (names.empty() ? "" : ", ") + std::string(to_string(v));
  fail("unknown " + std::string(what) + " '" + std::string(text) + "' (expected " +
       names + ")");
}

std::string choice_label(const LayerChoice& c, RoleBinding roles) {
  auto one = [](const FormatChoice& f) {
    return std::to_string(f.exponent_bits) + "/" + std::to_string(f.block_size);
  };
  if (roles == RoleBinding::shared) {
    return "SE=" + std::to_string(c.roles[0].exponent_bits) +
           " BS=" + std::to_string(c.roles[0].block_size);
  }
  return "in=" + one(c.roles[0]) + " out=" + one(c.roles[1]) + " w=" + one(c.roles[2]);
}

}  // namespace

std::string_view to_string(SearchMode v) {
  switch (v) {
    case SearchMode::full:
      return "full";
    case SearchMode::no_qat:
      return "no_qat";
    case SearchMode::no_dm:
      return "no_dm";
    case SearchMode::pareto:
      return "pareto";
  }
  return "?";
}

std::string_view to_string(SearchScope v) {
  return v == SearchScope::uniform ? "uniform" : "per_layer";
}

std::string_view to_string(RoleBinding v) {
  return v == RoleBinding::shared ? "shared" : "per_role";
}

std::string_view to_string(LossSource v) {
  return v == LossSource::proxy ? "proxy" : "table";
}

SearchMode parse_search_mode(std::string_view text) {
  return parse_enum(text,
                    std::array{SearchMode::full, SearchMode::no_qat, SearchMode::no_dm,
                               SearchMode::pareto},
                    "search mode");
}

SearchScope parse_search_scope(std::string_view text) {
  return parse_enum(text, std::array{SearchScope::uniform, SearchScope::per_layer},
                    "search scope");
}

RoleBinding parse_role_binding(std::string_view text) {
  return parse_enum(text, std::array{RoleBinding::shared, RoleBinding::per_role},
                    "role binding");
}

LossSource parse_loss_source(std::string_view text) {
  return parse_enum(text, std::array{LossSource::proxy, LossSource::table},
                    "loss source");
}

LayerFormats LayerChoice::formats(int total_bits) const {
  LayerFormats f;
  f.input = {total_bits, roles[0].exponent_bits, roles[0].block_size, TensorRole::input};
  f.output = {total_bits, roles[1].exponent_bits, roles[1].block_size, TensorRole::output};
  f.weight = {total_bits, roles[2].exponent_bits, roles[2].block_size, TensorRole::weight};
  return f;
}

std::vector<int> default_exponent_bits(int total_bits) {
  if (total_bits == 16) return {2, 3, 4, 5, 6, 7};
  if (total_bits == 8) return {2, 3, 4, 5, 6};
  fail("no default SE set for q_b=" + std::to_string(total_bits) +
       "; pass the SE set explicitly");
}

std::vector<int> default_block_sizes() { return {1, 2, 4, 8, 16, 24, 32, 48}; }

CandidateSpace CandidateSpace::defaults(int total_bits) {
  CandidateSpace s;
  s.total_bits = total_bits;
  s.exponent_bits = default_exponent_bits(total_bits);
  s.block_sizes = default_block_sizes();
  return s;
}

void CandidateSpace::validate() const {
  if (exponent_bits.empty()) fail("SE candidate set is empty");
  if (block_sizes.empty()) fail("BS candidate set is empty");
  for (int se : exponent_bits) {
    for (int bs : block_sizes) BfpSpec{total_bits, se, bs, TensorRole::input}.validate();
  }
}

std::vector<FormatChoice> CandidateSpace::formats() const {
  auto se = exponent_bits;
  auto bs = block_sizes;
  std::sort(se.begin(), se.end());
  se.erase(std::unique(se.begin(), se.end()), se.end());
  std::sort(bs.begin(), bs.end(), std::greater<>());
  bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
  std::vector<FormatChoice> out;
  for (int b : bs) {
    for (int e : se) out.push_back({e, b});
  }
  return out;
}

std::vector<LayerChoice> CandidateSpace::layer_choices() const {
  const auto f = formats();
  std::vector<LayerChoice> out;
  if (roles == RoleBinding::shared) {
    for (const auto& x : f) out.push_back({{x, x, x}});
    return out;
  }
  for (const auto& i : f) {
    for (const auto& o : f) {
      for (const auto& w : f) out.push_back({{i, o, w}});
    }
  }
  return out;
}

AccuracySource AccuracySource::proxy(std::vector<LayerSamples> samples,
                                     CodecOptions codec) {
  AccuracySource s;
  s.kind = LossSource::proxy;
  s.samples = std::move(samples);
  s.codec = codec;
  return s;
}

AccuracySource AccuracySource::from_table(AccuracyTable table, LookupOptions lookup) {
  AccuracySource s;
  s.kind = LossSource::table;
  s.table = std::move(table);
  s.lookup = lookup;
  return s;
}

std::vector<std::size_t> pareto_frontier(std::span<const CandidateScore> scores,
                                         std::span<const CandidatePoint> points) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].feasible) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].perf_loss != scores[b].perf_loss) {
      return scores[a].perf_loss < scores[b].perf_loss;
    }
    return scores[a].acc_loss < scores[b].acc_loss;
  });
  std::vector<std::size_t> frontier;
  double best_acc = std::numeric_limits<double>::infinity();
  for (auto i : order) {
    if (scores[i].acc_loss < best_acc) {
      frontier.push_back(i);
      best_acc = scores[i].acc_loss;
    }
  }
  return frontier;
}

std::size_t knee_point(std::span<const CandidateScore> scores,
                       std::span<const std::size_t> frontier) {
  if (frontier.empty()) fail("knee point of an empty frontier");
  if (frontier.size() <= 2) {
    std::size_t best = frontier.front();
    for (auto i : frontier) {
      const auto s = scores[i].acc_loss + scores[i].perf_loss;
      if (s < scores[best].acc_loss + scores[best].perf_loss) best = i;
    }
    return best;
  }
  const auto& a = scores[frontier.front()];
  const auto& b = scores[frontier.back()];
  const double dx = b.perf_loss - a.perf_loss;
  const double dy = b.acc_loss - a.acc_loss;
  const double len = std::hypot(dx, dy);
  std::size_t best = frontier.front();
  double best_dist = -1.0;
  for (auto i : frontier) {
    const double px = scores[i].perf_loss - a.perf_loss;
    const double py = scores[i].acc_loss - a.acc_loss;
    const double dist = len > 0.0 ? std::abs(dx * py - dy * px) / len : 0.0;
    if (dist > best_dist) {
      best = i;
      best_dist = dist;
    }
  }
  return best;
}

Selection select_candidate(std::span<const CandidatePoint> points, double alpha,
                           SearchMode mode, bool normalize_acc) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite value >= 0");
  if (points.empty()) fail("candidate space is empty");
  Selection sel;
  bool any = false;
  double acc_max = 0.0;
  for (const auto& p : points) {
    if (!p.feasible) continue;
    any = true;
    sel.dm_max = std::max(sel.dm_max, p.dm_sum);
    acc_max = std::max(acc_max, p.acc_raw);
  }
  if (!any) fail_infeasible("no candidate configuration fits the memory capacity");
  sel.acc_normalizer = normalize_acc && acc_max > 0.0 ? acc_max : 1.0;

  sel.scores.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].feasible) continue;
    auto& s = sel.scores[i];
    s.acc_loss = points[i].acc_raw / sel.acc_normalizer;
    s.perf_loss = perf_loss(points[i].dm_sum, sel.dm_max);
    s.objective = s.acc_loss + alpha * s.perf_loss;
  }

  if (mode == SearchMode::pareto) {
    sel.frontier = pareto_frontier(sel.scores, points);
    sel.chosen = knee_point(sel.scores, sel.frontier);
    return sel;
  }

  auto key = [&](std::size_t i) -> std::array<double, 2> {
    const auto& s = sel.scores[i];
    switch (mode) {
      case SearchMode::full:
        return {s.objective, points[i].dm_sum};
      case SearchMode::no_qat:
        return {points[i].dm_sum, points[i].dm_sum};
      case SearchMode::no_dm:
        return {s.acc_loss, points[i].dm_sum};
      case SearchMode::pareto:
        break;
    }
    return {};
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].feasible) continue;
    if (!best || key(i) < key(*best)) best = i;
  }
  sel.chosen = *best;
  return sel;
}

LayerPlan cost_layer(const ConvLayer& layer, const std::optional<LayerFormats>& formats,
                     const Mapping& mapping, const DmOptions& dm) {
  LayerPlan p;
  p.index = layer.index;
  p.name = layer.name;
  p.formats = formats;
  p.bitwidths = formats ? effective_bitwidths(*formats, layer) : kFloat32Bitwidths;
  p.mapping = mapping;
  p.dm = dm_layer(layer, mapping, p.bitwidths, dm);
  p.footprint = tile_footprint(layer, mapping, p.bitwidths);
  return p;
}

QuantPlan original_plan(const ModelDesc& model, double capacity_bits,
                        const TilingOptions& tiling) {
  QuantPlan plan;
  plan.model_name = model.name;
  plan.total_bits = 32;
  plan.capacity_bits = capacity_bits;
  plan.label = "float32";
  plan.candidate_count = 1;
  plan.feasible_count = 1;
  for (const auto& layer : model.layers) {
    const auto r = optimize_layer(layer, kFloat32Bitwidths, capacity_bits, tiling);
    if (!r.feasible) {
      fail_infeasible("layer '" + layer.name +
                      "' does not fit the memory capacity at 32 bits");
    }
    auto lp = cost_layer(layer, std::nullopt, r.mapping, tiling.dm);
    lp.strategy = r.strategy;
    lp.acc_raw = 0.0;
    plan.dm_sum += lp.dm.total_bits;
    plan.layers.push_back(std::move(lp));
  }
  plan.dm_max = plan.dm_sum;
  plan.perf_loss = plan.dm_sum > 0.0 ? 1.0 : 0.0;
  plan.objective = plan.alpha * plan.perf_loss;
  return plan;
}

struct SearchSession::Impl {
  struct LayerEval {
    bool feasible = false;
    Mapping mapping;
    double dm_bits = 0.0;
    SearchStrategy strategy = SearchStrategy::exhaustive;
    std::optional<double> acc;
  };

  ModelDesc model;
  CandidateSpace space;
  LossSource loss_source = LossSource::proxy;
  LookupOptions lookup;
  AccuracyTable table;
  SearchOptions options;
  std::vector<LayerChoice> choices;
  std::vector<double> weights;
  std::vector<std::vector<LayerEval>> evals;  // [layer][choice]
  // Joint points are enumerated on first use; the decomposition never
  // needs them.
  mutable std::once_flag points_once;
  mutable std::vector<CandidatePoint> points;
  std::int64_t count = 0;

  std::size_t layer_count() const { return model.layers.size(); }

  std::vector<std::size_t> digits(std::size_t index) const {
    std::vector<std::size_t> d(layer_count(), index);
    if (space.scope == SearchScope::uniform) return d;
    const auto c = choices.size();
    for (std::size_t l = layer_count(); l-- > 0;) {
      d[l] = index % c;
      index /= c;
    }
    return d;
  }

  std::vector<LayerFormats> formats_of(const std::vector<std::size_t>& d) const {
    std::vector<LayerFormats> f;
    for (auto c : d) f.push_back(choices[c].formats(space.total_bits));
    return f;
  }

  std::string label(const std::vector<std::size_t>& d) const {
    if (space.scope == SearchScope::uniform) return choice_label(choices[d[0]], space.roles);
    std::string out;
    for (std::size_t l = 0; l < d.size(); ++l) {
      out += (l ? "; L" : "L") + std::to_string(l) + " " +
             choice_label(choices[d[l]], space.roles);
    }
    return out;
  }

  double table_acc(const std::vector<std::size_t>& d) const {
    const bool uniform =
        std::all_of(d.begin(), d.end(), [&](std::size_t c) { return c == d[0]; });
    if (uniform || !lookup.compose) {
      return lookup_acc_loss(table, model, formats_of(d), lookup);
    }
    double sum = 0.0;
    for (std::size_t l = 0; l < d.size(); ++l) {
      const auto& a = evals[l][d[l]].acc;
      if (!a) return lookup_acc_loss(table, model, formats_of(d), lookup);  // throws
      sum += *a;
    }
    return sum;
  }

  CandidatePoint point(const std::vector<std::size_t>& d) const {
    CandidatePoint p;
    p.feasible = true;
    for (std::size_t l = 0; l < d.size(); ++l) {
      const auto& e = evals[l][d[l]];
      if (!e.feasible) {
        p.feasible = false;
        return p;
      }
      p.dm_sum += e.dm_bits;
    }
    if (loss_source == LossSource::proxy) {
      for (std::size_t l = 0; l < d.size(); ++l) p.acc_raw += weights[l] * *evals[l][d[l]].acc;
    } else {
      p.acc_raw = table_acc(d);
    }
    return p;
  }

  void evaluate(const AccuracySource& src) {
    const auto formats = space.formats();
    const auto nf = formats.size();
    auto format_index = [&](const FormatChoice& f) {
      return static_cast<std::size_t>(
          std::find(formats.begin(), formats.end(), f) - formats.begin());
    };

    // Proxy loss per (layer, role, format).
    std::vector<double> role_loss;
    if (loss_source == LossSource::proxy) {
      if (src.samples.size() != layer_count()) {
        fail("proxy loss needs samples for every layer");
      }
      role_loss.resize(layer_count() * 3 * nf);
      parallel_for(role_loss.size(), options.jobs, [&](std::size_t i) {
        const auto f = i % nf;
        const auto r = (i / nf) % 3;
        const auto l = i / (3 * nf);
        const BfpSpec spec{space.total_bits, formats[f].exponent_bits,
                           formats[f].block_size, static_cast<TensorRole>(r)};
        role_loss[i] = role_proxy_loss(src.samples[l].tensors[r], spec, src.codec);
      });
    }

    auto tiling = options.tiling;
    tiling.jobs = options.jobs;
    evals.resize(layer_count());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const auto& layer = model.layers[l];
      const LayerSearchSpace lss(layer, tiling);
      auto& row = evals[l];
      row.resize(choices.size());
      parallel_for(choices.size(), options.jobs, [&](std::size_t c) {
        const auto f = choices[c].formats(space.total_bits);
        const auto r = lss.best(effective_bitwidths(f, layer), options.capacity_bits);
        auto& e = row[c];
        e.feasible = r.feasible;
        e.mapping = r.mapping;
        e.dm_bits = r.dm.total_bits;
        e.strategy = r.strategy;
        if (loss_source == LossSource::proxy) {
          double loss = 0.0;
          for (std::size_t role = 0; role < 3; ++role) {
            loss += role_loss[(l * 3 + role) * nf + format_index(choices[c].roles[role])];
          }
          e.acc = loss;
        } else {
          e.acc = table.layer_loss(static_cast<int>(l), f);
        }
      });
    }
  }

  void count_candidates() {
    const auto c = static_cast<std::int64_t>(choices.size());
    if (space.scope == SearchScope::uniform) {
      count = c;
    } else {
      count = 1;
      for (std::size_t l = 0; l < layer_count(); ++l) {
        if (count > std::numeric_limits<std::int64_t>::max() / c) {
          count = std::numeric_limits<std::int64_t>::max();
          break;
        }
        count *= c;
      }
    }
  }

  const std::vector<CandidatePoint>& joint_points() const {
    std::call_once(points_once, [&] {
      if (count > options.max_candidates) return;
      std::vector<CandidatePoint> out(static_cast<std::size_t>(count));
      parallel_for(out.size(), options.jobs,
                   [&](std::size_t i) { out[i] = point(digits(i)); });
      points = std::move(out);
    });
    return points;
  }

  QuantPlan make_plan(const std::vector<std::size_t>& d, double alpha,
                      SearchMode mode) const {
    QuantPlan plan;
    plan.model_name = model.name;
    plan.total_bits = space.total_bits;
    plan.mode = mode;
    plan.scope = space.scope;
    plan.roles = space.roles;
    plan.loss_source = loss_source;
    plan.alpha = alpha;
    plan.capacity_bits = options.capacity_bits;
    plan.candidate_count = count;
    plan.label = label(d);
    for (std::size_t l = 0; l < d.size(); ++l) {
      const auto& e = evals[l][d[l]];
      auto lp = cost_layer(model.layers[l], choices[d[l]].formats(space.total_bits),
                           e.mapping, options.tiling.dm);
      lp.strategy = e.strategy;
      lp.acc_raw = e.acc;
      plan.dm_sum += lp.dm.total_bits;
      plan.layers.push_back(std::move(lp));
    }
    return plan;
  }
};

SearchSession::SearchSession(const ModelDesc& model, const CandidateSpace& space,
                             const AccuracySource& source, const SearchOptions& options)
    : impl_(std::make_unique<Impl>()) {
  if (model.layers.empty()) fail("model has no layers");
  space.validate();
  if (!(options.capacity_bits > 0.0)) fail("memory capacity must be positive");
  auto& s = *impl_;
  s.model = model;
  s.space = space;
  s.options = options;
  s.loss_source = source.kind;
  s.lookup = source.lookup;
  if (source.kind == LossSource::table) {
    if (source.table.empty() && !source.lookup.compose) {
      fail("accuracy table is empty");
    }
    s.table = source.table;
  }
  s.choices = space.layer_choices();
  s.weights = layer_loss_weights(model);
  s.evaluate(source);
  s.count_candidates();
}

SearchSession::~SearchSession() = default;
SearchSession::SearchSession(SearchSession&&) noexcept = default;
SearchSession& SearchSession::operator=(SearchSession&&) noexcept = default;

const ModelDesc& SearchSession::model() const { return impl_->model; }
const CandidateSpace& SearchSession::space() const { return impl_->space; }
const std::vector<LayerChoice>& SearchSession::layer_choices() const {
  return impl_->choices;
}
std::span<const CandidatePoint> SearchSession::points() const {
  return impl_->joint_points();
}
std::int64_t SearchSession::candidate_count() const { return impl_->count; }
std::string SearchSession::candidate_label(std::size_t index) const {
  return impl_->label(impl_->digits(index));
}
std::vector<std::size_t> SearchSession::candidate_choices(std::size_t index) const {
  return impl_->digits(index);
}

QuantPlan SearchSession::plan(double alpha, SearchMode mode) const {
  const auto& s = *impl_;
  const auto& points = s.joint_points();
  if (points.empty()) {
    fail("joint search space has " + std::to_string(s.count) +
         " candidates, above the limit of " + std::to_string(s.options.max_candidates) +
         "; use the per-layer decomposition or uniform scope");
  }
  const auto sel =
      select_candidate(points, alpha, mode, s.loss_source == LossSource::proxy);
  auto plan = s.make_plan(s.digits(sel.chosen), alpha, mode);
  const auto& p = points[sel.chosen];
  const auto& score = sel.scores[sel.chosen];
  plan.acc_raw = p.acc_raw;
  plan.acc_normalizer = sel.acc_normalizer;
  plan.acc_loss = score.acc_loss;
  plan.perf_loss = score.perf_loss;
  plan.objective = score.objective;
  plan.dm_max = sel.dm_max;
  plan.dm_sum = p.dm_sum;
  plan.feasible_count = std::count_if(points.begin(), points.end(),
                                      [](const CandidatePoint& c) { return c.feasible; });

  auto summary = [&](std::size_t i) {
    CandidateSummary c;
    c.index = i;
    c.label = s.label(s.digits(i));
    c.feasible = points[i].feasible;
    c.dm_sum = points[i].dm_sum;
    c.acc_raw = points[i].acc_raw;
    c.score = sel.scores[i];
    return c;
  };
  if (points.size() <= s.options.max_recorded_candidates) {
    for (std::size_t i = 0; i < points.size(); ++i) plan.candidates.push_back(summary(i));
  }
  for (auto i : sel.frontier) plan.frontier.push_back(summary(i));
  return plan;
}

QuantPlan SearchSession::decomposed_plan(double alpha, SearchMode mode) const {
  const auto& s = *impl_;
  if (mode == SearchMode::pareto) {
    fail("pareto mode needs the joint candidate set; it has no per-layer decomposition");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite value >= 0");
  const bool proxy = s.loss_source == LossSource::proxy;
  const auto L = s.layer_count();
  std::vector<double> w = proxy ? s.weights : std::vector<double>(L, 1.0);

  double dm_norm = 0.0;
  double acc_norm = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    double dm_max = -1.0;
    double acc_max = 0.0;
    for (std::size_t c = 0; c < s.choices.size(); ++c) {
      const auto& e = s.evals[l][c];
      if (!e.feasible) continue;
      if (!e.acc) {
        fail("accuracy table has no per-layer entry for layer " + std::to_string(l) +
             " under " + choice_label(s.choices[c], s.space.roles) +
             "; the decomposition needs per-layer losses, use whole-model search");
      }
      dm_max = std::max(dm_max, e.dm_bits);
      acc_max = std::max(acc_max, w[l] * *e.acc);
    }
    if (dm_max < 0.0) {
      fail_infeasible("layer '" + s.model.layers[l].name +
                      "' fits the memory capacity under no candidate format");
    }
    dm_norm += dm_max;
    acc_norm += acc_max;
  }
  if (!proxy || acc_norm <= 0.0) acc_norm = 1.0;

  std::vector<std::size_t> d(L);
  for (std::size_t l = 0; l < L; ++l) {
    std::optional<std::size_t> best;
    std::array<double, 2> best_key{};
    for (std::size_t c = 0; c < s.choices.size(); ++c) {
      const auto& e = s.evals[l][c];
      if (!e.feasible) continue;
      const double acc = w[l] * *e.acc / acc_norm;
      const double perf = e.dm_bits / dm_norm;
      std::array<double, 2> key{};
      switch (mode) {
        case SearchMode::full:
          key = {acc + alpha * perf, e.dm_bits};
          break;
        case SearchMode::no_qat:
          key = {e.dm_bits, e.dm_bits};
          break;
        default:
          key = {acc, e.dm_bits};
          break;
      }
      if (!best || key < best_key) {
        best = c;
        best_key = key;
      }
    }
    d[l] = *best;
  }

  auto plan = s.make_plan(d, alpha, mode);
  plan.decomposed = true;
  plan.scope = SearchScope::per_layer;
  for (std::size_t l = 0; l < L; ++l) plan.acc_raw += w[l] * *s.evals[l][d[l]].acc;
  plan.acc_normalizer = acc_norm;
  plan.acc_loss = plan.acc_raw / acc_norm;
  plan.dm_max = dm_norm;
  plan.perf_loss = perf_loss(plan.dm_sum, dm_norm);
  plan.objective = plan.acc_loss + alpha * plan.perf_loss;
  plan.label = [&] {
    std::string out;
    for (std::size_t l = 0; l < L; ++l) {
      out += (l ? "; L" : "L") + std::to_string(l) + " " +
             choice_label(s.choices[d[l]], s.space.roles);
    }
    return out;
  }();
  auto saturating_product = [&](auto per_layer) {
    std::int64_t n = 1;
    for (std::size_t l = 0; l < L; ++l) {
      const std::int64_t c = per_layer(l);
      if (c == 0) return std::int64_t{0};
      n = n > std::numeric_limits<std::int64_t>::max() / c
              ? std::numeric_limits<std::int64_t>::max()
              : n * c;
    }
    return n;
  };
  plan.candidate_count = saturating_product(
      [&](std::size_t) { return static_cast<std::int64_t>(s.choices.size()); });
  plan.feasible_count = saturating_product([&](std::size_t l) {
    return static_cast<std::int64_t>(std::count_if(
        s.evals[l].begin(), s.evals[l].end(), [](const auto& e) { return e.feasible; }));
  });
  return plan;
}

QuantPlan search(const ModelDesc& model, const CandidateSpace& space,
                 const AccuracySource& source, const SearchOptions& options) {
  return SearchSession(model, space, source, options).plan(options.alpha, options.mode);
}

QuantPlan decompose_search(const ModelDesc& model, const CandidateSpace& space,
                           const AccuracySource& source,
                           const SearchOptions& options) {
  return SearchSession(model, space, source, options)
      .decomposed_plan(options.alpha, options.mode);
}

}  // namespace bfps
