#include "bfps/tiling_search.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "bfps/error.hpp"
#include "bfps/parallel.hpp"
#include "conv_geometry.hpp"

namespace bfps {

std::string_view to_string(SearchStrategy strategy) {
  switch (strategy) {
    case SearchStrategy::full:
      return "full";
    case SearchStrategy::exhaustive:
      return "exhaustive";
    case SearchStrategy::coordinate_descent:
      return "coordinate_descent";
  }
  return "?";
}

std::vector<LoopOrder> default_loop_orders() {
  std::array<LoopDim, 4> outer = {LoopDim::out_channel, LoopDim::in_channel,
                                  LoopDim::out_height, LoopDim::out_width};
  std::vector<LoopOrder> orders;
  do {
    orders.push_back({outer[0], outer[1], outer[2], outer[3], LoopDim::kernel_h,
                      LoopDim::kernel_w});
  } while (std::next_permutation(outer.begin(), outer.end()));
  return orders;
}

std::vector<LoopOrder> dedupe_orders(const ConvLayer& layer,
                                     std::vector<LoopOrder> orders) {
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  std::vector<LoopOrder> kept;
  std::vector<std::vector<LoopDim>> keys;
  for (const auto& order : orders) {
    std::vector<LoopDim> key;
    for (auto d : order) {
      if (loop_extent(layer, d) > 1) key.push_back(d);
    }
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(std::move(key));
      kept.push_back(order);
    }
  }
  return kept;
}

std::vector<std::int64_t> tile_candidates(std::int64_t extent,
                                          bool every_integer) {
  std::vector<std::int64_t> out;
  if (every_integer) {
    for (std::int64_t t = 1; t <= extent; ++t) out.push_back(t);
    return out;
  }
  for (std::int64_t d = 1; d * d <= extent; ++d) {
    if (extent % d == 0) {
      out.push_back(d);
      out.push_back(extent / d);
    }
  }
  for (std::int64_t k = 1; k <= 8; ++k) out.push_back((extent + k - 1) / k);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool mapping_preferred(double dm_a, const Mapping& a, double dm_b,
                       const Mapping& b) {
  if (dm_a != dm_b) return dm_a < dm_b;
  std::int64_t vol_a = 1, vol_b = 1;
  for (std::size_t i = 0; i < kLoopDimCount; ++i) {
    vol_a *= a.tiles[i];
    vol_b *= b.tiles[i];
  }
  if (vol_a != vol_b) return vol_a > vol_b;
  if (a.tiles != b.tiles) return a.tiles > b.tiles;
  return a.order < b.order;
}

namespace {

using Elements = std::array<std::int64_t, 3>;
using CandidateIndex = std::array<std::uint16_t, kLoopDimCount>;

// Per-loop-tile sums of one footprint axis (kernel loops untiled).
struct AxisStats {
  std::int64_t outer = 0;  // sum over all tiles of |tile|
  std::int64_t step_fresh = 0;
  std::int64_t step_overlap = 0;
  std::int64_t inner_fresh = 0;
  std::int64_t inner_overlap = 0;
  std::int64_t first = 0;

  std::int64_t fresh(int role) const {
    return role == 0 ? outer : role == 1 ? step_fresh : inner_fresh;
  }
  std::int64_t overlap(int role) const {
    return role == 0 ? outer : role == 1 ? step_overlap : inner_overlap;
  }
};

AxisStats axis_stats(const detail::FootprintAxis& axis, std::int64_t iterations) {
  AxisStats s;
  for (std::int64_t i = 0; i < iterations; ++i) s.outer += axis.interval(i, 0).length();
  for (std::int64_t t = 0; t + 1 < iterations; ++t) {
    const auto fresh = axis.interval(t + 1, 0);
    s.step_fresh += fresh.length();
    s.step_overlap += detail::intersect(fresh, axis.interval(t, 0)).length();
  }
  const auto first = axis.interval(0, 0);
  const auto last = axis.interval(iterations - 1, 0);
  s.first = first.length();
  s.inner_fresh = first.length();
  s.inner_overlap = detail::intersect(first, last).length();
  return s;
}

// Closed-form transfers for mappings whose kernel loops are untiled; agrees
// with detail::operand_transfers on those mappings.
class FastEvaluator {
 public:
  FastEvaluator(const ConvLayer& layer,
                const std::array<std::vector<std::int64_t>, kLoopDimCount>& cands,
                bool count_first_load)
      : layer_(layer), count_first_load_(count_first_load) {
    for (auto d : {LoopDim::out_channel, LoopDim::in_channel, LoopDim::out_height,
                   LoopDim::out_width}) {
      const auto i = index_of(d);
      for (auto t : cands[i]) {
        Mapping m = whole_layer_mapping(layer);
        m.tile(d) = t;
        const auto it = iteration_count(layer, m, d);
        detail::FootprintAxis direct;
        direct.primary = d;
        direct.primary_tile = t;
        direct.primary_extent = loop_extent(layer, d);
        direct_[i].push_back(axis_stats(direct, it));
        iterations_[i].push_back(it);
        if (d == LoopDim::out_height || d == LoopDim::out_width) {
          const bool h = d == LoopDim::out_height;
          const auto axes = detail::footprint_axes(Operand::input, layer, m);
          window_[i].push_back(axis_stats(axes[h ? 1 : 2], it));
        }
      }
    }
    kernel_area_ = layer.kernel_h * layer.kernel_w;
  }

  Elements transfers(const LoopOrder& order, const CandidateIndex& idx) const {
    std::array<int, kLoopDimCount> pos{};
    for (std::size_t p = 0; p < kLoopDimCount; ++p) pos[index_of(order[p])] = static_cast<int>(p);
    auto it = [&](LoopDim d) -> std::int64_t {
      if (d == LoopDim::kernel_h || d == LoopDim::kernel_w) return 1;
      return iterations_[index_of(d)][idx[index_of(d)]];
    };

    struct Axis {
      LoopDim dim;
      const AxisStats* stats;
    };
    auto direct = [&](LoopDim d) {
      return Axis{d, &direct_[index_of(d)][idx[index_of(d)]]};
    };
    auto window = [&](LoopDim d) {
      return Axis{d, &window_[index_of(d)][idx[index_of(d)]]};
    };
    const std::array<std::array<Axis, 3>, 3> axes = {{
        {direct(LoopDim::in_channel), window(LoopDim::out_height),
         window(LoopDim::out_width)},
        {direct(LoopDim::out_channel), direct(LoopDim::out_height),
         direct(LoopDim::out_width)},
        {direct(LoopDim::out_channel), direct(LoopDim::in_channel),
         Axis{LoopDim::kernel_h, nullptr}},
    }};

    Elements out{};
    for (auto op : kAllOperands) {
      const auto& ax = axes[index_of(op)];
      const std::int64_t constant = op == Operand::weight ? kernel_area_ : 1;
      std::int64_t first = constant;
      for (const auto& a : ax) {
        if (a.stats) first *= a.stats->first;
      }
      std::int64_t moved = 0;
      bool any = false;
      for (int j = 0; j < static_cast<int>(kLoopDimCount); ++j) {
        const auto dj = order[static_cast<std::size_t>(j)];
        const auto it_j = it(dj);
        if (it_j <= 1) continue;
        std::int64_t mult = 1;
        for (int k = 0; k < j; ++k) {
          const auto dk = order[static_cast<std::size_t>(k)];
          if (!depends_on(op, dk)) mult *= it(dk);
        }
        if (!depends_on(op, dj)) mult *= it_j - 1;
        std::int64_t pf = constant, po = constant;
        for (const auto& a : ax) {
          if (!a.stats) continue;
          const int p = pos[index_of(a.dim)];
          const int role = p < j ? 0 : p == j ? 1 : 2;
          pf *= a.stats->fresh(role);
          po *= a.stats->overlap(role);
        }
        const auto d = mult * (pf - po);
        moved += d;
        any = any || d != 0;
      }
      out[index_of(op)] = (!count_first_load_ && !any) ? 0 : first + moved;
    }
    return out;
  }

 private:
  ConvLayer layer_;
  bool count_first_load_;
  std::int64_t kernel_area_ = 1;
  std::array<std::vector<AxisStats>, kLoopDimCount> direct_;
  std::array<std::vector<AxisStats>, kLoopDimCount> window_;
  std::array<std::vector<std::int64_t>, kLoopDimCount> iterations_;
};

struct CostEntry {
  std::uint32_t tiling = 0;
  std::uint8_t order = 0;
  Elements elements{};
};

bool dominates(const Elements& a, const Elements& b) {
  return a[0] <= b[0] && a[1] <= b[1] && a[2] <= b[2];
}

double weighted(const Elements& e, const Bitwidths& q) {
  return total_bits({operand_bits(e[0], q.input), operand_bits(e[1], q.output),
                     operand_bits(e[2], q.weight)});
}

}  // namespace

struct LayerSearchSpace::Impl {
  ConvLayer layer;
  TilingOptions options;
  std::vector<LoopOrder> orders;
  std::array<std::vector<std::int64_t>, kLoopDimCount> candidates;
  SearchStrategy strategy = SearchStrategy::exhaustive;
  std::int64_t tilings = 1;
  std::optional<FastEvaluator> fast;

  // Exhaustive table.
  std::vector<CandidateIndex> tiling_index;
  std::vector<Elements> footprints;
  std::vector<CostEntry> entries;

  TileSizes tiles_of(const CandidateIndex& idx) const {
    TileSizes t{};
    for (std::size_t i = 0; i < kLoopDimCount; ++i) t[i] = candidates[i][idx[i]];
    return t;
  }

  Elements footprint(const TileSizes& t) const {
    return {detail::tile_footprint_elements(Operand::input, layer, t),
            detail::tile_footprint_elements(Operand::output, layer, t),
            detail::tile_footprint_elements(Operand::weight, layer, t)};
  }

  Elements transfers(const LoopOrder& order, const CandidateIndex& idx) const {
    if (fast) return fast->transfers(order, idx);
    Mapping m{order, tiles_of(idx)};
    const auto dm = dm_layer(layer, m, Bitwidths{1.0, 1.0, 1.0}, options.dm);
    // Per group; footprints are per group as well.
    return {dm.of(Operand::input).elements / layer.groups,
            dm.of(Operand::output).elements / layer.groups,
            dm.of(Operand::weight).elements / layer.groups};
  }

  void build_table() {
    std::vector<CandidateIndex> all;
    CandidateIndex idx{};
    for (;;) {
      all.push_back(idx);
      std::size_t i = kLoopDimCount;
      bool done = true;
      while (i-- > 0) {
        if (++idx[i] < candidates[i].size()) {
          done = false;
          break;
        }
        idx[i] = 0;
      }
      if (done) break;
    }
    tiling_index = std::move(all);
    footprints.resize(tiling_index.size());

    constexpr std::size_t kChunk = 512;
    const std::size_t chunks = (tiling_index.size() + kChunk - 1) / kChunk;
    std::vector<std::vector<CostEntry>> parts(chunks);
    parallel_for(chunks, options.jobs, [&](std::size_t c) {
      auto& part = parts[c];
      const auto end = std::min(tiling_index.size(), (c + 1) * kChunk);
      std::vector<CostEntry> kept;
      for (std::size_t t = c * kChunk; t < end; ++t) {
        footprints[t] = footprint(tiles_of(tiling_index[t]));
        kept.clear();
        for (std::size_t o = 0; o < orders.size(); ++o) {
          const auto e = transfers(orders[o], tiling_index[t]);
          // Orders are sorted, so an earlier order with no worse transfers
          // wins every tie and makes this one redundant.
          bool redundant = false;
          for (const auto& k : kept) {
            if (dominates(k.elements, e)) {
              redundant = true;
              break;
            }
          }
          if (redundant) continue;
          std::erase_if(kept, [&](const CostEntry& k) {
            return dominates(e, k.elements) && e != k.elements;
          });
          kept.push_back({static_cast<std::uint32_t>(t),
                          static_cast<std::uint8_t>(o), e});
        }
        std::sort(kept.begin(), kept.end(),
                  [](const CostEntry& a, const CostEntry& b) { return a.order < b.order; });
        part.insert(part.end(), kept.begin(), kept.end());
      }
    });
    for (auto& p : parts) entries.insert(entries.end(), p.begin(), p.end());
  }

  TilingResult finish(const Mapping& mapping, const Bitwidths& q,
                      std::int64_t evaluated) const {
    TilingResult r;
    r.feasible = true;
    r.mapping = mapping;
    r.dm = dm_layer(layer, mapping, q, options.dm);
    r.footprint = tile_footprint(layer, mapping, q);
    r.strategy = strategy;
    r.evaluated = evaluated;
    return r;
  }

  TilingResult scan(const Bitwidths& q, double capacity) const {
    std::optional<Mapping> best;
    double best_dm = 0.0;
    std::int64_t evaluated = 0;
    std::uint32_t feasible_tiling = UINT32_MAX;
    bool tiling_ok = false;
    for (const auto& e : entries) {
      if (e.tiling != feasible_tiling) {
        feasible_tiling = e.tiling;
        tiling_ok = weighted(footprints[e.tiling], q) <= capacity;
      }
      if (!tiling_ok) continue;
      ++evaluated;
      const double dm = weighted(e.elements, q);
      Mapping m{orders[e.order], tiles_of(tiling_index[e.tiling])};
      if (!best || mapping_preferred(dm, m, best_dm, *best)) {
        best = m;
        best_dm = dm;
      }
    }
    if (!best) {
      TilingResult r;
      r.strategy = strategy;
      r.evaluated = evaluated;
      return r;
    }
    return finish(*best, q, evaluated);
  }

  TilingResult descend(const Bitwidths& q, double capacity) const {
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < kLoopDimCount; ++i) {
      if (candidates[i].size() > 1) dims.push_back(i);
    }
    std::int64_t evaluated = 0;
    std::optional<Mapping> best;
    double best_dm = 0.0;

    for (const auto& order : orders) {
      auto cost = [&](const CandidateIndex& idx) -> std::optional<double> {
        ++evaluated;
        if (weighted(footprint(tiles_of(idx)), q) > capacity) return std::nullopt;
        return weighted(transfers(order, idx), q);
      };
      auto better = [&](double dm_a, const CandidateIndex& a, double dm_b,
                        const CandidateIndex& b) {
        return mapping_preferred(dm_a, Mapping{order, tiles_of(a)}, dm_b,
                                 Mapping{order, tiles_of(b)});
      };

      std::vector<CandidateIndex> seeds;
      CandidateIndex lo{}, hi{}, mid{};
      for (std::size_t i = 0; i < kLoopDimCount; ++i) {
        const auto n = static_cast<std::uint16_t>(candidates[i].size());
        hi[i] = static_cast<std::uint16_t>(n - 1);
        mid[i] = static_cast<std::uint16_t>(n / 2);
      }
      seeds = {lo, mid, hi};
      std::mt19937_64 rng(options.descent_seed);
      for (int s = 3; s < options.descent_seeds; ++s) {
        CandidateIndex r{};
        for (std::size_t i = 0; i < kLoopDimCount; ++i) {
          r[i] = static_cast<std::uint16_t>(rng() % candidates[i].size());
        }
        seeds.push_back(r);
      }

      for (auto idx : seeds) {
        auto cur = cost(idx);
        if (!cur) continue;
        for (bool improved = true; improved;) {
          improved = false;
          for (auto i : dims) {
            for (std::uint16_t c = 0; c < candidates[i].size(); ++c) {
              auto trial = idx;
              trial[i] = c;
              if (trial == idx) continue;
              const auto v = cost(trial);
              if (v && better(*v, trial, *cur, idx)) {
                idx = trial;
                cur = v;
                improved = true;
              }
            }
          }
          if (improved) continue;
          // Joint moves of two loops escape optima pinned by the capacity.
          for (std::size_t a = 0; a < dims.size(); ++a) {
            for (std::size_t b = a + 1; b < dims.size(); ++b) {
              const auto base = idx;
              for (std::uint16_t ca = 0; ca < candidates[dims[a]].size(); ++ca) {
                for (std::uint16_t cb = 0; cb < candidates[dims[b]].size(); ++cb) {
                  auto trial = base;
                  trial[dims[a]] = ca;
                  trial[dims[b]] = cb;
                  if (trial == idx) continue;
                  const auto v = cost(trial);
                  if (v && better(*v, trial, *cur, idx)) {
                    idx = trial;
                    cur = v;
                    improved = true;
                  }
                }
              }
            }
          }
          if (improved) continue;
          // Exhaustive check of the immediate neighbourhood (+-1 candidate
          // in every loop at once).
          std::size_t combos = 1;
          for (std::size_t k = 0; k < dims.size(); ++k) combos *= 3;
          const auto centre = idx;
          for (std::size_t code = 0; code < combos; ++code) {
            auto trial = centre;
            std::size_t rest = code;
            bool valid = true;
            for (auto i : dims) {
              const int delta = static_cast<int>(rest % 3) - 1;
              rest /= 3;
              const int v = trial[i] + delta;
              if (v < 0 || v >= static_cast<int>(candidates[i].size())) {
                valid = false;
                break;
              }
              trial[i] = static_cast<std::uint16_t>(v);
            }
            if (!valid || trial == idx) continue;
            const auto v = cost(trial);
            if (v && better(*v, trial, *cur, idx)) {
              idx = trial;
              cur = v;
              improved = true;
            }
          }
        }
        Mapping m{order, tiles_of(idx)};
        if (!best || mapping_preferred(*cur, m, best_dm, *best)) {
          best = m;
          best_dm = *cur;
        }
      }
    }
    if (!best) {
      TilingResult r;
      r.strategy = strategy;
      r.evaluated = evaluated;
      return r;
    }
    return finish(*best, q, evaluated);
  }
};

LayerSearchSpace::LayerSearchSpace(const ConvLayer& layer,
                                   const TilingOptions& options)
    : impl_(std::make_unique<Impl>()) {
  validate_layer(layer);
  auto& s = *impl_;
  s.layer = layer;
  s.options = options;
  s.orders = dedupe_orders(
      layer, options.orders.empty() ? default_loop_orders() : options.orders);
  if (s.orders.size() > 255) fail("too many loop orders");

  auto tileable = [&](LoopDim d) {
    return options.tile_kernel ||
           (d != LoopDim::kernel_h && d != LoopDim::kernel_w);
  };
  std::int64_t full_space = 1;
  for (auto d : kAllLoopDims) {
    if (tileable(d)) full_space *= loop_extent(layer, d);
  }
  const bool every_integer = full_space <= options.full_enumeration_limit;
  for (auto d : kAllLoopDims) {
    s.candidates[index_of(d)] =
        tileable(d) ? tile_candidates(loop_extent(layer, d), every_integer)
                    : std::vector<std::int64_t>{loop_extent(layer, d)};
    s.tilings *= static_cast<std::int64_t>(s.candidates[index_of(d)].size());
  }
  if (!options.tile_kernel && options.dm.level_sum == LevelSum::all_levels) {
    s.fast.emplace(layer, s.candidates, options.dm.count_first_load);
  }
  if (every_integer) {
    s.strategy = SearchStrategy::full;
  } else if (s.tilings <= options.exhaustive_limit) {
    s.strategy = SearchStrategy::exhaustive;
  } else {
    s.strategy = SearchStrategy::coordinate_descent;
  }
  if (s.strategy != SearchStrategy::coordinate_descent) s.build_table();
}

LayerSearchSpace::~LayerSearchSpace() = default;
LayerSearchSpace::LayerSearchSpace(LayerSearchSpace&&) noexcept = default;
LayerSearchSpace& LayerSearchSpace::operator=(LayerSearchSpace&&) noexcept = default;

const ConvLayer& LayerSearchSpace::layer() const { return impl_->layer; }
SearchStrategy LayerSearchSpace::strategy() const { return impl_->strategy; }
std::int64_t LayerSearchSpace::tiling_count() const { return impl_->tilings; }

TilingResult LayerSearchSpace::best(const Bitwidths& bitwidths,
                                    double capacity_bits) const {
  if (!(capacity_bits > 0.0)) fail("memory capacity must be positive");
  // Footprints and transfers are per group; groups run one after another.
  if (impl_->strategy == SearchStrategy::coordinate_descent) {
    return impl_->descend(bitwidths, capacity_bits);
  }
  return impl_->scan(bitwidths, capacity_bits);
}

TilingResult optimize_tiling(const TilingProblem& problem,
                             const TilingOptions& options) {
  auto opts = options;
  opts.orders = {problem.order};
  // A single order needs no deduplication against others.
  LayerSearchSpace space(problem.layer, opts);
  return space.best(problem.bitwidths, problem.capacity_bits);
}

TilingResult optimize_layer(const ConvLayer& layer, const Bitwidths& bitwidths,
                            double capacity_bits, const TilingOptions& options) {
  LayerSearchSpace space(layer, options);
  return space.best(bitwidths, capacity_bits);
}

}  // namespace bfps
