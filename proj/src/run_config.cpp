#include "bfps/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bfps/error.hpp"
#include "json.hpp"

namespace bfps {

using nlohmann::json;

std::string_view to_string(LevelSum v) {
  return v == LevelSum::all_levels ? "all_levels" : "innermost_only";
}

LevelSum parse_level_sum(std::string_view text) {
  if (text == "all_levels") return LevelSum::all_levels;
  if (text == "innermost_only") return LevelSum::innermost_only;
  fail("unknown level sum '" + std::string(text) +
       "' (expected all_levels, innermost_only)");
}

void RunConfig::validate() const {
  if (total_bits < 3 || total_bits > 32) fail("q_b must be in [3, 32]");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be a finite value >= 0");
  if (!(capacity_bits > 0.0) || !std::isfinite(capacity_bits)) {
    fail("memory capacity must be a positive number of bits");
  }
  if (loss_source == LossSource::table && table_path.empty()) {
    fail("loss source 'table' needs a table path");
  }
  for (double a : sweep_alphas) {
    if (!(a >= 0.0) || !std::isfinite(a)) fail("sweep alphas must be finite values >= 0");
  }
  if (full_enumeration_limit < 0 || exhaustive_limit < 0 || max_candidates < 1) {
    fail("search limits must be nonnegative");
  }
  energy.validate();
  candidate_space().validate();
}

CandidateSpace RunConfig::candidate_space() const {
  CandidateSpace s;
  s.total_bits = total_bits;
  s.exponent_bits = exponent_bits.empty() ? default_exponent_bits(total_bits) : exponent_bits;
  s.block_sizes = block_sizes.empty() ? default_block_sizes() : block_sizes;
  s.scope = scope;
  s.roles = roles;
  return s;
}

SearchOptions RunConfig::search_options() const {
  SearchOptions o;
  o.alpha = alpha;
  o.capacity_bits = capacity_bits;
  o.mode = mode;
  o.tiling.dm.count_first_load = count_first_load;
  o.tiling.dm.level_sum = level_sum;
  o.tiling.tile_kernel = tile_kernel;
  o.tiling.full_enumeration_limit = full_enumeration_limit;
  o.tiling.exhaustive_limit = exhaustive_limit;
  o.max_candidates = max_candidates;
  o.jobs = jobs;
  return o;
}

SampleOptions RunConfig::sample_options() const {
  SampleOptions o;
  o.synthetic_fallback = synthetic_fallback;
  o.seed = seed;
  return o;
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["format_version"] = kRunConfigVersion;
  j["model"] = c.model_path;
  j["qb"] = c.total_bits;
  j["alpha"] = c.alpha;
  j["mc_bits"] = c.capacity_bits;
  j["se_set"] = c.exponent_bits;
  j["bs_set"] = c.block_sizes;
  j["scope"] = to_string(c.scope);
  j["roles"] = to_string(c.roles);
  j["mode"] = to_string(c.mode);
  j["decompose"] = c.decompose;
  j["loss_source"] = to_string(c.loss_source);
  j["table"] = c.table_path;
  j["compose_table"] = c.compose_table;
  j["synthetic_fallback"] = c.synthetic_fallback;
  j["seed"] = c.seed;
  j["exponent_bias"] = c.exponent_bias ? json(*c.exponent_bias) : json(nullptr);
  j["count_first_load"] = c.count_first_load;
  j["level_sum"] = to_string(c.level_sum);
  j["tile_kernel"] = c.tile_kernel;
  j["full_enumeration_limit"] = c.full_enumeration_limit;
  j["exhaustive_limit"] = c.exhaustive_limit;
  j["max_candidates"] = c.max_candidates;
  j["energy"] = {{"sram_pj_per_bit", c.energy.sram_pj_per_bit},
                 {"dram_pj_per_bit", c.energy.dram_pj_per_bit},
                 {"baseline", c.energy_baseline}};
  j["output_dir"] = c.output_dir;
  j["csv"] = c.write_csv;
  j["jobs"] = c.jobs;
  j["sweep_alphas"] = c.sweep_alphas;
  return j.dump(2) + "\n";
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, const std::set<std::string>& known,
                const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) fail("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

RunConfig parse_config(std::string_view text, std::string_view source_name) {
  const std::string where(source_name);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) fail(where + ": configuration must be a JSON object");
  check_keys(j,
             {"format_version", "model", "qb", "alpha", "mc_bits", "se_set", "bs_set",
              "scope", "roles", "mode", "decompose", "loss_source", "table",
              "compose_table", "synthetic_fallback", "seed", "exponent_bias",
              "count_first_load", "level_sum", "tile_kernel", "full_enumeration_limit",
              "exhaustive_limit", "max_candidates", "energy", "output_dir", "csv",
              "jobs", "sweep_alphas"},
             where);
  RunConfig c;
  try {
    int version = kRunConfigVersion;
    take(j, "format_version", version);
    if (version != kRunConfigVersion) {
      fail(where + ": unsupported configuration version " + std::to_string(version));
    }
    take(j, "model", c.model_path);
    take(j, "qb", c.total_bits);
    take(j, "alpha", c.alpha);
    take(j, "mc_bits", c.capacity_bits);
    take(j, "se_set", c.exponent_bits);
    take(j, "bs_set", c.block_sizes);
    if (j.contains("scope")) c.scope = parse_search_scope(j["scope"].get<std::string>());
    if (j.contains("roles")) c.roles = parse_role_binding(j["roles"].get<std::string>());
    if (j.contains("mode")) c.mode = parse_search_mode(j["mode"].get<std::string>());
    take(j, "decompose", c.decompose);
    if (j.contains("loss_source")) {
      c.loss_source = parse_loss_source(j["loss_source"].get<std::string>());
    }
    take(j, "table", c.table_path);
    take(j, "compose_table", c.compose_table);
    take(j, "synthetic_fallback", c.synthetic_fallback);
    take(j, "seed", c.seed);
    if (j.contains("exponent_bias") && !j["exponent_bias"].is_null()) {
      c.exponent_bias = j["exponent_bias"].get<int>();
    }
    take(j, "count_first_load", c.count_first_load);
    if (j.contains("level_sum")) c.level_sum = parse_level_sum(j["level_sum"].get<std::string>());
    take(j, "tile_kernel", c.tile_kernel);
    take(j, "full_enumeration_limit", c.full_enumeration_limit);
    take(j, "exhaustive_limit", c.exhaustive_limit);
    take(j, "max_candidates", c.max_candidates);
    if (j.contains("energy")) {
      const auto& e = j["energy"];
      check_keys(e, {"sram_pj_per_bit", "dram_pj_per_bit", "baseline"}, where + " energy");
      take(e, "sram_pj_per_bit", c.energy.sram_pj_per_bit);
      take(e, "dram_pj_per_bit", c.energy.dram_pj_per_bit);
      take(e, "baseline", c.energy_baseline);
    }
    take(j, "output_dir", c.output_dir);
    take(j, "csv", c.write_csv);
    take(j, "jobs", c.jobs);
    take(j, "sweep_alphas", c.sweep_alphas);
  } catch (const json::exception& e) {
    fail(where + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_io("cannot open configuration '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

}  // namespace bfps
