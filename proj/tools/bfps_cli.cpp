// bfps: BFP configuration search from the command line.
//
// Exit codes: 0 success, 1 usage or invalid input, 2 no feasible
// configuration, 3 I/O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "bfps/bfp_codec.hpp"
#include "bfps/dm_model.hpp"
#include "bfps/error.hpp"
#include "bfps/pipeline.hpp"
#include "bfps/reuse_oracle.hpp"

namespace {

using namespace bfps;

// Search flags; each overrides the configuration file only when given.
struct SearchFlags {
  std::string config_path;
  std::string save_config;
  RunConfig values;
  std::string mode, scope, roles, loss_source, level_sum;
  int exponent_bias = 0;
  bool decompose = false, no_compose = false, no_synthetic = false, no_csv = false,
       no_baseline = false, no_first_load = false, tile_kernel = false;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_search_flags(CLI::App* app, SearchFlags& f) {
  auto& v = f.values;
  auto& o = f.opts;
  o["config"] = app->add_option("--config", f.config_path, "JSON run configuration");
  o["model"] = app->add_option("--model", v.model_path, "model description file");
  o["qb"] = app->add_option("--qb", v.total_bits, "total bits per element (q_b)");
  o["alpha"] = app->add_option("--alpha", v.alpha, "trade-off weight (default 0.2)");
  o["mc"] = app->add_option("--mc", v.capacity_bits, "on-chip capacity in bits");
  o["mode"] = app->add_option("--mode", f.mode, "full, no_qat, no_dm or pareto");
  o["scope"] = app->add_option("--scope", f.scope, "uniform or per_layer");
  o["roles"] = app->add_option("--roles", f.roles, "shared or per_role");
  o["decompose"] = app->add_flag("--decompose", f.decompose,
                                 "independent per-layer search instead of joint");
  o["loss-source"] = app->add_option("--loss-source", f.loss_source, "proxy or table");
  o["table"] = app->add_option("--table", v.table_path, "accuracy table file");
  o["no-compose"] = app->add_flag("--no-compose", f.no_compose,
                                  "require whole-model table entries");
  o["se-set"] = app->add_option("--se-set", v.exponent_bits, "SE candidates")->delimiter(',');
  o["bs-set"] = app->add_option("--bs-set", v.block_sizes, "BS candidates")->delimiter(',');
  o["seed"] = app->add_option("--seed", v.seed, "synthetic sample seed");
  o["no-synthetic"] = app->add_flag("--no-synthetic", f.no_synthetic,
                                    "fail on layers without sample files");
  o["exponent-bias"] = app->add_option("--exponent-bias", f.exponent_bias,
                                       "clamp shared exponents to the SE-bit window");
  o["no-first-load"] = app->add_flag("--no-first-load", f.no_first_load,
                                     "do not count cold loads of fully reused operands");
  o["level-sum"] = app->add_option("--level-sum", f.level_sum,
                                   "all_levels or innermost_only");
  o["tile-kernel"] = app->add_flag("--tile-kernel", f.tile_kernel, "also tile kernel loops");
  o["sram-pj"] = app->add_option("--sram-pj", v.energy.sram_pj_per_bit, "SRAM pJ per bit");
  o["dram-pj"] = app->add_option("--dram-pj", v.energy.dram_pj_per_bit, "DRAM pJ per bit");
  o["no-baseline"] = app->add_flag("--no-baseline", f.no_baseline,
                                   "skip the float32 reference plan");
  o["out-dir"] = app->add_option("--out-dir", v.output_dir, "output directory");
  o["no-csv"] = app->add_flag("--no-csv", f.no_csv, "skip CSV output");
  o["jobs"] = app->add_option("--jobs", v.jobs, "worker threads (0: all cores)");
  o["save-config"] = app->add_option("--save-config", f.save_config,
                                     "write the effective configuration");
}

// Defaults < configuration file < environment < flags.
RunConfig resolve(const SearchFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
  if (const char* dir = std::getenv("BFPS_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
  if (const char* jobs = std::getenv("BFPS_JOBS"); jobs && *jobs) {
    try {
      c.jobs = static_cast<unsigned>(std::stoul(jobs));
    } catch (const std::exception&) {
      fail("BFPS_JOBS must be a nonnegative integer, got '" + std::string(jobs) + "'");
    }
  }
  const auto& v = f.values;
  if (f.given("model")) c.model_path = v.model_path;
  if (f.given("qb")) c.total_bits = v.total_bits;
  if (f.given("alpha")) c.alpha = v.alpha;
  if (f.given("mc")) c.capacity_bits = v.capacity_bits;
  if (f.given("mode")) c.mode = parse_search_mode(f.mode);
  if (f.given("scope")) c.scope = parse_search_scope(f.scope);
  if (f.given("roles")) c.roles = parse_role_binding(f.roles);
  if (f.given("decompose")) c.decompose = true;
  if (f.given("loss-source")) c.loss_source = parse_loss_source(f.loss_source);
  if (f.given("table")) c.table_path = v.table_path;
  if (f.given("no-compose")) c.compose_table = false;
  if (f.given("se-set")) c.exponent_bits = v.exponent_bits;
  if (f.given("bs-set")) c.block_sizes = v.block_sizes;
  if (f.given("seed")) c.seed = v.seed;
  if (f.given("no-synthetic")) c.synthetic_fallback = false;
  if (f.given("exponent-bias")) c.exponent_bias = f.exponent_bias;
  if (f.given("no-first-load")) c.count_first_load = false;
  if (f.given("level-sum")) c.level_sum = parse_level_sum(f.level_sum);
  if (f.given("tile-kernel")) c.tile_kernel = true;
  if (f.given("sram-pj")) c.energy.sram_pj_per_bit = v.energy.sram_pj_per_bit;
  if (f.given("dram-pj")) c.energy.dram_pj_per_bit = v.energy.dram_pj_per_bit;
  if (f.given("no-baseline")) c.energy_baseline = false;
  if (f.given("out-dir")) c.output_dir = v.output_dir;
  if (f.given("no-csv")) c.write_csv = false;
  if (f.given("jobs")) c.jobs = v.jobs;
  if (c.loss_source == LossSource::table && c.table_path.empty()) {
    fail("--loss-source table needs --table");
  }
  return c;
}

void save_config_if_asked(const SearchFlags& f, const RunConfig& c) {
  if (f.save_config.empty()) return;
  std::ofstream out(f.save_config);
  if (!out) fail_io("cannot write '" + f.save_config + "'");
  out << dump_config(c);
}

void print_files(const RunOutputs& outputs) {
  for (const auto& p : outputs.files) std::cout << "wrote " << p.string() << "\n";
}

int cmd_run(const SearchFlags& f) {
  const auto config = resolve(f);
  save_config_if_asked(f, config);
  RunReport report;
  const auto outputs = run(config, &report);
  std::cout << summary_text(report);
  print_files(outputs);
  return 0;
}

int cmd_sweep(const SearchFlags& f, const std::vector<double>& alphas, bool alphas_given) {
  auto config = resolve(f);
  if (alphas_given) config.sweep_alphas = alphas;
  save_config_if_asked(f, config);
  SweepReport report;
  const auto outputs = sweep_alpha(config, &report);
  std::cout << sweep_summary(report);
  print_files(outputs);
  return 0;
}

struct QuantFlags {
  std::string input;
  std::string decoded;
  std::string shape;
  std::string layout = "conv";
  std::int64_t synthetic = 0;
  std::uint64_t seed = kSyntheticSampleSeed;
  int qb = 8, se = 3, bs = 8;
  int bias = 0;
  CLI::Option* bias_opt = nullptr;
};

int cmd_quant_error(const QuantFlags& f) {
  const BfpSpec spec{f.qb, f.se, f.bs, TensorRole::weight};
  spec.validate();
  std::vector<double> values;
  std::vector<std::int64_t> shape = f.shape.empty() ? std::vector<std::int64_t>{}
                                                    : parse_shape(f.shape);
  if (!f.input.empty()) {
    std::int64_t expected = -1;
    if (!shape.empty()) {
      expected = 1;
      for (auto d : shape) expected *= d;
    }
    const auto raw = read_f32_file(f.input, expected);
    values.assign(raw.begin(), raw.end());
  } else if (f.synthetic > 0) {
    std::mt19937_64 rng(f.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    values.resize(static_cast<std::size_t>(f.synthetic));
    for (auto& v : values) v = unit(rng);
  } else {
    fail("give --input FILE or --synthetic COUNT");
  }
  const auto n = static_cast<std::int64_t>(values.size());
  if (shape.empty()) shape = {n};

  // conv: [outer][channels][spatial...] from the shape; flat: one run.
  BlockLayout layout = BlockLayout::flat(n);
  if (f.layout == "conv" && shape.size() >= 2) {
    std::int64_t spatial = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) spatial *= shape[i];
    layout = {shape[0], shape[1], spatial};
  } else if (f.layout == "conv" && shape.size() == 1) {
    layout = BlockLayout::flat(n);
  } else if (f.layout != "flat") {
    fail("layout must be conv or flat");
  }
  if (layout.element_count() != n) fail("shape does not match the element count");

  CodecOptions codec;
  if (f.bias_opt->count() > 0) codec.exponent_bias = f.bias;
  const auto err = quantization_error(values, layout, spec, codec);
  if (!f.decoded.empty()) {
    const auto tensor = encode_tensor(values, shape, layout, spec, codec);
    const auto back = decode_tensor(tensor);
    write_f32_file(f.decoded, std::vector<float>(back.begin(), back.end()));
  }
  std::cout << "elements       " << n << "\n"
            << "format         q_b=" << f.qb << " SE=" << f.se << " BS=" << f.bs << "\n"
            << "layout         " << layout.outer << " x " << layout.channels << " x "
            << layout.spatial << "\n"
            << "bits/element   "
            << effective_bitwidth(spec, layout.spatial, 1) << "\n"
            << "max |error|    " << err.max_abs << "\n"
            << "mse            " << err.mse << "\n"
            << "normalized mse " << err.normalized_mse() << "\n"
            << "sqnr dB        " << err.sqnr_db << "\n";
  return 0;
}

struct SimFlags {
  std::string model;
  std::string layer = "0";
  std::string order;
  std::vector<std::int64_t> tiles;
  int qb = 8, se = 3, bs = 8;
  bool float32 = false;
  double mc = 0.0;
  bool reload = false;
  bool trace = false;
};

int cmd_simulate(const SimFlags& f) {
  const auto model = load_model(f.model).model;
  const ConvLayer* layer = nullptr;
  for (const auto& l : model.layers) {
    if (l.name == f.layer || std::to_string(l.index) == f.layer) layer = &l;
  }
  if (!layer) fail("no layer '" + f.layer + "' in " + f.model);
  Mapping m = whole_layer_mapping(*layer);
  if (!f.order.empty()) m.order = parse_order(f.order);
  if (!f.tiles.empty()) {
    if (f.tiles.size() != kLoopDimCount) fail("--tiles takes six values K,C,Y,X,R,S");
    for (std::size_t i = 0; i < kLoopDimCount; ++i) m.tiles[i] = f.tiles[i];
  }
  m.validate(*layer);
  const auto bits = f.float32 ? kFloat32Bitwidths
                              : effective_bitwidths(LayerFormats::uniform(f.qb, f.se, f.bs),
                                                    *layer);
  const auto footprint = tile_footprint(*layer, m, bits);
  const double mc = f.mc > 0.0 ? f.mc : footprint.total_bits();
  const auto sim = simulate(*layer, m, bits, mc,
                            f.reload ? RetentionPolicy::reload_every_tile
                                     : RetentionPolicy::slide_and_retain,
                            f.trace ? &std::cout : nullptr);
  const auto dm = dm_layer(*layer, m, bits);
  std::cout << "layer      " << layer->name << "  order " << format_order(m.order)
            << "\nbitwidths  in=" << bits.input << " out=" << bits.output
            << " w=" << bits.weight << "\nfootprint  " << footprint.total_bits()
            << " bits (capacity " << mc << ")\n"
            << "simulated  " << sim.total_bits << " bits over " << sim.tiles
            << " tiles, peak occupancy " << sim.peak_occupancy_bits << "\n"
            << "model      " << dm.total_bits << " bits\n";
  for (const auto& od : dm.operands) {
    std::cout << "  " << to_string(od.operand) << ": " << od.bits << " bits, levels";
    for (const auto& lv : od.levels) {
      std::cout << ' ' << to_string(lv.dim) << ':' << lv.iterations << '/'
                << to_string(lv.reuse);
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_energy(const std::string& model_path, const std::string& plan_path,
               const EnergyParams& params) {
  const auto model = load_model(model_path).model;
  std::ifstream in(plan_path);
  if (!in) fail_io("cannot open plan '" + plan_path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const auto plan = recost_plan(model, parse_plan_json(text.str(), plan_path));
  const auto e = energy(plan, model, params);
  std::cout << "DM_D  " << e.dram_bits << " bits\nDM_S  " << e.sram_bits
            << " bits\nenergy " << e.energy_pj << " pJ (" << e.energy_j() << " J)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block floating point configuration search"};
  app.require_subcommand(1);

  SearchFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "search one configuration and write reports");
  add_search_flags(run_cmd, run_flags);

  SearchFlags sweep_flags;
  std::vector<double> alphas;
  auto* sweep_cmd = app.add_subcommand("sweep", "search once per alpha value");
  add_search_flags(sweep_cmd, sweep_flags);
  auto* alphas_opt =
      sweep_cmd->add_option("--alphas", alphas, "alpha values (default: seven-point list)")
          ->delimiter(',');

  QuantFlags quant;
  auto* quant_cmd = app.add_subcommand("quant-error", "BFP round-trip error of a tensor");
  quant_cmd->add_option("--input", quant.input, "little-endian float32 file");
  quant_cmd->add_option("--synthetic", quant.synthetic, "use COUNT Gaussian values");
  quant_cmd->add_option("--seed", quant.seed, "seed for --synthetic");
  quant_cmd->add_option("--decoded", quant.decoded,
                        "write the decoded tensor as little-endian float32");
  quant_cmd->add_option("--shape", quant.shape, "e.g. 16x3x3x3 (outer x channels x ...)");
  quant_cmd->add_option("--layout", quant.layout, "conv or flat");
  quant_cmd->add_option("--qb", quant.qb, "total bits");
  quant_cmd->add_option("--se", quant.se, "shared exponent bits");
  quant_cmd->add_option("--bs", quant.bs, "block size");
  quant.bias_opt = quant_cmd->add_option("--exponent-bias", quant.bias,
                                         "clamp shared exponents to the SE-bit window");

  SimFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "replay one layer's tile schedule");
  sim_cmd->add_option("--model", sim.model, "model description file")->required();
  sim_cmd->add_option("--layer", sim.layer, "layer index or name");
  sim_cmd->add_option("--order", sim.order, "loop order, outermost first, e.g. KCYXRS");
  sim_cmd->add_option("--tiles", sim.tiles, "tile sizes K,C,Y,X,R,S")->delimiter(',');
  sim_cmd->add_option("--qb", sim.qb, "total bits");
  sim_cmd->add_option("--se", sim.se, "shared exponent bits");
  sim_cmd->add_option("--bs", sim.bs, "block size");
  sim_cmd->add_flag("--float32", sim.float32, "unquantized 32-bit operands");
  sim_cmd->add_option("--mc", sim.mc, "buffer capacity in bits (default: tile footprint)");
  sim_cmd->add_flag("--reload", sim.reload, "reload every tile instead of retaining");
  sim_cmd->add_flag("--trace", sim.trace, "print one line per tile");

  std::string energy_model, energy_plan;
  EnergyParams energy_params;
  auto* energy_cmd = app.add_subcommand("energy", "re-cost a stored plan");
  energy_cmd->add_option("--model", energy_model, "model description file")->required();
  energy_cmd->add_option("--plan", energy_plan, "plan.json")->required();
  energy_cmd->add_option("--sram-pj", energy_params.sram_pj_per_bit, "SRAM pJ per bit");
  energy_cmd->add_option("--dram-pj", energy_params.dram_pj_per_bit, "DRAM pJ per bit");

  SearchFlags config_flags;
  auto* config_cmd = app.add_subcommand("config", "print the effective configuration");
  add_search_flags(config_cmd, config_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, alphas, alphas_opt->count() > 0);
    if (*quant_cmd) return cmd_quant_error(quant);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*energy_cmd) return cmd_energy(energy_model, energy_plan, energy_params);
    if (*config_cmd) {
      const auto c = resolve(config_flags);
      save_config_if_asked(config_flags, c);
      std::cout << dump_config(c);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "bfps: error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "bfps: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
