#include "bfps/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "bfps/error.hpp"
#include "json.hpp"

namespace bfps {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

// Shortest form that reads back to the same double.
std::string num(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ordered spec_json(const BfpSpec& s) {
  return {{"qb", s.total_bits}, {"se", s.exponent_bits}, {"bs", s.block_size}};
}

ordered formats_json(const std::optional<LayerFormats>& f) {
  if (!f) return nullptr;
  return {{"input", spec_json(f->input)},
          {"output", spec_json(f->output)},
          {"weight", spec_json(f->weight)}};
}

ordered mapping_json(const Mapping& m) {
  ordered tiles = ordered::object();
  for (auto d : kAllLoopDims) tiles[std::string(to_string(d))] = m.tile(d);
  return {{"order", format_order(m.order)}, {"tiles", tiles}};
}

ordered bitwidths_json(const Bitwidths& b) {
  return {{"input", b.input}, {"output", b.output}, {"weight", b.weight}};
}

ordered dm_json(const DmBreakdown& dm) {
  ordered ops = ordered::array();
  for (const auto& od : dm.operands) {
    ordered levels = ordered::array();
    for (const auto& lv : od.levels) {
      levels.push_back({{"dim", to_string(lv.dim)},
                        {"iterations", lv.iterations},
                        {"reuse", to_string(lv.reuse)},
                        {"new_data_bits", lv.new_data_bits},
                        {"bits", lv.bits}});
    }
    ops.push_back({{"operand", to_string(od.operand)},
                   {"bitwidth", od.bitwidth},
                   {"footprint_bits", od.footprint_bits},
                   {"first_load_bits", od.first_load_bits},
                   {"elements", od.elements},
                   {"bits", od.bits},
                   {"levels", levels}});
  }
  return {{"total_bits", dm.total_bits}, {"groups", dm.groups}, {"operands", ops}};
}

ordered candidate_json(const CandidateSummary& c) {
  return {{"index", c.index},
          {"label", c.label},
          {"feasible", c.feasible},
          {"dm_sum_bits", c.dm_sum},
          {"acc_raw", c.acc_raw},
          {"acc_loss", c.score.acc_loss},
          {"perf_loss", c.score.perf_loss},
          {"objective", c.score.objective}};
}

ordered energy_json(const EnergyReport& e) {
  return {{"units", "pJ"},
          {"sram_pj_per_bit", e.params.sram_pj_per_bit},
          {"dram_pj_per_bit", e.params.dram_pj_per_bit},
          {"dm_sram_bits", e.sram_bits},
          {"dm_dram_bits", e.dram_bits},
          {"energy_pj", e.energy_pj},
          {"energy_j", e.energy_j()},
          {"normalized", e.normalized ? ordered(*e.normalized) : ordered(nullptr)},
          {"baseline", e.baseline}};
}

ordered search_json(const QuantPlan& p) {
  return {{"mode", to_string(p.mode)},
          {"scope", to_string(p.scope)},
          {"roles", to_string(p.roles)},
          {"loss_source", to_string(p.loss_source)},
          {"decomposed", p.decomposed},
          {"qb", p.total_bits},
          {"alpha", p.alpha},
          {"mc_bits", p.capacity_bits},
          {"candidate_count", p.candidate_count},
          {"feasible_count", p.feasible_count},
          {"label", p.label},
          {"acc_raw", p.acc_raw},
          {"acc_normalizer", p.acc_normalizer},
          {"acc_loss", p.acc_loss},
          {"perf_loss", p.perf_loss},
          {"objective", p.objective},
          {"dm_sum_bits", p.dm_sum},
          {"dm_max_bits", p.dm_max}};
}

// Config echo without fields that only steer execution.
ordered config_json(const RunConfig& c) {
  auto j = ordered::parse(dump_config(c));
  j.erase("jobs");
  j.erase("output_dir");
  return j;
}

std::string plan_table(const QuantPlan& plan, const EnergyReport* energy) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-18s %-22s %-8s %-24s %14s %12s\n", "#",
                "layer", "format (in/out/w)", "order", "tiles K,C,Y,X,R,S", "DM bits",
                "energy uJ");
  out << line;
  for (std::size_t l = 0; l < plan.layers.size(); ++l) {
    const auto& lp = plan.layers[l];
    std::string fmt = "float32";
    if (lp.formats) {
      auto one = [](const BfpSpec& s) {
        return std::to_string(s.exponent_bits) + "/" + std::to_string(s.block_size);
      };
      fmt = one(lp.formats->input) + " " + one(lp.formats->output) + " " +
            one(lp.formats->weight);
    }
    std::string tiles;
    for (auto d : kAllLoopDims) {
      tiles += (tiles.empty() ? "" : ",") + std::to_string(lp.mapping.tile(d));
    }
    const double uj = energy ? energy->layers[l].energy_pj * 1e-6 : 0.0;
    std::snprintf(line, sizeof line, "%-4zu %-18s %-22s %-8s %-24s %14.6g %12.6g\n", l,
                  lp.name.c_str(), fmt.c_str(), format_order(lp.mapping.order).c_str(),
                  tiles.c_str(), lp.dm.total_bits, uj);
    out << line;
  }
  return out.str();
}

}  // namespace

std::string plan_json(const QuantPlan& plan) {
  ordered layers = ordered::array();
  for (const auto& lp : plan.layers) {
    layers.push_back({{"index", lp.index},
                      {"name", lp.name},
                      {"formats", formats_json(lp.formats)},
                      {"mapping", mapping_json(lp.mapping)}});
  }
  ordered j = {{"format", "bfps-plan"},
               {"format_version", kPlanFormatVersion},
               {"model", plan.model_name},
               {"qb", plan.total_bits},
               {"label", plan.label},
               {"layers", layers}};
  return j.dump(2) + "\n";
}

PlanFile parse_plan_json(std::string_view text, std::string_view source_name) {
  const std::string where(source_name);
  PlanFile file;
  try {
    const auto j = json::parse(text);
    if (j.value("format", "") != "bfps-plan") fail(where + ": not a plan file");
    if (j.at("format_version").get<int>() != kPlanFormatVersion) {
      fail(where + ": unsupported plan version");
    }
    file.model_name = j.at("model").get<std::string>();
    file.total_bits = j.at("qb").get<int>();
    for (const auto& l : j.at("layers")) {
      PlanLayer pl;
      pl.name = l.at("name").get<std::string>();
      const auto& f = l.at("formats");
      if (!f.is_null()) {
        auto spec = [&](const char* role, TensorRole r) {
          const auto& s = f.at(role);
          return BfpSpec{s.at("qb").get<int>(), s.at("se").get<int>(),
                         s.at("bs").get<int>(), r};
        };
        pl.formats = LayerFormats{spec("input", TensorRole::input),
                                  spec("output", TensorRole::output),
                                  spec("weight", TensorRole::weight)};
      }
      const auto& m = l.at("mapping");
      pl.mapping.order = parse_order(m.at("order").get<std::string>());
      for (auto d : kAllLoopDims) {
        pl.mapping.tile(d) = m.at("tiles").at(std::string(to_string(d))).get<std::int64_t>();
      }
      file.layers.push_back(std::move(pl));
    }
  } catch (const json::exception& e) {
    fail(where + ": " + e.what());
  }
  return file;
}

QuantPlan recost_plan(const ModelDesc& model, const PlanFile& file, const DmOptions& dm) {
  if (file.layers.size() != model.layers.size()) {
    fail("plan has " + std::to_string(file.layers.size()) + " layers, model has " +
         std::to_string(model.layers.size()));
  }
  QuantPlan plan;
  plan.model_name = model.name;
  plan.total_bits = file.total_bits;
  plan.label = "stored plan";
  plan.candidate_count = 1;
  plan.feasible_count = 1;
  for (std::size_t l = 0; l < file.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (file.layers[l].name != layer.name) {
      fail("plan layer " + std::to_string(l) + " is '" + file.layers[l].name +
           "', model layer is '" + layer.name + "'");
    }
    auto lp = cost_layer(layer, file.layers[l].formats, file.layers[l].mapping, dm);
    plan.dm_sum += lp.dm.total_bits;
    plan.layers.push_back(std::move(lp));
  }
  plan.dm_max = plan.dm_sum;
  plan.perf_loss = plan.dm_sum > 0.0 ? 1.0 : 0.0;
  return plan;
}

std::string report_json(const RunReport& r) {
  ordered layers = ordered::array();
  for (std::size_t l = 0; l < r.plan.layers.size(); ++l) {
    const auto& lp = r.plan.layers[l];
    const auto& le = r.energy.layers.at(l);
    layers.push_back(
        {{"index", lp.index},
         {"name", lp.name},
         {"formats", formats_json(lp.formats)},
         {"bitwidths", bitwidths_json(lp.bitwidths)},
         {"mapping", mapping_json(lp.mapping)},
         {"strategy", to_string(lp.strategy)},
         {"acc_raw", lp.acc_raw ? ordered(*lp.acc_raw) : ordered(nullptr)},
         {"footprint_bits", {{"input", lp.footprint.bits[0]},
                             {"output", lp.footprint.bits[1]},
                             {"weight", lp.footprint.bits[2]},
                             {"total", lp.footprint.total_bits()}}},
         {"dm", dm_json(lp.dm)},
         {"energy", {{"dm_sram_bits", le.sram_bits},
                     {"dm_dram_bits", le.dram_bits},
                     {"energy_pj", le.energy_pj}}}});
  }
  ordered candidates = ordered::array();
  for (const auto& c : r.plan.candidates) candidates.push_back(candidate_json(c));
  ordered frontier = ordered::array();
  for (const auto& c : r.plan.frontier) frontier.push_back(candidate_json(c));
  ordered baseline = nullptr;
  if (r.baseline && r.baseline_energy) {
    baseline = {{"label", r.baseline->label},
                {"dm_sum_bits", r.baseline->dm_sum},
                {"dm_sram_bits", r.baseline_energy->sram_bits},
                {"energy_pj", r.baseline_energy->energy_pj}};
  }
  ordered j = {{"format", "bfps-report"},
               {"format_version", kReportFormatVersion},
               {"config", config_json(r.config)},
               {"model", {{"name", r.plan.model_name}, {"layers", r.plan.layers.size()}}},
               {"search", search_json(r.plan)},
               {"energy", energy_json(r.energy)},
               {"baseline", baseline},
               {"baseline_note", r.baseline_note},
               {"layers", layers},
               {"candidates", candidates},
               {"frontier", frontier}};
  return j.dump(2) + "\n";
}

std::string summary_text(const RunReport& r) {
  const auto& p = r.plan;
  std::ostringstream out;
  out << "model        " << p.model_name << " (" << p.layers.size() << " layers)\n"
      << "search       mode=" << to_string(p.mode) << " scope=" << to_string(p.scope)
      << " roles=" << to_string(p.roles) << " loss=" << to_string(p.loss_source)
      << (p.decomposed ? " decomposed" : "") << "\n"
      << "q_b          " << p.total_bits << "\n"
      << "alpha        " << fixed(p.alpha, 6) << "\n"
      << "capacity     " << fixed(p.capacity_bits, 12) << " bits\n"
      << "candidates   " << p.candidate_count << " (" << p.feasible_count
      << " feasible)\n"
      << "chosen       " << p.label << "\n"
      << "Acc_loss     " << fixed(p.acc_loss, 6) << " (raw " << fixed(p.acc_raw, 6)
      << ")\n"
      << "Perf_loss    " << fixed(p.perf_loss, 6) << "\n"
      << "objective    " << fixed(p.objective, 6) << "\n"
      << "DM_sum       " << fixed(p.dm_sum, 12) << " bits (DM_max "
      << fixed(p.dm_max, 12) << ")\n"
      << "energy       " << fixed(r.energy.energy_j(), 6) << " J (SRAM "
      << fixed(r.energy.sram_bits, 12) << " bits, DRAM " << fixed(r.energy.dram_bits, 12)
      << " bits)\n";
  if (r.energy.normalized) {
    out << "vs float32   " << fixed(*r.energy.normalized, 6) << "x energy\n";
  } else if (!r.baseline_note.empty()) {
    out << "vs float32   n/a: " << r.baseline_note << "\n";
  }
  if (!p.frontier.empty()) {
    out << "\npareto frontier (Perf_loss, Acc_loss):\n";
    for (const auto& c : p.frontier) {
      out << "  " << fixed(c.score.perf_loss, 6) << "  " << fixed(c.score.acc_loss, 6)
          << "  " << c.label << "\n";
    }
  }
  out << "\n" << plan_table(p, &r.energy);
  return out.str();
}

std::string candidates_csv(const QuantPlan& plan) {
  std::ostringstream out;
  out << "index,label,feasible,dm_sum_bits,acc_raw,acc_loss,perf_loss,objective,"
         "on_frontier,chosen\n";
  for (const auto& c : plan.candidates) {
    bool frontier = false;
    for (const auto& f : plan.frontier) frontier = frontier || f.index == c.index;
    out << c.index << ',' << csv_quote(c.label) << ',' << (c.feasible ? 1 : 0) << ','
        << num(c.dm_sum) << ',' << num(c.acc_raw) << ',' << num(c.score.acc_loss) << ','
        << num(c.score.perf_loss) << ',' << num(c.score.objective) << ','
        << (frontier ? 1 : 0) << ',' << (c.label == plan.label ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream out;
  out << "alpha,label,acc_loss,perf_loss,objective,dm_sum_bits,energy_j,"
         "normalized_energy\n";
  for (const auto& row : r.rows) {
    out << num(row.alpha) << ',' << csv_quote(row.plan.label) << ','
        << num(row.plan.acc_loss) << ',' << num(row.plan.perf_loss) << ','
        << num(row.plan.objective) << ',' << num(row.plan.dm_sum) << ','
        << num(row.energy.energy_j()) << ','
        << (row.energy.normalized ? num(*row.energy.normalized) : "") << '\n';
  }
  return out.str();
}

std::string sweep_json(const SweepReport& r) {
  ordered rows = ordered::array();
  for (const auto& row : r.rows) {
    ordered layers = ordered::array();
    for (const auto& lp : row.plan.layers) {
      layers.push_back({{"name", lp.name},
                        {"formats", formats_json(lp.formats)},
                        {"mapping", mapping_json(lp.mapping)},
                        {"dm_bits", lp.dm.total_bits}});
    }
    rows.push_back({{"alpha", row.alpha},
                    {"search", search_json(row.plan)},
                    {"energy", energy_json(row.energy)},
                    {"layers", layers}});
  }
  ordered j = {{"format", "bfps-sweep"},
               {"format_version", kReportFormatVersion},
               {"config", config_json(r.config)},
               {"baseline_note", r.baseline_note},
               {"rows", rows}};
  return j.dump(2) + "\n";
}

std::string sweep_summary(const SweepReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-12s %-12s %-12s %-14s %-30s\n", "alpha",
                "Acc_loss", "Perf_loss", "objective", "energy J", "chosen");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-8g %-12.6g %-12.6g %-12.6g %-14.6g %-30s\n",
                  row.alpha, row.plan.acc_loss, row.plan.perf_loss, row.plan.objective,
                  row.energy.energy_j(), row.plan.label.c_str());
    out << line;
  }
  if (!r.baseline_note.empty()) out << "float32 baseline: " << r.baseline_note << "\n";
  return out.str();
}

}  // namespace bfps
