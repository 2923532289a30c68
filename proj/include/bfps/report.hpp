#pragma once

// Plan files, machine-readable reports, human summaries and CSV exports.
// Every writer is a pure function of its inputs, so equal inputs give
// byte-identical output.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bfps/config_search.hpp"
#include "bfps/energy_model.hpp"
#include "bfps/run_config.hpp"

namespace bfps {

inline constexpr int kPlanFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

struct RunReport {
  RunConfig config;
  QuantPlan plan;
  EnergyReport energy;
  std::optional<QuantPlan> baseline;  // float32 reference
  std::optional<EnergyReport> baseline_energy;
  std::string baseline_note;          // why the baseline is missing
};

struct SweepRow {
  double alpha = 0.0;
  QuantPlan plan;
  EnergyReport energy;
};

struct SweepReport {
  RunConfig config;
  std::vector<SweepRow> rows;
  std::optional<EnergyReport> baseline_energy;
  std::string baseline_note;
};

// Formats and mapping of every layer; enough to re-cost a plan.
std::string plan_json(const QuantPlan& plan);

struct PlanLayer {
  std::string name;
  std::optional<LayerFormats> formats;
  Mapping mapping;
};

struct PlanFile {
  std::string model_name;
  int total_bits = 8;
  std::vector<PlanLayer> layers;
};

PlanFile parse_plan_json(std::string_view text, std::string_view source_name);

// Costs a stored plan on `model` without searching. Throws when the plan
// and model disagree on the layer list.
QuantPlan recost_plan(const ModelDesc& model, const PlanFile& file,
                      const DmOptions& dm = {});

std::string report_json(const RunReport& report);
std::string summary_text(const RunReport& report);

// index,label,feasible,dm_sum_bits,acc_raw,acc_loss,perf_loss,objective,
// on_frontier,chosen
std::string candidates_csv(const QuantPlan& plan);

// alpha,label,acc_loss,perf_loss,objective,dm_sum_bits,energy_j,
// normalized_energy
std::string sweep_csv(const SweepReport& report);
std::string sweep_json(const SweepReport& report);
std::string sweep_summary(const SweepReport& report);

}  // namespace bfps
