#include "bfps/pipeline.hpp"

#include <fstream>
#include <system_error>

#include "bfps/error.hpp"

namespace bfps {

namespace {

struct Prepared {
  ModelDesc model;
  AccuracySource source;
};

Prepared prepare(const RunConfig& config) {
  config.validate();
  if (config.model_path.empty()) fail("no model file given");
  Prepared p;
  p.model = load_model(config.model_path).model;
  if (config.loss_source == LossSource::proxy) {
    CodecOptions codec;
    codec.exponent_bias = config.exponent_bias;
    p.source = AccuracySource::proxy(load_samples(p.model, config.sample_options()), codec);
  } else {
    p.source = AccuracySource::from_table(load_accuracy_table(config.table_path),
                                          LookupOptions{config.compose_table});
  }
  return p;
}

QuantPlan select_plan(const SearchSession& session, const RunConfig& config,
                      double alpha) {
  return config.decompose ? session.decomposed_plan(alpha, config.mode)
                          : session.plan(alpha, config.mode);
}

struct Baseline {
  std::optional<QuantPlan> plan;
  std::optional<EnergyReport> energy;
  std::string note;
};

Baseline baseline_for(const ModelDesc& model, const RunConfig& config) {
  Baseline b;
  if (!config.energy_baseline) {
    b.note = "disabled";
    return b;
  }
  try {
    b.plan = original_plan(model, config.capacity_bits, config.search_options().tiling);
    b.energy = energy(*b.plan, model, config.energy);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::infeasible) throw;
    b.note = e.what();
  }
  return b;
}

EnergyReport plan_energy(const QuantPlan& plan, const ModelDesc& model,
                         const RunConfig& config, const Baseline& baseline) {
  auto e = energy(plan, model, config.energy);
  if (baseline.energy && baseline.energy->energy_pj > 0.0) {
    e.normalized = e.energy_pj / baseline.energy->energy_pj;
    e.baseline = "float32";
  }
  return e;
}

// Files written by one invocation; removed again unless committed.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail_io("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    files_.push_back(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot write '" + path.string() + "'");
    out << content;
    out.close();
    if (!out) fail_io("error writing '" + path.string() + "'");
  }

  RunOutputs commit() {
    committed_ = true;
    return {files_};
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

}  // namespace

RunReport execute(const RunConfig& config) {
  auto prep = prepare(config);
  const SearchSession session(prep.model, config.candidate_space(), prep.source,
                              config.search_options());
  RunReport r;
  r.config = config;
  r.plan = select_plan(session, config, config.alpha);
  auto base = baseline_for(prep.model, config);
  r.energy = plan_energy(r.plan, prep.model, config, base);
  r.baseline = std::move(base.plan);
  r.baseline_energy = std::move(base.energy);
  r.baseline_note = std::move(base.note);
  return r;
}

SweepReport execute_sweep(const RunConfig& config) {
  if (config.sweep_alphas.empty()) fail("alpha list is empty");
  auto prep = prepare(config);
  const SearchSession session(prep.model, config.candidate_space(), prep.source,
                              config.search_options());
  SweepReport r;
  r.config = config;
  const auto base = baseline_for(prep.model, config);
  r.baseline_energy = base.energy;
  r.baseline_note = base.note;
  for (double alpha : config.sweep_alphas) {
    SweepRow row;
    row.alpha = alpha;
    row.plan = select_plan(session, config, alpha);
    row.energy = plan_energy(row.plan, prep.model, config, base);
    r.rows.push_back(std::move(row));
  }
  return r;
}

RunOutputs run(const RunConfig& config, RunReport* report) {
  const auto r = execute(config);
  OutputSet out(config.output_dir);
  out.write("plan.json", plan_json(r.plan));
  out.write("report.json", report_json(r));
  out.write("summary.txt", summary_text(r));
  if (config.write_csv) out.write("candidates.csv", candidates_csv(r.plan));
  if (report) *report = r;
  return out.commit();
}

RunOutputs sweep_alpha(const RunConfig& config, SweepReport* report) {
  const auto r = execute_sweep(config);
  OutputSet out(config.output_dir);
  out.write("sweep.json", sweep_json(r));
  out.write("sweep.txt", sweep_summary(r));
  if (config.write_csv) out.write("sweep.csv", sweep_csv(r));
  if (report) *report = r;
  return out.commit();
}

}  // namespace bfps
