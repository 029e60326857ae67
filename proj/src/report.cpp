#include "hjnav/report.hpp"

#include "hjnav/error.hpp"

namespace hjnav {

using nlohmann::ordered_json;

std::vector<ControllerRun> run_controllers(const ExperimentConfig& cfg,
                                           const std::vector<Mission>& missions,
                                           const std::vector<ControllerKind>& kinds,
                                           unsigned workers) {
  std::vector<ControllerRun> runs;
  for (ControllerKind kind : kinds) {
    BatchSpec spec;
    spec.kind = kind;
    spec.inputs = cfg.controller_inputs();
    spec.series = cfg.series_factory();
    spec.sim = cfg.sim;
    spec.master_seed = cfg.seed;
    spec.workers = workers;
    runs.push_back({kind, run_batch(missions, cfg.scenario.truth, cfg.scenario.obstacles, spec)});
  }
  return runs;
}

namespace {

ordered_json tally_json(const OutcomeTally& t) {
  ordered_json j;
  j["n_total"] = t.n_total;
  j["n_success"] = t.n_success;
  j["n_stranded"] = t.n_stranded;
  j["n_timeout"] = t.n_timeout;
  j["n_left_region"] = t.n_left_region;
  j["n_aborted"] = t.n_aborted;
  if (t.n_total > 0) {
    const OutcomeRates r = rates(t);
    j["stranding_rate"] = r.stranding;
    j["success_rate"] = r.success;
    j["timeout_rate"] = r.timeout;
    j["left_region_rate"] = r.left_region;
    j["aborted_rate"] = r.aborted;
  }
  return j;
}

}  // namespace

ordered_json stats_report(const std::vector<ControllerRun>& runs, ControllerKind baseline) {
  ordered_json out;
  out["baseline"] = std::string(to_string(baseline));
  ordered_json ctrl = ordered_json::object();
  const ControllerRun* base = nullptr;
  for (const auto& r : runs) {
    ctrl[std::string(to_string(r.kind))] = tally_json(tally(r.records));
    if (r.kind == baseline) base = &r;
  }
  out["controllers"] = ctrl;
  ordered_json tests = ordered_json::object();
  if (base) {
    const OutcomeTally tb = tally(base->records);
    for (const auto& r : runs) {
      if (r.kind == baseline) continue;
      const OutcomeTally ta = tally(r.records);
      ordered_json t;
      try {
        const TestResult res = z_prop_test(tb.n_stranded, tb.n_total, ta.n_stranded, ta.n_total);
        t["z"] = res.z;
        t["p_one_sided"] = res.p;
      } catch (const Error& e) {
        t["z"] = nullptr;
        t["p_one_sided"] = nullptr;
        t["note"] = e.what();
      }
      tests[std::string(to_string(r.kind))] = t;
    }
  }
  out["tests_vs_baseline"] = tests;
  return out;
}

ordered_json batch_summary(const std::vector<ControllerRun>& runs, ControllerKind baseline) {
  ordered_json out = stats_report(runs, baseline);
  out["region_exit"] = "terminate on first exit";
  ordered_json rows = ordered_json::array();
  const std::size_t n = runs.empty() ? 0 : runs.front().records.size();
  for (std::size_t i = 0; i < n; ++i) {
    ordered_json row;
    row["mission"] = i;
    for (const auto& r : runs) {
      const SimulationRecord& rec = r.records[i];
      ordered_json cell;
      cell["outcome"] = std::string(to_string(rec.outcome));
      cell["outcome_time_s"] = rec.outcome_time;
      if (!rec.diagnostic.empty()) cell["diagnostic"] = rec.diagnostic;
      row[std::string(to_string(r.kind))] = cell;
    }
    rows.push_back(row);
  }
  out["missions"] = rows;
  return out;
}

}  // namespace hjnav
