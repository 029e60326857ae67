#pragma once

#include <vector>

#include <json.hpp>

#include "hjnav/scenario.hpp"

namespace hjnav {

struct ControllerRun {
  ControllerKind kind;
  std::vector<SimulationRecord> records;
};

/// Runs every controller of `kinds` over the missions with the experiment's
/// forecast model and seeds.
std::vector<ControllerRun> run_controllers(const ExperimentConfig& cfg,
                                           const std::vector<Mission>& missions,
                                           const std::vector<ControllerKind>& kinds,
                                           unsigned workers);

/// Tallies, rates and one-sided z tests of each controller against the
/// baseline (H_A: baseline strands more often).
nlohmann::ordered_json stats_report(const std::vector<ControllerRun>& runs, ControllerKind baseline);

/// stats_report plus per-mission outcome rows. Contains nothing that
/// depends on wall-clock time or worker count.
nlohmann::ordered_json batch_summary(const std::vector<ControllerRun>& runs,
                                     ControllerKind baseline);

}  // namespace hjnav
