#pragma once

// End-to-end pipeline: traces -> ESN prediction -> clustering -> initial
// placement -> per-slot trajectory and power control, scored against the
// true user positions. Also the baseline controllers, parameter sweeps and
// the run-report writer.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aeronet/channel.hpp"
#include "aeronet/clustering.hpp"
#include "aeronet/esn.hpp"
#include "aeronet/marl.hpp"
#include "aeronet/scenario.hpp"

namespace aeronet {

/// Holds the true user positions of the flight period. While poisoned,
/// every read throws PlanningLeakError; the pipeline poisons it for the
/// duration of each planning step.
class TruthGuard {
public:
  explicit TruthGuard(const TraceSet& truth) : truth_(&truth) {}

  [[nodiscard]] std::vector<Point2> snapshot(std::size_t slot) const;
  [[nodiscard]] bool poisoned() const noexcept { return poisoned_; }

  /// Poisons the guard for the lifetime of the scope.
  class PlanningScope {
  public:
    explicit PlanningScope(TruthGuard& guard) : guard_(guard) { guard_.poisoned_ = true; }
    ~PlanningScope() { guard_.poisoned_ = false; }
    PlanningScope(const PlanningScope&) = delete;
    PlanningScope& operator=(const PlanningScope&) = delete;

  private:
    TruthGuard& guard_;
  };

private:
  const TraceSet* truth_;
  bool poisoned_ = false;
};

struct SlotRecord {
  std::size_t slot = 0;  // absolute slot index in the trace set
  double sum_rate_bps = 0.0;
  std::vector<double> user_rates_bps;
  std::vector<AgentState> grid_states;
  std::vector<UavState> uavs;
  ConstraintReport constraints;
};

struct RunReport {
  ControllerKind controller = ControllerKind::learned;
  std::uint64_t seed = 0;
  std::size_t first_slot = 0;
  double prediction_mse = 0.0;
  double mean_sum_rate_bps = 0.0;
  double pmax_bound_w = 0.0;
  Clustering clustering;
  double placement_sum_rate_bps = 0.0;           // on the predicted first-slot snapshot
  double placement_baseline_sum_rate_bps = 0.0;  // centroid-above on the same snapshot
  std::vector<EpisodeStats> placement_trials;
  std::vector<CurvePoint> learning_curve;
  std::vector<SlotRecord> slots;
  std::size_t min_rate_violations = 0;
  double wall_clock_seconds = 0.0;
};

/// Optional instrumentation. `during_planning` runs inside every planning
/// step with the truth guard poisoned.
struct RunHooks {
  std::function<void(const TruthGuard&)> during_planning;
};

/// Traces from a trace file (JSON), a check-in CSV (ingested with the
/// scenario's filter and extent policy), or the synthetic fixture when
/// `path` is empty.
/// Throws ValidationError when the traces do not cover the scenario slots.
TraceSet resolve_traces(const Scenario& scenario, const std::optional<std::filesystem::path>& path);

/// ESN prediction of the last quarter of every trace.
CohortPrediction predict_stage(const Scenario& scenario, const TraceSet& traces);

/// Predicted positions of every user at flight slot `i` (0 = first test slot).
std::vector<Point2> predicted_snapshot(const CohortPrediction& prediction, std::size_t i);

/// GAK-means on a snapshot with the scenario's GA parameters and seed.
Clustering cluster_stage(const Scenario& scenario, std::span<const Point2> snapshot);

/// Power lower bound of the clustering over the scenario altitudes. Throws
/// InfeasiblePowerError carrying the bound when p_max_w lies below it.
double check_power_budget(const Scenario& scenario, const Clustering& clustering);

/// Multi-agent Q-learning placement on a snapshot.
PlacementResult placement_stage(const Scenario& scenario, std::span<const Point2> snapshot,
                                const Clustering& clustering, bool power_control, QTableSet* tables = nullptr);

/// Runs the scenario's controller. Controllers plan on predicted positions
/// and are scored on true ones.
RunReport run_pipeline(const Scenario& scenario, const TraceSet& traces, const RunHooks& hooks = {});
/// Same, reusing an existing prediction of the traces.
RunReport run_pipeline(const Scenario& scenario, const TraceSet& traces, const CohortPrediction& prediction,
                       const RunHooks& hooks = {});

/// Every slot, each UAV moves one grid step per dimension towards its
/// cluster's predicted centroid at the middle altitude and initial power.
RunReport run_baseline_gakmeans_follow(const Scenario& scenario, const TraceSet& traces);

/// Problems with the committed trajectory: more than one grid step per
/// dimension between slots, or altitude/power outside the limits. Empty
/// when the run is clean.
std::vector<std::string> audit_trajectory(const RunReport& report, const Scenario& scenario);

struct SweepRow {
  std::string value;
  RunReport report;
};

/// One run per value of `axis`, `jobs` runs at a time. With no trace set the
/// fixture of each derived scenario is used.
std::vector<SweepRow> sweep(const Scenario& base, const TraceSet* traces, const std::string& axis,
                            const std::vector<std::string>& values, std::size_t jobs = 1);
std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows);

nlohmann::json run_report_to_json(const RunReport& report, const Scenario& scenario, bool include_wall_clock);
std::string sum_rate_csv(const RunReport& report, const Scenario& scenario);
std::string learning_curve_csv(std::span<const CurvePoint> curve);
nlohmann::json trajectories_geojson(const RunReport& report, const Scenario& scenario);

/// Writes report.json, sum_rate.csv, trajectories.geojson and
/// learning_curve.csv into `dir` (created if needed).
void write_run_report(const RunReport& report, const Scenario& scenario, const std::filesystem::path& dir,
                      bool include_wall_clock = false);

}  // namespace aeronet
