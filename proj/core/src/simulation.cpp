#include "aeronet/simulation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"
#include "aeronet/fixture.hpp"
#include "aeronet/log.hpp"
#include "aeronet/rng.hpp"

namespace aeronet {

std::vector<Point2> TruthGuard::snapshot(std::size_t slot) const {
  if (poisoned_) throw PlanningLeakError(fmt::format("true positions of slot {} read during planning", slot));
  return truth_->snapshot(slot);
}

TraceSet resolve_traces(const Scenario& scenario, const std::optional<std::filesystem::path>& path) {
  TraceSet traces;
  if (!path) {
    traces = make_fixture_traces(scenario.fixture, scenario.extent);
  } else if (path->extension() == ".csv") {
    const auto local = project_to_local(ingest_checkins(*path, scenario.min_reports), scenario.extent,
                                        scenario.out_of_extent);
    traces = interpolate_cohort(local, scenario.slot_seconds, scenario.n_slots);
  } else {
    traces = read_trace_file(*path);
  }
  if (traces.users.empty()) throw ValidationError("empty cohort");
  if (traces.n_slots < scenario.n_slots) {
    throw ValidationError(fmt::format("traces cover {} slots but the scenario needs {}", traces.n_slots,
                                      scenario.n_slots));
  }
  if (traces.n_slots > scenario.n_slots) {
    traces.n_slots = scenario.n_slots;
    for (auto& u : traces.users) u.positions.resize(scenario.n_slots);
  }
  for (const auto& u : traces.users) {
    if (u.positions.size() != traces.n_slots) throw ValidationError("trace of user " + u.user_id + " is missing slots");
    for (const auto& p : u.positions) {
      if (!scenario.extent.contains(p)) {
        throw ValidationError("trace of user " + u.user_id + " leaves the world extent");
      }
    }
  }
  return traces;
}

CohortPrediction predict_stage(const Scenario& scenario, const TraceSet& traces) {
  EsnConfig config = scenario.esn;
  config.rng_seed = derive_seed(scenario.master_seed, streams::esn);
  return predict_cohort(traces, config, scenario.extent);
}

std::vector<Point2> predicted_snapshot(const CohortPrediction& prediction, std::size_t i) {
  std::vector<Point2> out;
  out.reserve(prediction.predicted.size());
  for (const auto& user : prediction.predicted) out.push_back(user.at(i));
  return out;
}

Clustering cluster_stage(const Scenario& scenario, std::span<const Point2> snapshot) {
  GaParams ga = scenario.ga;
  ga.rng_seed = derive_seed(scenario.master_seed, streams::clustering);
  return gak_means(snapshot, scenario.n_uavs, ga);
}

double check_power_budget(const Scenario& scenario, const Clustering& clustering) {
  const ChannelParams params = scenario.channel.params();
  const auto sizes = cluster_sizes(clustering.assignment, clustering.size());
  const double bound = pmax_lower_bound(sizes, scenario.grid.altitude_levels, params);
  if (scenario.p_max_w < bound) {
    throw InfeasiblePowerError(
        fmt::format("p_max_w = {} W is below the minimum-rate power bound of {:.6g} W", scenario.p_max_w, bound),
        bound);
  }
  return bound;
}

PlacementResult placement_stage(const Scenario& scenario, std::span<const Point2> snapshot,
                                const Clustering& clustering, bool power_control, QTableSet* tables) {
  PlacementOptions options;
  options.power_control = power_control;
  options.train.episodes = scenario.rl.placement_trials;
  options.train.steps_per_episode = scenario.rl.placement_iterations;
  options.train.epsilon = scenario.rl.epsilon;
  options.train.learning_rate = scenario.rl.learning_rate;
  options.train.discount = scenario.rl.discount;
  options.train.selection = scenario.rl.selection;
  options.train.curve_stride = scenario.rl.curve_stride;
  options.train.seed = derive_seed(scenario.master_seed, streams::placement);
  return initial_placement(snapshot, clustering.assignment, clustering.centroids, scenario.grid,
                           scenario.channel.params(), options, tables);
}

namespace {

std::vector<Point2> cluster_means(std::span<const Point2> points, const Clustering& clustering) {
  Clustering c = clustering;
  recompute_centroids(c, points);
  return c.centroids;
}

SlotRecord score_slot(std::size_t slot, const std::vector<AgentState>& states, const Clustering& clustering,
                      const std::vector<Point2>& truth, const Scenario& scenario, const ChannelParams& params) {
  SlotRecord rec;
  rec.slot = slot;
  rec.grid_states = states;
  for (const auto& s : states) rec.uavs.push_back(to_uav_state(s, scenario.grid));
  for (const auto& lb : evaluate_links(clustering.assignment, rec.uavs, truth, params)) {
    rec.user_rates_bps.push_back(lb.rate_bps);
    rec.sum_rate_bps += lb.rate_bps;
  }
  rec.constraints = check_constraints(rec.uavs, clustering.assignment, truth, params,
                                      {scenario.h_min, scenario.h_max, scenario.p_max_w});
  return rec;
}

}  // namespace

RunReport run_pipeline(const Scenario& scenario, const TraceSet& traces, const RunHooks& hooks) {
  return run_pipeline(scenario, traces, predict_stage(scenario, traces), hooks);
}

RunReport run_pipeline(const Scenario& scenario, const TraceSet& traces, const CohortPrediction& prediction,
                       const RunHooks& hooks) {
  scenario.validate();
  const auto started = std::chrono::steady_clock::now();
  if (traces.users.size() < scenario.n_uavs) {
    throw ValidationError(fmt::format("{} users cannot fill {} clusters", traces.users.size(), scenario.n_uavs));
  }
  if (prediction.predicted.size() != traces.users.size()) {
    throw ValidationError("prediction does not match the trace set");
  }
  const ChannelParams params = scenario.channel.params();
  const std::size_t first = prediction.first_slot;
  const std::size_t flight = traces.n_slots - first;
  TruthGuard guard(traces);

  RunReport report;
  report.controller = scenario.controller;
  report.seed = scenario.master_seed;
  report.first_slot = first;
  report.prediction_mse = prediction.mse;

  const auto t0_snapshot = predicted_snapshot(prediction, 0);
  report.clustering = cluster_stage(scenario, t0_snapshot);
  report.pmax_bound_w = check_power_budget(scenario, report.clustering);
  const auto centroid_start = centroid_above(report.clustering.centroids, scenario.grid);

  const bool learned = scenario.controller == ControllerKind::learned ||
                       scenario.controller == ControllerKind::learned_no_power_control;
  const bool power_control = scenario.controller == ControllerKind::learned;

  QTableSet tables(scenario.n_uavs, scenario.grid.state_count());
  std::vector<AgentState> committed = centroid_start;
  if (learned) {
    TruthGuard::PlanningScope scope(guard);
    if (hooks.during_planning) hooks.during_planning(guard);
    PlacementResult placement = placement_stage(scenario, t0_snapshot, report.clustering, power_control, &tables);
    committed = placement.states;
    report.placement_sum_rate_bps = placement.sum_rate;
    report.placement_baseline_sum_rate_bps = placement.baseline_sum_rate;
    report.placement_trials = std::move(placement.training.episodes);
    report.learning_curve = std::move(placement.training.curve);
  }

  const std::uint64_t trajectory_seed = derive_seed(scenario.master_seed, streams::trajectory);
  for (std::size_t i = 0; i < flight; ++i) {
    if (i > 0 && scenario.controller != ControllerKind::static_placement) {
      TruthGuard::PlanningScope scope(guard);
      if (hooks.during_planning) hooks.during_planning(guard);
      const auto planned = predicted_snapshot(prediction, i);
      if (learned) {
        UavPlacementEnv env(scenario.grid, params, planned, report.clustering.assignment, scenario.n_uavs, committed,
                            power_control);
        TrainOptions options;
        options.episodes = scenario.rl.slot_episodes;
        options.steps_per_episode = scenario.rl.slot_iterations;
        // The schedule keeps decaying from where placement left off.
        const std::size_t done = scenario.rl.placement_trials + (i - 1) * scenario.rl.slot_episodes;
        options.epsilon = {scenario.rl.epsilon.at(done), scenario.rl.epsilon.decay, scenario.rl.epsilon.floor};
        options.learning_rate = scenario.rl.learning_rate;
        options.discount = scenario.rl.discount;
        options.selection = scenario.rl.selection;
        options.seed = derive_seed(trajectory_seed, i);
        const TrainResult result = train(env, tables, options);
        std::vector<AgentState> target;
        for (auto s : result.best_states) target.push_back(decode_state(s, scenario.grid));
        for (std::size_t j = 0; j < committed.size(); ++j) committed[j] = step_towards(committed[j], target[j]);
      } else {
        const auto centroids = cluster_means(planned, report.clustering);
        const auto target = centroid_above(centroids, scenario.grid);
        for (std::size_t j = 0; j < committed.size(); ++j) committed[j] = step_towards(committed[j], target[j]);
      }
    }
    report.slots.push_back(score_slot(first + i, committed, report.clustering, guard.snapshot(first + i), scenario,
                                      params));
  }

  double total = 0.0;
  for (const auto& s : report.slots) {
    total += s.sum_rate_bps;
    report.min_rate_violations += s.constraints.count(ConstraintKind::min_rate);
  }
  report.mean_sum_rate_bps = report.slots.empty() ? 0.0 : total / static_cast<double>(report.slots.size());
  if (report.min_rate_violations > 0) {
    logger().warn("{} user-slots fall below the minimum rate of {} bps", report.min_rate_violations,
                  params.min_rate_bps);
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

RunReport run_baseline_gakmeans_follow(const Scenario& scenario, const TraceSet& traces) {
  Scenario s = scenario;
  s.controller = ControllerKind::gakmeans_follow;
  return run_pipeline(s, traces);
}

std::vector<std::string> audit_trajectory(const RunReport& report, const Scenario& scenario) {
  std::vector<std::string> problems;
  const double tol = 1e-9;
  for (std::size_t i = 0; i < report.slots.size(); ++i) {
    const auto& cur = report.slots[i];
    for (std::size_t j = 0; j < cur.uavs.size(); ++j) {
      const auto& u = cur.uavs[j];
      if (u.h < scenario.h_min - tol || u.h > scenario.h_max + tol) {
        problems.push_back(fmt::format("slot {} uav {}: altitude {} outside [{}, {}]", cur.slot, j, u.h,
                                       scenario.h_min, scenario.h_max));
      }
      if (u.p_total < 0.0 || u.p_total > scenario.p_max_w + tol) {
        problems.push_back(fmt::format("slot {} uav {}: power {} outside [0, {}]", cur.slot, j, u.p_total,
                                       scenario.p_max_w));
      }
      if (i == 0) continue;
      const auto& a = report.slots[i - 1].grid_states[j];
      const auto& b = cur.grid_states[j];
      auto gap = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
      const auto& prev = report.slots[i - 1].uavs[j];
      const bool grid_ok = gap(a.cell_x, b.cell_x) <= 1 && gap(a.cell_y, b.cell_y) <= 1 &&
                           gap(a.h_idx, b.h_idx) <= 1 && gap(a.p_idx, b.p_idx) <= 1;
      const bool metric_ok = std::abs(u.x - prev.x) <= scenario.grid.cell_x_m + tol &&
                             std::abs(u.y - prev.y) <= scenario.grid.cell_y_m + tol;
      if (!grid_ok || !metric_ok) {
        problems.push_back(fmt::format("slot {} uav {}: moved more than one grid step", cur.slot, j));
      }
    }
  }
  return problems;
}

std::vector<SweepRow> sweep(const Scenario& base, const TraceSet* traces, const std::string& axis,
                            const std::vector<std::string>& values, std::size_t jobs) {
  std::vector<Scenario> scenarios;
  scenarios.reserve(values.size());
  for (const auto& v : values) scenarios.push_back(with_axis(base, axis, v));
  for (const auto& s : scenarios) s.validate();

  std::vector<SweepRow> rows(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        const TraceSet local = traces != nullptr ? *traces : resolve_traces(scenarios[i], std::nullopt);
        rows[i] = {values[i], run_pipeline(scenarios[i], local)};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, values.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

std::string sweep_csv(const std::string& axis, const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,controller,seed,prediction_mse_m,mean_sum_rate_bps,min_rate_violations\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.6f},{:.3f},{}\n", axis, r.value, to_string(r.report.controller), r.report.seed,
                       r.report.prediction_mse, r.report.mean_sum_rate_bps, r.report.min_rate_violations);
  }
  return out;
}

nlohmann::json run_report_to_json(const RunReport& report, const Scenario& scenario, bool include_wall_clock) {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : report.slots) {
    nlohmann::json uavs = nlohmann::json::array();
    for (const auto& u : s.uavs) uavs.push_back({{"x", u.x}, {"y", u.y}, {"h", u.h}, {"p_w", u.p_total}});
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : s.constraints.violations) {
      violations.push_back({{"constraint", to_string(v.kind)}, {"entity", v.entity}, {"value", v.value},
                            {"limit", v.limit}});
    }
    slots.push_back({{"slot", s.slot},
                     {"sum_rate_bps", s.sum_rate_bps},
                     {"user_rates_bps", s.user_rates_bps},
                     {"uavs", std::move(uavs)},
                     {"violations", std::move(violations)}});
  }
  nlohmann::json trials = nlohmann::json::array();
  for (std::size_t i = 0; i < report.placement_trials.size(); ++i) {
    const auto& t = report.placement_trials[i];
    trials.push_back({{"trial", i},
                      {"best_sum_rate_bps", t.best_metric},
                      {"final_sum_rate_bps", t.final_metric},
                      {"cum_reward", t.cum_reward}});
  }
  nlohmann::json doc = {{"controller", to_string(report.controller)},
                        {"seed", report.seed},
                        {"first_slot", report.first_slot},
                        {"flight_slots", report.slots.size()},
                        {"prediction_mse_m", report.prediction_mse},
                        {"mean_sum_rate_bps", report.mean_sum_rate_bps},
                        {"pmax_bound_w", report.pmax_bound_w},
                        {"min_rate_violations", report.min_rate_violations},
                        {"placement",
                         {{"sum_rate_bps", report.placement_sum_rate_bps},
                          {"centroid_baseline_sum_rate_bps", report.placement_baseline_sum_rate_bps},
                          {"trials", std::move(trials)}}},
                        {"clustering", clustering_to_json(report.clustering)},
                        {"scenario", scenario_to_json(scenario)},
                        {"slots", std::move(slots)}};
  if (include_wall_clock) doc["wall_clock_seconds"] = report.wall_clock_seconds;
  return doc;
}

std::string sum_rate_csv(const RunReport& report, const Scenario& scenario) {
  std::string out = "slot,time_s,sum_rate_bps,min_user_rate_bps,min_rate_violations\n";
  for (const auto& s : report.slots) {
    const double min_rate =
        s.user_rates_bps.empty() ? 0.0 : *std::min_element(s.user_rates_bps.begin(), s.user_rates_bps.end());
    out += fmt::format("{},{:.1f},{:.6f},{:.6f},{}\n", s.slot, static_cast<double>(s.slot) * scenario.slot_seconds,
                       s.sum_rate_bps, min_rate, s.constraints.count(ConstraintKind::min_rate));
  }
  return out;
}

std::string learning_curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "trial,iteration,sum_rate_bps,cum_reward\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{},{:.6f},{}\n", p.trial, p.iteration, p.metric, p.cum_reward);
  }
  return out;
}

nlohmann::json trajectories_geojson(const RunReport& report, const Scenario& scenario) {
  nlohmann::json features = nlohmann::json::array();
  const std::size_t n = report.slots.empty() ? 0 : report.slots.front().uavs.size();
  for (std::size_t j = 0; j < n; ++j) {
    nlohmann::json coords = nlohmann::json::array();
    nlohmann::json power = nlohmann::json::array();
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : report.slots) {
      const auto& u = s.uavs[j];
      const auto [lat, lon] = unproject_point({u.x, u.y}, scenario.extent);
      coords.push_back({std::round(lon * 1e7) / 1e7, std::round(lat * 1e7) / 1e7, u.h});
      power.push_back(u.p_total);
      slots.push_back(s.slot);
    }
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                        {"properties", {{"uav", j}, {"slots", std::move(slots)}, {"power_w", std::move(power)}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

void write_run_report(const RunReport& report, const Scenario& scenario, const std::filesystem::path& dir,
                      bool include_wall_clock) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << body;
  };
  write("report.json", run_report_to_json(report, scenario, include_wall_clock).dump(1) + "\n");
  write("sum_rate.csv", sum_rate_csv(report, scenario));
  write("trajectories.geojson", trajectories_geojson(report, scenario).dump(1) + "\n");
  write("learning_curve.csv", learning_curve_csv(report.learning_curve));
}

}  // namespace aeronet
