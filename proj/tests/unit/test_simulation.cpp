#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"
#include "aeronet/fixture.hpp"
#include "aeronet/simulation.hpp"

using namespace aeronet;

namespace {

// A scenario small enough for unit tests: 12 users, 64 slots, 2 UAVs.
Scenario tiny() {
  Scenario s = default_scenario();
  s.n_uavs = 2;
  s.n_slots = 64;
  s.fixture.n_users = 12;
  s.esn.reservoir_size = 60;
  s.ga.generations = 5;
  s.ga.population_size = 6;
  s.rl.placement_trials = 3;
  s.rl.placement_iterations = 200;
  s.rl.slot_episodes = 5;
  s.rl.slot_iterations = 5;
  s.validate();
  return s;
}

TraceSet stationary(const Scenario& s) {
  TraceSet t;
  t.slot_seconds = s.slot_seconds;
  t.n_slots = s.n_slots;
  for (int u = 0; u < 6; ++u) {
    const Point2 p{u < 3 ? 410.0 + 10 * u : 1490.0 + 10 * u, u < 3 ? 380.0 : 1620.0};
    t.users.push_back({"s" + std::to_string(u), std::vector<Point2>(s.n_slots, p), s.slot_seconds});
  }
  return t;
}

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("the truth guard refuses reads during planning") {
    const Scenario s = tiny();
    const TraceSet traces = resolve_traces(s, std::nullopt);
    TruthGuard guard(traces);
    CHECK_NOTHROW(guard.snapshot(50));
    {
      TruthGuard::PlanningScope scope(guard);
      CHECK_THROWS_AS(guard.snapshot(50), PlanningLeakError);
    }
    CHECK_FALSE(guard.poisoned());

    bool checked = false;
    RunHooks hooks;
    hooks.during_planning = [&](const TruthGuard& g) {
      checked = true;
      CHECK_THROWS_AS(g.snapshot(60), PlanningLeakError);
    };
    (void)run_pipeline(s, traces, hooks);
    CHECK(checked);
  }

  TEST_CASE("the static controller never moves") {
    Scenario s = tiny();
    s.controller = ControllerKind::static_placement;
    const RunReport r = run_pipeline(s, resolve_traces(s, std::nullopt));
    REQUIRE(r.slots.size() == 16);
    for (const auto& slot : r.slots) CHECK(slot.grid_states == r.slots.front().grid_states);
  }

  TEST_CASE("following stationary users settles above their centroids") {
    Scenario s = tiny();
    s.controller = ControllerKind::gakmeans_follow;
    const TraceSet t = stationary(s);
    const RunReport r = run_pipeline(s, t);
    const auto want = centroid_above(r.clustering.centroids, s.grid);
    for (std::size_t j = 0; j < want.size(); ++j) CHECK(r.slots.back().grid_states[j] == want[j]);
  }

  TEST_CASE("learned runs are clean, reproducible and not worse than static") {
    Scenario s = tiny();
    const TraceSet traces = resolve_traces(s, std::nullopt);
    const CohortPrediction pred = predict_stage(s, traces);
    const RunReport a = run_pipeline(s, traces, pred);
    const RunReport b = run_pipeline(s, traces, pred);
    CHECK(run_report_to_json(a, s, false).dump() == run_report_to_json(b, s, false).dump());
    CHECK(audit_trajectory(a, s).empty());
    Scenario st = s;
    st.controller = ControllerKind::static_placement;
    CHECK(a.mean_sum_rate_bps >= run_pipeline(st, traces, pred).mean_sum_rate_bps);
    CHECK(a.placement_sum_rate_bps >= a.placement_baseline_sum_rate_bps);
  }

  TEST_CASE("an infeasible power budget aborts with the bound") {
    Scenario s = tiny();
    s.channel.min_rate_bps = 4e6;
    const TraceSet traces = resolve_traces(s, std::nullopt);
    try {
      (void)run_pipeline(s, traces);
      FAIL("no error");
    } catch (const InfeasiblePowerError& e) {
      CHECK(e.bound_watts() > s.p_max_w);
      CHECK(std::string(e.what()).find("bound") != std::string::npos);
    }
  }

  TEST_CASE("traces that miss slots are refused") {
    Scenario s = tiny();
    TraceSet t = stationary(s);
    t.n_slots = 40;
    for (auto& u : t.users) u.positions.resize(40);
    const auto path = std::filesystem::temp_directory_path() / "aeronet_short_traces.json";
    write_trace_file(t, path);
    CHECK_THROWS_AS(resolve_traces(s, path), ValidationError);
    std::filesystem::remove(path);
  }

  TEST_CASE("the audit flags jumps and out-of-range altitude") {
    Scenario s = tiny();
    s.controller = ControllerKind::static_placement;
    RunReport r = run_pipeline(s, stationary(s));
    r.slots[3].grid_states[0].cell_x += 2;
    r.slots[3].uavs[0].x += 2 * s.grid.cell_x_m;
    r.slots[5].uavs[1].h = 400;
    CHECK(audit_trajectory(r, s).size() >= 3);
  }

  TEST_CASE("sweeps") {
    const Scenario s = tiny();
    CHECK(sweep(s, nullptr, "n_uavs", {}).empty());
    CHECK_THROWS_AS(sweep(s, nullptr, "colour", {"1"}), ValidationError);
    const TraceSet t = resolve_traces(s, std::nullopt);
    const auto rows = sweep(s, &t, "controller", {"static", "gakmeans_follow"}, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].report.controller == ControllerKind::static_placement);
    const std::string csv = sweep_csv("controller", rows);
    CHECK(csv.rfind("axis,value,controller,seed", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  TEST_CASE("run report files") {
    Scenario s = tiny();
    const RunReport r = run_pipeline(s, resolve_traces(s, std::nullopt));
    const auto dir = std::filesystem::temp_directory_path() / "aeronet_report_unit";
    std::filesystem::remove_all(dir);
    write_run_report(r, s, dir);
    for (const char* f : {"report.json", "sum_rate.csv", "trajectories.geojson", "learning_curve.csv"}) {
      CHECK(std::filesystem::exists(dir / f));
    }
    std::ifstream in(dir / "report.json");
    const auto doc = nlohmann::json::parse(in);
    CHECK_FALSE(doc.contains("wall_clock_seconds"));
    std::ifstream geo(dir / "trajectories.geojson");
    const auto g = nlohmann::json::parse(geo);
    CHECK(g["type"] == "FeatureCollection");
    CHECK(g["features"].size() == s.n_uavs);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("fixture check-ins survive the CSV round trip") {
    Scenario s = tiny();
    const auto users = generate_checkins(s.fixture, s.extent);
    CHECK(users.size() == 12);
    const auto parsed = parse_checkins_csv(checkins_to_csv(users), s.min_reports);
    CHECK(parsed.size() == users.size());
    for (const auto& u : parsed) {
      for (const auto& c : u.checkins) CHECK(s.extent.contains(project_point(c.lat, c.lon, s.extent)));
    }
  }
}
