// aeronet: command-line front end. One subcommand per pipeline stage.
//
// Exit codes: 0 success, 1 usage error or unreadable input, 2 invalid
// scenario or data (including an infeasible power budget).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"
#include "aeronet/fixture.hpp"
#include "aeronet/log.hpp"
#include "aeronet/simulation.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aeronet;

struct Inputs {
  std::string scenario;
  std::string traces;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string controller;
};

void add_scenario_flags(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--scenario", in.scenario, "Scenario file; built-in defaults when omitted")
      ->check(CLI::ExistingFile);
  in.seed_opt = cmd->add_option("--seed", in.seed, "Override the scenario's master seed");
}

void add_traces_flag(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--traces", in.traces, "Trace file (.json) or check-in CSV (.csv); bundled fixture when omitted")
      ->check(CLI::ExistingFile);
}

Scenario load(const Inputs& in) {
  Scenario s = in.scenario.empty() ? default_scenario() : load_scenario(in.scenario);
  if (in.seed_opt != nullptr && in.seed_opt->count() > 0) s.master_seed = in.seed;
  if (!in.controller.empty()) s.controller = parse_controller(in.controller);
  s.validate();
  return s;
}

TraceSet traces_for(const Scenario& s, const Inputs& in) {
  return resolve_traces(s, in.traces.empty() ? std::nullopt : std::optional<fs::path>(in.traces));
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

json state_json(const AgentState& s, const GridSpec& grid) {
  const UavState u = to_uav_state(s, grid);
  return {{"cell_x", s.cell_x}, {"cell_y", s.cell_y}, {"h_idx", s.h_idx}, {"p_idx", s.p_idx},
          {"x", u.x},           {"y", u.y},           {"h", u.h},         {"p_w", u.p_total}};
}

// Prediction, clustering and placement shared by `place` and `train`.
struct PlacementRun {
  Clustering clustering;
  PlacementResult placement;
  QTableSet tables;
};

PlacementRun run_placement(const Scenario& s, const TraceSet& traces) {
  const CohortPrediction prediction = predict_stage(s, traces);
  const auto snapshot = predicted_snapshot(prediction, 0);
  PlacementRun run{cluster_stage(s, snapshot), {}, QTableSet(s.n_uavs, s.grid.state_count())};
  check_power_budget(s, run.clustering);
  const bool power_control = s.controller != ControllerKind::learned_no_power_control;
  run.placement = placement_stage(s, snapshot, run.clustering, power_control, &run.tables);
  return run;
}

int cmd_ingest(const Inputs& in, const std::string& input, const std::string& out, const std::string& fixture_csv) {
  const Scenario s = load(in);
  const TraceSet traces = resolve_traces(s, input.empty() ? std::nullopt : std::optional<fs::path>(input));
  write_text(out, trace_set_to_json(traces).dump() + "\n");
  if (!fixture_csv.empty()) write_text(fixture_csv, checkins_to_csv(generate_checkins(s.fixture, s.extent)));
  std::cout << fmt::format("{} users, {} slots of {} s\n", traces.users.size(), traces.n_slots, traces.slot_seconds);
  return 0;
}

int cmd_predict(const Inputs& in, const std::string& out) {
  const Scenario s = load(in);
  const TraceSet traces = traces_for(s, in);
  const CohortPrediction prediction = predict_stage(s, traces);

  TraceSet predicted;
  predicted.slot_seconds = traces.slot_seconds;
  predicted.n_slots = traces.n_slots - prediction.first_slot;
  for (std::size_t u = 0; u < traces.users.size(); ++u) {
    predicted.users.push_back({traces.users[u].user_id, prediction.predicted[u], traces.slot_seconds});
  }
  json doc = trace_set_to_json(predicted);
  doc["first_slot"] = prediction.first_slot;
  doc["mean_rmse_m"] = prediction.mse;
  write_text(out, doc.dump() + "\n");
  std::cout << fmt::format("mean per-user RMSE {:.3f} m over {} users, slots {}..{}\n", prediction.mse, traces.users.size(),
                           prediction.first_slot, traces.n_slots - 1);
  return 0;
}

int cmd_cluster(const Inputs& in, const std::string& out) {
  const Scenario s = load(in);
  const TraceSet traces = traces_for(s, in);
  const CohortPrediction prediction = predict_stage(s, traces);
  const auto snapshot = predicted_snapshot(prediction, 0);
  const Clustering c = cluster_stage(s, snapshot);
  const double bound = check_power_budget(s, c);
  json doc = clustering_to_json(c);
  doc["first_slot"] = prediction.first_slot;
  doc["wcss_m2"] = wcss(c, snapshot);
  doc["pmax_bound_w"] = bound;
  write_text(out, doc.dump(1) + "\n");
  std::cout << fmt::format("{} clusters, wcss {:.1f} m^2, power bound {:.6g} W\n", c.size(), wcss(c, snapshot), bound);
  return 0;
}

int cmd_place(const Inputs& in, const std::string& out) {
  const Scenario s = load(in);
  const PlacementRun run = run_placement(s, traces_for(s, in));
  json states = json::array();
  for (const auto& st : run.placement.states) states.push_back(state_json(st, s.grid));
  json trials = json::array();
  for (const auto& t : run.placement.training.episodes) {
    trials.push_back({{"best_sum_rate_bps", t.best_metric}, {"final_sum_rate_bps", t.final_metric}});
  }
  const json doc = {{"controller", to_string(s.controller)},
                    {"seed", s.master_seed},
                    {"sum_rate_bps", run.placement.sum_rate},
                    {"centroid_baseline_sum_rate_bps", run.placement.baseline_sum_rate},
                    {"uavs", std::move(states)},
                    {"trials", std::move(trials)},
                    {"clustering", clustering_to_json(run.clustering)}};
  write_text(out, doc.dump(1) + "\n");
  std::cout << fmt::format("placement sum rate {:.0f} bps (centroid baseline {:.0f} bps)\n", run.placement.sum_rate,
                           run.placement.baseline_sum_rate);
  return 0;
}

int cmd_train(const Inputs& in, const std::string& out) {
  const Scenario s = load(in);
  const PlacementRun run = run_placement(s, traces_for(s, in));
  const fs::path dir(out);
  write_text(dir / "q_tables.json", q_tables_to_json(run.tables, s.grid, s.rl.epsilon).dump() + "\n");
  write_text(dir / "learning_curve.csv", learning_curve_csv(run.placement.training.curve));
  std::cout << fmt::format("{} trials x {} iterations, best sum rate {:.0f} bps\n", s.rl.placement_trials,
                           s.rl.placement_iterations, run.placement.training.best_metric);
  return 0;
}

int cmd_simulate(const Inputs& in, const std::string& out, bool wall_clock) {
  const Scenario s = load(in);
  const RunReport report = run_pipeline(s, traces_for(s, in));
  write_run_report(report, s, out, wall_clock);
  std::cout << fmt::format("{}: mean sum rate {:.0f} bps over {} slots, {} min-rate violations\n",
                           to_string(report.controller), report.mean_sum_rate_bps, report.slots.size(),
                           report.min_rate_violations);
  return 0;
}

int cmd_sweep(const Inputs& in, const std::string& axis, const std::vector<std::string>& values, std::size_t jobs,
              const std::string& out) {
  const Scenario s = load(in);
  std::optional<TraceSet> traces;
  if (!in.traces.empty()) traces = traces_for(s, in);
  const auto rows = sweep(s, traces ? &*traces : nullptr, axis, values, jobs);
  const std::string csv = sweep_csv(axis, rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return 0;
}

int cmd_report(const std::string& input, const std::string& out) {
  const fs::path dir(input);
  for (const char* name : {"report.json", "sum_rate.csv", "trajectories.geojson", "learning_curve.csv"}) {
    if (!fs::exists(dir / name)) throw Error("missing " + (dir / name).string());
  }
  std::ifstream file(dir / "report.json");
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw ParseError((dir / "report.json").string() + ": " + e.what());
  }
  std::ostringstream text;
  text << fmt::format("controller           {}\n", doc.at("controller").get<std::string>());
  text << fmt::format("seed                 {}\n", doc.at("seed").get<std::uint64_t>());
  text << fmt::format("flight slots         {} (from slot {})\n", doc.at("flight_slots").get<std::size_t>(),
                      doc.at("first_slot").get<std::size_t>());
  text << fmt::format("prediction error     {:.3f} m (mean per-user RMSE)\n", doc.at("prediction_mse_m").get<double>());
  text << fmt::format("mean sum rate        {:.0f} bps\n", doc.at("mean_sum_rate_bps").get<double>());
  text << fmt::format("min-rate violations  {} user-slots\n", doc.at("min_rate_violations").get<std::size_t>());
  text << fmt::format("power bound          {:.6g} W\n", doc.at("pmax_bound_w").get<double>());
  const auto& placement = doc.at("placement");
  if (!placement.at("trials").empty()) {
    text << fmt::format("placement sum rate   {:.0f} bps (centroid baseline {:.0f} bps, {} trials)\n",
                        placement.at("sum_rate_bps").get<double>(),
                        placement.at("centroid_baseline_sum_rate_bps").get<double>(), placement.at("trials").size());
  }
  const auto& slots = doc.at("slots");
  if (!slots.empty()) {
    const auto& first = slots.front().at("uavs");
    const auto& last = slots.back().at("uavs");
    for (std::size_t j = 0; j < first.size(); ++j) {
      text << fmt::format("uav {}                ({:.0f}, {:.0f}, {:.0f} m, {:.2f} W) -> ({:.0f}, {:.0f}, {:.0f} m, {:.2f} W)\n",
                          j, first[j].at("x").get<double>(), first[j].at("y").get<double>(),
                          first[j].at("h").get<double>(), first[j].at("p_w").get<double>(),
                          last[j].at("x").get<double>(), last[j].at("y").get<double>(), last[j].at("h").get<double>(),
                          last[j].at("p_w").get<double>());
    }
  }
  if (out.empty()) {
    std::cout << text.str();
  } else {
    write_text(out, text.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV trajectory design and power control from predicted user mobility", "aeronet"};
  app.require_subcommand(1);
  app.footer("Set AERONET_LOG=debug|info|warn|error to change log verbosity.");

  Inputs in;
  std::string input;
  std::string out;
  std::string fixture_csv;
  std::string axis;
  std::vector<std::string> values;
  std::size_t jobs = 1;
  bool wall_clock = false;
  const std::vector<std::string> controllers{"learned", "learned_no_power_control", "static", "gakmeans_follow"};

  auto* ingest = app.add_subcommand("ingest", "Convert check-ins into a slot-aligned trace file");
  ingest->add_option("--input", input, "Check-in CSV (user_id,timestamp,lat,lon); bundled fixture when omitted")
      ->check(CLI::ExistingFile);
  add_scenario_flags(ingest, in);
  ingest->add_option("--out", out, "Trace file to write")->required();
  ingest->add_option("--fixture-csv", fixture_csv, "Also write the synthetic fixture's check-ins to this CSV");

  auto* predict = app.add_subcommand("predict", "Predict the last quarter of every trace with per-user ESNs");
  add_scenario_flags(predict, in);
  add_traces_flag(predict, in);
  predict->add_option("--out", out, "Predicted trace file to write")->required();

  auto* cluster = app.add_subcommand("cluster", "Cluster the predicted first flight slot with GAK-means");
  add_scenario_flags(cluster, in);
  add_traces_flag(cluster, in);
  cluster->add_option("--out", out, "Clustering JSON to write")->required();

  auto* place = app.add_subcommand("place", "Learn the initial UAV placement on the predicted first flight slot");
  add_scenario_flags(place, in);
  add_traces_flag(place, in);
  place->add_option("--controller", in.controller, "learned or learned_no_power_control")
      ->check(CLI::IsMember({"learned", "learned_no_power_control"}));
  place->add_option("--out", out, "Placement JSON to write")->required();

  auto* train = app.add_subcommand("train", "Run placement training and export the Q-tables and learning curve");
  add_scenario_flags(train, in);
  add_traces_flag(train, in);
  train->add_option("--controller", in.controller, "learned or learned_no_power_control")
      ->check(CLI::IsMember({"learned", "learned_no_power_control"}));
  train->add_option("--out", out, "Directory for q_tables.json and learning_curve.csv")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the full pipeline and write a run report");
  add_scenario_flags(simulate, in);
  add_traces_flag(simulate, in);
  simulate->add_option("--controller", in.controller, "Controller to run")->check(CLI::IsMember(controllers));
  simulate->add_option("--out", out, "Report directory")->required();
  simulate->add_flag("--wall-clock", wall_clock, "Record the run time in report.json (breaks byte-identical reruns)");

  auto* sweep_cmd = app.add_subcommand("sweep", "One pipeline run per value of a scenario parameter");
  add_scenario_flags(sweep_cmd, in);
  add_traces_flag(sweep_cmd, in);
  sweep_cmd->add_option("--controller", in.controller, "Controller to run")->check(CLI::IsMember(controllers));
  sweep_cmd->add_option("--axis", axis, "Parameter to vary")->required()->check(CLI::IsMember(sweep_axes()));
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--jobs", jobs, "Runs in parallel")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out, "CSV to write; standard output when omitted");

  auto* report = app.add_subcommand("report", "Summarise a run report directory");
  report->add_option("--input", input, "Report directory written by simulate")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out, "Text file to write; standard output when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(in, input, out, fixture_csv);
    if (*predict) return cmd_predict(in, out);
    if (*cluster) return cmd_cluster(in, out);
    if (*place) return cmd_place(in, out);
    if (*train) return cmd_train(in, out);
    if (*simulate) return cmd_simulate(in, out, wall_clock);
    if (*sweep_cmd) return cmd_sweep(in, axis, values, jobs, out);
    if (*report) return cmd_report(input, out);
  } catch (const ValidationError& e) {
    logger().error("{}", e.what());
    return 2;
  } catch (const ParseError& e) {
    logger().error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    logger().error("{}", e.what());
    return 1;
  }
  return 1;
}
