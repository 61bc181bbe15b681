#pragma once

// Scenario configuration: every knob of a pipeline run in one place, loaded
// from an INI-style file with [scenario], [extent], [channel], [grid], [esn],
// [ga], [rl] and [fixture] sections.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aeronet/channel.hpp"
#include "aeronet/clustering.hpp"
#include "aeronet/esn.hpp"
#include "aeronet/fixture.hpp"
#include "aeronet/geo_mobility.hpp"
#include "aeronet/marl.hpp"

namespace aeronet {

enum class ControllerKind { learned, learned_no_power_control, static_placement, gakmeans_follow };

std::string to_string(ControllerKind kind);
/// Accepts learned, learned_no_power_control, static, gakmeans_follow.
ControllerKind parse_controller(const std::string& name);

struct RlParams {
  double learning_rate = 0.01;
  double discount = 0.7;
  EpsilonSchedule epsilon;
  SelectionMode selection = SelectionMode::shared_sum;
  std::size_t placement_trials = 30;
  std::size_t placement_iterations = 5000;
  std::size_t slot_episodes = 1000;     // episodes per flight slot, each restarting from the committed state
  std::size_t slot_iterations = 10;    // steps per flight-slot episode
  std::size_t curve_stride = 100;
};

/// Propagation settings as written in the scenario file (attenuations and
/// noise in dB); params() converts to the linear form used by the model.
struct ChannelSettings {
  double carrier_hz = 2e9;
  double b1 = 0.36;
  double b2 = 0.21;
  double zeta_deg = 0.0;
  double path_loss_exponent = 2.0;
  double mu_los_db = 3.0;
  double mu_nlos_db = 23.0;
  double noise_dbm_per_hz = -170.0;
  double bandwidth_hz = 1e6;
  double min_rate_bps = 20e3;
  bool power_bound_linear_altitude = false;

  [[nodiscard]] ChannelParams params() const;
};

struct Scenario {
  std::size_t n_uavs = 4;
  std::size_t n_slots = 256;
  double slot_seconds = 200.0;
  std::uint64_t master_seed = 1;
  ControllerKind controller = ControllerKind::learned;
  std::size_t min_reports = 4;
  OutOfExtentPolicy out_of_extent = OutOfExtentPolicy::reject;

  WorldExtent extent{2000.0, 2000.0, 51.5100, -0.1500};
  ChannelSettings channel;
  double p_max_w = 0.1;
  double h_min = 50.0;
  double h_max = 150.0;
  GridSpec grid;
  EsnConfig esn;
  GaParams ga;
  RlParams rl;
  FixtureConfig fixture;

  /// Checks every sub-configuration and their cross-constraints.
  void validate() const;
};

/// Built-in defaults (the values documented in data/scenario.cfg).
Scenario default_scenario();

/// Parses an INI document. Unknown sections or keys are a ParseError so
/// that typos never pass silently. Missing keys keep their defaults. The
/// result is validated.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

/// Renders a scenario back to INI; parse_scenario(render(s)) == s.
std::string render_scenario(const Scenario& scenario);

nlohmann::json scenario_to_json(const Scenario& scenario);

/// Keys accepted by sweep().
const std::vector<std::string>& sweep_axes();

/// Returns a copy of `base` with `axis` set to `value`. Throws
/// ValidationError listing the accepted axes for an unknown axis.
Scenario with_axis(const Scenario& base, const std::string& axis, const std::string& value);

}  // namespace aeronet
