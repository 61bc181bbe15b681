#pragma once

// Synthetic check-in cohort: random-waypoint walkers in four groups. Each
// group wanders around an anchor that circles its hotspot once over the
// window. A fraction of the users leave their group at a random instant and
// roam the whole area from then on. Used as the bundled data set when no
// external traces are supplied.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aeronet/geo_mobility.hpp"

namespace aeronet {

struct FixtureConfig {
  std::size_t n_users = 50;
  std::size_t n_slots = 256;
  double slot_seconds = 200.0;
  std::uint64_t seed = 7;
  double start_epoch = 1546300800.0;  // 2019-01-01T00:00:00Z
  double min_speed = 0.3;             // m/s
  double max_speed = 1.2;
  double max_pause_s = 1200.0;
  double roam_probability = 0.3;      // fraction of users that eventually leave their group
  double hotspot_sigma_m = 150.0;     // waypoint spread around the group anchor
  double anchor_radius_m = 300.0;     // radius of the anchor's circuit around the hotspot

  void validate() const;
};

/// Check-ins in WGS84 for every synthetic user. Each user checks in at the
/// start and end of the window and at random instants in between (one per
/// 5 to 10 minutes on average).
std::vector<UserCheckins> generate_checkins(const FixtureConfig& config, const WorldExtent& extent);

/// `user_id,timestamp,lat,lon` document with a header row.
std::string checkins_to_csv(const std::vector<UserCheckins>& users);

/// generate_checkins, projected and interpolated onto the configured slots.
TraceSet make_fixture_traces(const FixtureConfig& config, const WorldExtent& extent);

}  // namespace aeronet
