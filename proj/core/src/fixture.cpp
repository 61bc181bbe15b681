#include "aeronet/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "aeronet/error.hpp"
#include "aeronet/rng.hpp"

namespace aeronet {

namespace {

// Keeps waypoints clear of the boundary so the lat/lon round trip stays inside.
constexpr double kMarginMeters = 5.0;

struct Waypoint {
  double t;
  Point2 p;
};

Point2 position_at(const std::vector<Waypoint>& path, double t) {
  if (t <= path.front().t) return path.front().p;
  const auto it = std::upper_bound(path.begin(), path.end(), t, [](double v, const Waypoint& w) { return v < w.t; });
  if (it == path.end()) return path.back().p;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double span = b.t - a.t;
  const double w = span > 0.0 ? (t - a.t) / span : 0.0;
  return {a.p.x + w * (b.p.x - a.p.x), a.p.y + w * (b.p.y - a.p.y)};
}

}  // namespace

void FixtureConfig::validate() const {
  if (n_users == 0) throw ValidationError("fixture needs at least one user");
  if (n_slots < 2) throw ValidationError("fixture needs at least two slots");
  if (!(slot_seconds > 0.0)) throw ValidationError("slot duration must be positive");
  if (!(min_speed > 0.0 && max_speed >= min_speed)) throw ValidationError("fixture speeds must be positive and ordered");
  if (max_pause_s < 0.0 || hotspot_sigma_m < 0.0 || anchor_radius_m < 0.0) throw ValidationError("fixture pause, spread and anchor radius must be non-negative");
  if (!(roam_probability >= 0.0 && roam_probability <= 1.0)) {
    throw ValidationError("roam probability must lie in [0, 1]");
  }
}

std::vector<UserCheckins> generate_checkins(const FixtureConfig& config, const WorldExtent& extent) {
  config.validate();
  extent.validate();
  Rng rng(derive_seed(config.seed, streams::fixture));
  const std::array<Point2, 4> hotspots{{{0.3 * extent.x_max, 0.3 * extent.y_max},
                                        {0.7 * extent.x_max, 0.3 * extent.y_max},
                                        {0.3 * extent.x_max, 0.7 * extent.y_max},
                                        {0.7 * extent.x_max, 0.7 * extent.y_max}}};
  const double horizon = static_cast<double>(config.n_slots) * config.slot_seconds;
  auto clip = [&](Point2 p) {
    return Point2{std::clamp(p.x, kMarginMeters, extent.x_max - kMarginMeters),
                  std::clamp(p.y, kMarginMeters, extent.y_max - kMarginMeters)};
  };

  std::normal_distribution<double> start_jitter(0.0, 80.0);
  std::normal_distribution<double> spread(0.0, config.hotspot_sigma_m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> speed(config.min_speed, config.max_speed);
  std::uniform_real_distribution<double> pause(0.0, config.max_pause_s);
  std::uniform_real_distribution<double> anywhere_x(0.0, extent.x_max);
  std::uniform_real_distribution<double> anywhere_y(0.0, extent.y_max);
  const auto min_checkins = static_cast<std::size_t>(horizon / 600.0);
  const auto max_checkins = std::max(min_checkins, static_cast<std::size_t>(horizon / 300.0));
  std::uniform_int_distribution<std::size_t> checkin_count(min_checkins, max_checkins);
  std::uniform_real_distribution<double> when(0.0, horizon);

  std::vector<UserCheckins> users;
  users.reserve(config.n_users);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    const std::size_t group = u % hotspots.size();
    auto anchor = [&](double t) {
      // All anchors turn in step, so the groups keep their spacing.
      const double a = 2.0 * std::numbers::pi * t / horizon;
      return Point2{hotspots[group].x + config.anchor_radius_m * std::cos(a),
                    hotspots[group].y + config.anchor_radius_m * std::sin(a)};
    };
    const bool leaves = unit(rng) < config.roam_probability;
    const double leave_time = when(rng);
    const Point2 home = anchor(0.0);
    Point2 p = clip({home.x + start_jitter(rng), home.y + start_jitter(rng)});
    double t = 0.0;
    std::vector<Waypoint> path{{0.0, p}};
    while (t < horizon) {
      Point2 target;
      if (leaves && t >= leave_time) {
        target = {anywhere_x(rng), anywhere_y(rng)};
      } else {
        const Point2 a = anchor(t);
        target = {a.x + spread(rng), a.y + spread(rng)};
      }
      target = clip(target);
      const double v = speed(rng);
      t += std::hypot(target.x - p.x, target.y - p.y) / v;
      p = target;
      path.push_back({t, p});
      t += pause(rng);
      path.push_back({t, p});
    }

    std::vector<double> times(checkin_count(rng));
    for (auto& x : times) x = when(rng);
    times.push_back(0.0);
    times.push_back(horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    UserCheckins user;
    user.user_id = fmt::format("u{:03d}", u);
    user.checkins.reserve(times.size());
    for (double ct : times) {
      const auto [lat, lon] = unproject_point(position_at(path, ct), extent);
      user.checkins.push_back({user.user_id, config.start_epoch + ct, lat, lon});
    }
    users.push_back(std::move(user));
  }
  return users;
}

std::string checkins_to_csv(const std::vector<UserCheckins>& users) {
  std::string out = "user_id,timestamp,lat,lon\n";
  for (const auto& u : users) {
    for (const auto& c : u.checkins) out += fmt::format("{},{:.3f},{:.9f},{:.9f}\n", u.user_id, c.timestamp, c.lat, c.lon);
  }
  return out;
}

TraceSet make_fixture_traces(const FixtureConfig& config, const WorldExtent& extent) {
  const auto local = project_to_local(generate_checkins(config, extent), extent, OutOfExtentPolicy::reject);
  return interpolate_cohort(local, config.slot_seconds, config.n_slots);
}

}  // namespace aeronet
