#include "aeronet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aeronet/error.hpp"
#include "aeronet/log.hpp"

namespace aeronet {

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) noexcept { return std::pow(10.0, (dbm - 30.0) / 10.0); }

ChannelParams ChannelParams::from_db(double carrier_hz, double b1, double b2, double zeta_deg,
                                     double path_loss_exponent, double mu_los_db, double mu_nlos_db,
                                     double noise_dbm_per_hz, double bandwidth_hz,
                                     double min_rate_bps) {
  ChannelParams p;
  p.carrier_hz = carrier_hz;
  p.b1 = b1;
  p.b2 = b2;
  p.zeta_deg = zeta_deg;
  p.path_loss_exponent = path_loss_exponent;
  p.mu_los = db_to_linear(mu_los_db);
  p.mu_nlos = db_to_linear(mu_nlos_db);
  p.noise_psd_w_per_hz = dbm_to_watts(noise_dbm_per_hz);
  p.bandwidth_hz = bandwidth_hz;
  p.min_rate_bps = min_rate_bps;
  return p;
}

double ChannelParams::k0() const noexcept {
  const double a = 4.0 * std::numbers::pi * carrier_hz / kSpeedOfLight;
  return a * a;
}

void ChannelParams::validate() const {
  const bool positive = carrier_hz > 0.0 && b1 > 0.0 && b2 > 0.0 && path_loss_exponent > 0.0 &&
                        mu_los > 0.0 && mu_nlos > 0.0 && noise_psd_w_per_hz > 0.0 &&
                        bandwidth_hz > 0.0;
  if (!positive) throw ValidationError("channel parameters must be positive");
  if (zeta_deg < 0.0) throw ValidationError("channel zeta must be non-negative");
  if (min_rate_bps < 0.0) throw ValidationError("minimum rate must be non-negative");
  if (mu_los > mu_nlos) throw ValidationError("LoS attenuation must not exceed NLoS attenuation");
}

double distance(const UavState& uav, Point2 user) noexcept {
  const double dx = uav.x - user.x;
  const double dy = uav.y - user.y;
  return std::sqrt(uav.h * uav.h + dx * dx + dy * dy);
}

double elevation_angle(const UavState& uav, Point2 user) {
  const double d = distance(uav, user);
  if (!(d > 0.0)) throw GeometryError("UAV and user coincide; elevation angle undefined");
  return std::asin(std::clamp(uav.h / d, -1.0, 1.0));
}

double los_probability(double theta_rad, const ChannelParams& params) {
  const double base = theta_rad * 180.0 / std::numbers::pi - params.zeta_deg;
  if (base <= 0.0) {
    logger().debug("elevation {:.4f} deg at or below zeta; LoS probability clamped to 0",
                   theta_rad * 180.0 / std::numbers::pi);
    return 0.0;
  }
  const double p = params.b1 * std::pow(base, params.b2);
  if (p > 1.0) {
    logger().debug("LoS probability {:.4f} clamped to 1", p);
    return 1.0;
  }
  return p;
}

double channel_gain(double d, double p_los, const ChannelParams& params) {
  if (!(d > 0.0)) throw GeometryError("channel gain needs a positive distance");
  const double attenuation = p_los * params.mu_los + (1.0 - p_los) * params.mu_nlos;
  return 1.0 / (params.k0() * std::pow(d, params.path_loss_exponent) * attenuation);
}

double link_gain(const UavState& uav, Point2 user, const ChannelParams& params) {
  const double d = distance(uav, user);
  const double theta = elevation_angle(uav, user);
  return channel_gain(d, los_probability(theta, params), params);
}

std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> assignment, std::size_t n_uavs) {
  std::vector<std::size_t> sizes(n_uavs, 0);
  for (auto a : assignment) {
    if (a >= n_uavs) throw ValidationError("user assigned to a non-existent UAV");
    ++sizes[a];
  }
  return sizes;
}

LinkBudget sinr_and_rate(Point2 user, std::size_t serving, std::span<const UavState> uavs,
                         std::span<const std::size_t> sizes, const ChannelParams& params) {
  if (serving >= uavs.size() || sizes.size() != uavs.size()) {
    throw ValidationError("serving UAV index out of range");
  }
  if (sizes[serving] == 0) throw ValidationError("serving cluster is empty");

  LinkBudget lb;
  const auto& uav = uavs[serving];
  const double users_in_cluster = static_cast<double>(sizes[serving]);
  lb.distance = distance(uav, user);
  lb.elevation = elevation_angle(uav, user);
  lb.p_los = los_probability(lb.elevation, params);
  lb.gain = channel_gain(lb.distance, lb.p_los, params);
  lb.signal = uav.p_total / users_in_cluster * lb.gain;
  for (std::size_t n = 0; n < uavs.size(); ++n) {
    if (n == serving || sizes[n] == 0) continue;
    lb.interference += uavs[n].p_total / static_cast<double>(sizes[n]) * link_gain(uavs[n], user, params);
  }
  const double sub_band = params.bandwidth_hz / users_in_cluster;
  lb.noise = sub_band * params.noise_psd_w_per_hz;
  lb.sinr = lb.signal / (lb.interference + lb.noise);
  lb.rate_bps = sub_band * std::log1p(lb.sinr) / std::numbers::ln2;
  return lb;
}

std::vector<LinkBudget> evaluate_links(std::span<const std::size_t> assignment,
                                       std::span<const UavState> uavs,
                                       std::span<const Point2> users, const ChannelParams& params) {
  if (assignment.size() != users.size()) throw ValidationError("assignment does not cover every user");
  const auto sizes = cluster_sizes(assignment, uavs.size());
  std::vector<LinkBudget> out;
  out.reserve(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) {
    out.push_back(sinr_and_rate(users[k], assignment[k], uavs, sizes, params));
  }
  return out;
}

double sum_rate(std::span<const std::size_t> assignment, std::span<const UavState> uavs,
                std::span<const Point2> users, const ChannelParams& params) {
  double total = 0.0;
  for (const auto& lb : evaluate_links(assignment, uavs, users, params)) total += lb.rate_bps;
  return total;
}

double pmax_lower_bound(std::span<const std::size_t> sizes, std::span<const double> heights,
                        const ChannelParams& params) {
  if (heights.empty()) throw ValidationError("power bound needs at least one altitude");
  const double h = *std::max_element(heights.begin(), heights.end());
  if (!(h > 0.0)) throw ValidationError("power bound needs positive altitudes");
  const double exponent =
      params.power_bound_form == PowerBoundForm::altitude_to_alpha ? params.path_loss_exponent : 1.0;

  double bound = 0.0;
  for (auto k : sizes) {
    if (k == 0) continue;
    const double users = static_cast<double>(k);
    const double bits = users * params.min_rate_bps / params.bandwidth_hz;
    if (bits >= 1000.0) {
      throw InfeasiblePowerError("minimum rate of " + std::to_string(params.min_rate_bps) +
                                     " bps is unreachable for a cluster of " + std::to_string(k) +
                                     " users",
                                 HUGE_VAL);
    }
    const double noise = params.bandwidth_hz / users * params.noise_psd_w_per_hz;
    const double b = users * params.mu_los * noise * params.k0() * (std::exp2(bits) - 1.0) *
                     std::pow(h, exponent);
    bound = std::max(bound, b);
  }
  if (bound == 0.0 && std::all_of(sizes.begin(), sizes.end(), [](auto k) { return k == 0; })) {
    throw ValidationError("power bound needs a non-empty cluster");
  }
  return bound;
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::disjoint_clusters: return "disjoint_clusters";
    case ConstraintKind::altitude_bounds: return "altitude_bounds";
    case ConstraintKind::min_rate: return "min_rate";
    case ConstraintKind::power_bounds: return "power_bounds";
  }
  return "unknown";
}

std::size_t ConstraintReport::count(ConstraintKind kind) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

ConstraintReport check_constraints(std::span<const UavState> uavs,
                                   std::span<const std::size_t> assignment,
                                   std::span<const Point2> users, const ChannelParams& params,
                                   const OperatingLimits& limits) {
  ConstraintReport report;
  bool assignment_ok = assignment.size() == users.size();
  if (!assignment_ok) {
    report.violations.push_back({ConstraintKind::disjoint_clusters, "assignment",
                                 static_cast<double>(assignment.size()), static_cast<double>(users.size())});
  }
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    if (assignment[k] >= uavs.size()) {
      assignment_ok = false;
      report.violations.push_back({ConstraintKind::disjoint_clusters, "user:" + std::to_string(k),
                                   static_cast<double>(assignment[k]), static_cast<double>(uavs.size())});
    }
  }
  for (std::size_t n = 0; n < uavs.size(); ++n) {
    const auto& u = uavs[n];
    if (u.h < limits.h_min || u.h > limits.h_max) {
      report.violations.push_back({ConstraintKind::altitude_bounds, "uav:" + std::to_string(n), u.h,
                                   u.h < limits.h_min ? limits.h_min : limits.h_max});
    }
    if (u.p_total < 0.0 || u.p_total > limits.p_max) {
      report.violations.push_back({ConstraintKind::power_bounds, "uav:" + std::to_string(n), u.p_total,
                                   u.p_total < 0.0 ? 0.0 : limits.p_max});
    }
  }
  if (assignment_ok) {
    const auto links = evaluate_links(assignment, uavs, users, params);
    for (std::size_t k = 0; k < links.size(); ++k) {
      if (links[k].rate_bps < params.min_rate_bps) {
        report.violations.push_back({ConstraintKind::min_rate, "user:" + std::to_string(k),
                                     links[k].rate_bps, params.min_rate_bps});
      }
    }
  }
  return report;
}

}  // namespace aeronet
