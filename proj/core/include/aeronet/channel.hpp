#pragma once

// Air-to-ground propagation, SINR/rate evaluation and feasibility checks for
// a downlink served by several UAV base stations under FDMA.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "aeronet/geo_mobility.hpp"

namespace aeronet {

inline constexpr double kSpeedOfLight = 299792458.0;

double db_to_linear(double db) noexcept;
double dbm_to_watts(double dbm) noexcept;

enum class PowerBoundForm {
  altitude_to_alpha,  // max altitude raised to the path-loss exponent
  altitude_linear,    // max altitude to the first power
};

/// Propagation constants. Attenuations are stored linear; use from_db() to
/// build from the usual dB figures.
struct ChannelParams {
  double carrier_hz = 2e9;
  double b1 = 0.36;
  double b2 = 0.21;
  double zeta_deg = 0.0;
  double path_loss_exponent = 2.0;
  double mu_los = 1.9952623149688795;   // 3 dB
  double mu_nlos = 199.52623149688787;  // 23 dB
  double noise_psd_w_per_hz = 1e-20;    // -170 dBm/Hz
  double bandwidth_hz = 1e6;
  double min_rate_bps = 0.0;
  PowerBoundForm power_bound_form = PowerBoundForm::altitude_to_alpha;

  static ChannelParams from_db(double carrier_hz, double b1, double b2, double zeta_deg,
                               double path_loss_exponent, double mu_los_db, double mu_nlos_db,
                               double noise_dbm_per_hz, double bandwidth_hz, double min_rate_bps);

  /// (4 pi f_c / c)^2
  [[nodiscard]] double k0() const noexcept;
  void validate() const;
};

struct UavState {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
  double p_total = 0.0;  // watts, split equally over the cluster

  friend bool operator==(const UavState&, const UavState&) = default;
};

struct LinkBudget {
  double distance = 0.0;       // m
  double elevation = 0.0;      // rad
  double p_los = 0.0;
  double gain = 0.0;           // linear
  double signal = 0.0;         // W
  double interference = 0.0;   // W
  double noise = 0.0;          // W
  double sinr = 0.0;
  double rate_bps = 0.0;
};

double distance(const UavState& uav, Point2 user) noexcept;

/// asin(h / d). Throws GeometryError when UAV and user coincide.
double elevation_angle(const UavState& uav, Point2 user);

/// b1 (theta_deg - zeta)^b2 clamped to [0, 1]; zero at or below zeta.
double los_probability(double theta_rad, const ChannelParams& params);

/// 1 / (K0 d^alpha (P_LoS mu_LoS + (1 - P_LoS) mu_NLoS)). Throws on d <= 0.
double channel_gain(double d, double p_los, const ChannelParams& params);

/// Gain from a UAV to a user, composing the three functions above.
double link_gain(const UavState& uav, Point2 user, const ChannelParams& params);

/// Users served by each UAV; `assignment[k]` is the UAV index of user k.
std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> assignment, std::size_t n_uavs);

/// Link budget of one user. Every UAV transmits P_n/|K_n| on each of its
/// FDMA sub-bands of width B/|K_n|; UAVs other than the serving one
/// interfere. Throws ValidationError when the serving cluster is empty.
LinkBudget sinr_and_rate(Point2 user, std::size_t serving, std::span<const UavState> uavs,
                         std::span<const std::size_t> sizes, const ChannelParams& params);

/// Link budgets of every user.
std::vector<LinkBudget> evaluate_links(std::span<const std::size_t> assignment,
                                       std::span<const UavState> uavs,
                                       std::span<const Point2> users, const ChannelParams& params);

/// Total rate of all users (bps).
double sum_rate(std::span<const std::size_t> assignment, std::span<const UavState> uavs,
                std::span<const Point2> users, const ChannelParams& params);

/// Smallest per-UAV power budget that can satisfy the minimum rate in every
/// cluster under pure LoS, using the largest altitude in `heights`. Returns
/// the bound of the most demanding cluster. Throws InfeasiblePowerError when
/// the rate requirement overflows the exponent.
double pmax_lower_bound(std::span<const std::size_t> sizes, std::span<const double> heights,
                        const ChannelParams& params);

enum class ConstraintKind { disjoint_clusters, altitude_bounds, min_rate, power_bounds };

std::string to_string(ConstraintKind kind);

struct Violation {
  ConstraintKind kind;
  std::string entity;  // "uav:<n>" or "user:<k>"
  double value = 0.0;
  double limit = 0.0;
};

struct ConstraintReport {
  std::vector<Violation> violations;
  [[nodiscard]] bool feasible() const noexcept { return violations.empty(); }
  [[nodiscard]] std::size_t count(ConstraintKind kind) const noexcept;
};

struct OperatingLimits {
  double h_min = 0.0;
  double h_max = 0.0;
  double p_max = 0.0;
};

/// Audits one slot: assignment indices valid (each user in exactly one
/// cluster), altitude and power bounds, and the per-user minimum rate.
ConstraintReport check_constraints(std::span<const UavState> uavs,
                                   std::span<const std::size_t> assignment,
                                   std::span<const Point2> users, const ChannelParams& params,
                                   const OperatingLimits& limits);

}  // namespace aeronet
