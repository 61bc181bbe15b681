#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. None of them call into the library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "aeronet/channel.hpp"
#include "aeronet/geo_mobility.hpp"
#include "aeronet/marl.hpp"

namespace oracle {

using ld = long double;

// ---- channel ---------------------------------------------------------------

inline ld los_probability(ld theta_rad, const aeronet::ChannelParams& p) {
  const ld deg = theta_rad * 180.0L / std::numbers::pi_v<ld>;
  if (deg <= p.zeta_deg) return 0.0L;
  return std::clamp(static_cast<ld>(p.b1) * std::pow(deg - p.zeta_deg, static_cast<ld>(p.b2)), 0.0L, 1.0L);
}

// Path loss assembled in dB: free-space term, distance term, blended excess loss.
inline ld channel_gain(ld d, ld p_los, const aeronet::ChannelParams& p) {
  const ld c = 299792458.0L;
  const ld fspl_db = 20.0L * std::log10(4.0L * std::numbers::pi_v<ld> * p.carrier_hz / c);
  const ld dist_db = 10.0L * p.path_loss_exponent * std::log10(d);
  const ld excess_db = 10.0L * std::log10(p_los * p.mu_los + (1.0L - p_los) * p.mu_nlos);
  return std::pow(10.0L, -(fspl_db + dist_db + excess_db) / 10.0L);
}

struct Link {
  ld distance, elevation, p_los, gain, signal, interference, noise, sinr, rate;
};

// Double loop over users and UAVs; cluster sizes counted per user.
inline std::vector<Link> links(std::span<const std::size_t> assignment, std::span<const aeronet::UavState> uavs,
                               std::span<const aeronet::Point2> users, const aeronet::ChannelParams& p) {
  auto members = [&](std::size_t n) {
    std::size_t c = 0;
    for (auto a : assignment) c += a == n ? 1 : 0;
    return static_cast<ld>(c);
  };
  auto geometry = [&](const aeronet::UavState& u, aeronet::Point2 q, ld& d, ld& theta) {
    const ld dx = static_cast<ld>(u.x) - q.x;
    const ld dy = static_cast<ld>(u.y) - q.y;
    d = std::sqrt(dx * dx + dy * dy + static_cast<ld>(u.h) * u.h);
    theta = std::asin(static_cast<ld>(u.h) / d);
  };
  std::vector<Link> out;
  for (std::size_t k = 0; k < users.size(); ++k) {
    Link l{};
    const std::size_t n = assignment[k];
    const ld size = members(n);
    geometry(uavs[n], users[k], l.distance, l.elevation);
    l.p_los = los_probability(l.elevation, p);
    l.gain = channel_gain(l.distance, l.p_los, p);
    l.signal = uavs[n].p_total / size * l.gain;
    for (std::size_t m = 0; m < uavs.size(); ++m) {
      const ld other = members(m);
      if (m == n || other == 0) continue;
      ld d = 0;
      ld theta = 0;
      geometry(uavs[m], users[k], d, theta);
      l.interference += uavs[m].p_total / other * channel_gain(d, los_probability(theta, p), p);
    }
    l.noise = p.bandwidth_hz / size * p.noise_psd_w_per_hz;
    l.sinr = l.signal / (l.interference + l.noise);
    l.rate = p.bandwidth_hz / size * std::log1p(l.sinr) / std::numbers::ln2_v<ld>;
    out.push_back(l);
  }
  return out;
}

inline ld rel_err(ld got, ld want) {
  const ld scale = std::max(std::fabs(want), std::numeric_limits<ld>::min());
  return std::fabs(got - want) / scale;
}

// ---- clustering ------------------------------------------------------------

inline double wcss_of(std::span<const aeronet::Point2> pts, std::span<const std::size_t> labels, std::size_t k) {
  std::vector<double> sx(k), sy(k), n(k);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sx[labels[i]] += pts[i].x;
    sy[labels[i]] += pts[i].y;
    n[labels[i]] += 1.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto c = labels[i];
    const double dx = pts[i].x - sx[c] / n[c];
    const double dy = pts[i].y - sy[c] / n[c];
    total += dx * dx + dy * dy;
  }
  return total;
}

// Minimum WCSS over every partition of the points into exactly k non-empty
// clusters (restricted growth strings).
inline double optimal_wcss(std::span<const aeronet::Point2> pts, std::size_t k) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> labels(n, 0);
  double best = std::numeric_limits<double>::infinity();
  auto recurse = [&](auto&& self, std::size_t i, std::size_t used) -> void {
    if (n - i < k - used) return;
    if (i == n) {
      if (used == k) best = std::min(best, wcss_of(pts, labels, k));
      return;
    }
    for (std::size_t c = 0; c <= std::min(used, k - 1); ++c) {
      labels[i] = c;
      self(self, i + 1, std::max(used, c + 1));
    }
  };
  recurse(recurse, 0, 0);
  return best;
}

// ---- tabular MDPs ----------------------------------------------------------

struct Mdp {
  std::size_t states;
  std::size_t actions;
  std::vector<double> reward;      // [s * actions + a]
  std::vector<double> transition;  // [(s * actions + a) * states + s']
};

// Optimal action values by value iteration to machine precision.
inline std::vector<double> optimal_q(const Mdp& m, double discount) {
  std::vector<double> q(m.states * m.actions, 0.0);
  for (int it = 0; it < 10000; ++it) {
    std::vector<double> v(m.states);
    for (std::size_t s = 0; s < m.states; ++s) {
      v[s] = *std::max_element(q.begin() + static_cast<long>(s * m.actions),
                               q.begin() + static_cast<long>((s + 1) * m.actions));
    }
    double change = 0.0;
    for (std::size_t s = 0; s < m.states; ++s) {
      for (std::size_t a = 0; a < m.actions; ++a) {
        double next = m.reward[s * m.actions + a];
        for (std::size_t t = 0; t < m.states; ++t) next += discount * m.transition[(s * m.actions + a) * m.states + t] * v[t];
        change = std::max(change, std::fabs(next - q[s * m.actions + a]));
        q[s * m.actions + a] = next;
      }
    }
    if (change < 1e-14) break;
  }
  return q;
}

inline std::size_t greedy(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// One independent MDP per agent; each agent is rewarded by its own MDP.
class IndependentMdpEnv final : public aeronet::MultiAgentEnv {
public:
  IndependentMdpEnv(std::vector<Mdp> mdps, std::uint64_t seed) : mdps_(std::move(mdps)), rng_(seed) {
    states_.assign(mdps_.size(), 0);
  }
  [[nodiscard]] std::size_t agent_count() const override { return mdps_.size(); }
  [[nodiscard]] std::size_t state_count() const override { return mdps_.front().states; }
  [[nodiscard]] std::size_t action_count() const override { return mdps_.front().actions; }
  std::vector<std::size_t> reset() override {
    std::fill(states_.begin(), states_.end(), 0);
    return states_;
  }
  [[nodiscard]] double metric() const override { return 0.0; }
  aeronet::StepResult step(std::span<const std::size_t> actions) override {
    aeronet::StepResult r;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t j = 0; j < mdps_.size(); ++j) {
      const Mdp& m = mdps_[j];
      const std::size_t sa = states_[j] * m.actions + actions[j];
      r.rewards.push_back(m.reward[sa]);
      double u = unit(rng_);
      std::size_t next = m.states - 1;
      for (std::size_t t = 0; t < m.states; ++t) {
        u -= m.transition[sa * m.states + t];
        if (u < 0.0) {
          next = t;
          break;
        }
      }
      states_[j] = next;
    }
    r.next_states = states_;
    return r;
  }

private:
  std::vector<Mdp> mdps_;
  std::vector<std::size_t> states_;
  std::mt19937_64 rng_;
};

}  // namespace oracle
