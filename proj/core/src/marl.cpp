#include "aeronet/marl.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"

namespace aeronet {

GridSpec GridSpec::over(const WorldExtent& extent, std::size_t x_cells, std::size_t y_cells,
                        std::vector<double> altitude_levels, std::vector<double> power_levels) {
  extent.validate();
  if (x_cells == 0 || y_cells == 0) throw ValidationError("grid needs at least one cell per axis");
  GridSpec g;
  g.x_cells = x_cells;
  g.y_cells = y_cells;
  g.cell_x_m = extent.x_max / static_cast<double>(x_cells);
  g.cell_y_m = extent.y_max / static_cast<double>(y_cells);
  g.altitude_levels = std::move(altitude_levels);
  g.power_levels = std::move(power_levels);
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (x_cells == 0 || y_cells == 0) throw ValidationError("grid needs at least one cell per axis");
  if (!(cell_x_m > 0.0 && cell_y_m > 0.0)) throw ValidationError("grid cell size must be positive");
  if (altitude_levels.empty() || power_levels.empty()) {
    throw ValidationError("grid needs at least one altitude and one power level");
  }
  if (!std::is_sorted(altitude_levels.begin(), altitude_levels.end()) || altitude_levels.front() <= 0.0) {
    throw ValidationError("altitude levels must be positive and ascending");
  }
  if (!std::is_sorted(power_levels.begin(), power_levels.end()) || power_levels.front() < 0.0) {
    throw ValidationError("power levels must be non-negative and ascending");
  }
  if (initial_power_idx >= power_levels.size()) throw ValidationError("initial power index out of range");
}

std::size_t encode_state(const AgentState& s, const GridSpec& grid) {
  if (s.cell_x >= grid.x_cells || s.cell_y >= grid.y_cells || s.h_idx >= grid.altitude_levels.size() ||
      s.p_idx >= grid.power_levels.size()) {
    throw ValidationError("agent state outside the grid");
  }
  return ((s.cell_x * grid.y_cells + s.cell_y) * grid.altitude_levels.size() + s.h_idx) *
             grid.power_levels.size() +
         s.p_idx;
}

AgentState decode_state(std::size_t index, const GridSpec& grid) {
  if (index >= grid.state_count()) throw ValidationError("state index out of range");
  AgentState s;
  s.p_idx = index % grid.power_levels.size();
  index /= grid.power_levels.size();
  s.h_idx = index % grid.altitude_levels.size();
  index /= grid.altitude_levels.size();
  s.cell_y = index % grid.y_cells;
  s.cell_x = index / grid.y_cells;
  return s;
}

UavState to_uav_state(const AgentState& s, const GridSpec& grid) {
  const Point2 c = grid.cell_center(s.cell_x, s.cell_y);
  return {c.x, c.y, grid.altitude_levels.at(s.h_idx), grid.power_levels.at(s.p_idx)};
}

AgentState locate(Point2 p, std::size_t h_idx, std::size_t p_idx, const GridSpec& grid) {
  auto cell = [](double v, double size, std::size_t cells) {
    const double c = std::floor(v / size);
    if (!(c > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(c), cells - 1);
  };
  return {cell(p.x, grid.cell_x_m, grid.x_cells), cell(p.y, grid.cell_y_m, grid.y_cells), h_idx, p_idx};
}

ActionId ActionId::from_index(std::size_t index) {
  if (index >= kActionCount) throw ValidationError("action index out of range");
  return {static_cast<Move>(index / kPowerDeltaCount), static_cast<PowerDelta>(index % kPowerDeltaCount)};
}

std::string to_string(Move move) {
  static constexpr std::array<const char*, kMoveCount> names{"right", "left", "forward", "backward",
                                                             "up",    "down", "stay"};
  return names.at(static_cast<std::size_t>(move));
}

std::string to_string(PowerDelta delta) {
  static constexpr std::array<const char*, kPowerDeltaCount> names{"increase", "decrease", "maintain"};
  return names.at(static_cast<std::size_t>(delta));
}

AgentState apply_action(const AgentState& s, ActionId action, const GridSpec& grid) {
  auto inc = [](std::size_t v, std::size_t size) { return v + 1 < size ? v + 1 : v; };
  auto dec = [](std::size_t v) { return v > 0 ? v - 1 : v; };
  AgentState n = s;
  switch (action.move) {
    case Move::right: n.cell_x = inc(s.cell_x, grid.x_cells); break;
    case Move::left: n.cell_x = dec(s.cell_x); break;
    case Move::forward: n.cell_y = inc(s.cell_y, grid.y_cells); break;
    case Move::backward: n.cell_y = dec(s.cell_y); break;
    case Move::up: n.h_idx = inc(s.h_idx, grid.altitude_levels.size()); break;
    case Move::down: n.h_idx = dec(s.h_idx); break;
    case Move::stay: break;
  }
  switch (action.power) {
    case PowerDelta::increase: n.p_idx = inc(s.p_idx, grid.power_levels.size()); break;
    case PowerDelta::decrease: n.p_idx = dec(s.p_idx); break;
    case PowerDelta::maintain: break;
  }
  return n;
}

double global_reward(double sum_rate_new, double sum_rate_old) noexcept {
  return sum_rate_new > sum_rate_old ? 1.0 : -1.0;
}

QTableSet::QTableSet(std::size_t agents, std::size_t states, std::size_t actions)
    : agents_(agents), states_(states), actions_(actions),
      values_(agents * states * actions, 0.0), visits_(agents * states * actions, 0) {
  if (agents == 0 || states == 0 || actions == 0) throw ValidationError("Q-table dimensions must be positive");
}

std::size_t QTableSet::offset(std::size_t agent, std::size_t s, std::size_t a) const {
  if (agent >= agents_ || s >= states_ || a >= actions_) throw ValidationError("Q-table index out of range");
  return (agent * states_ + s) * actions_ + a;
}

double& QTableSet::q(std::size_t agent, std::size_t s, std::size_t a) { return values_[offset(agent, s, a)]; }

double QTableSet::q(std::size_t agent, std::size_t s, std::size_t a) const { return values_[offset(agent, s, a)]; }

std::span<const double> QTableSet::row(std::size_t agent, std::size_t s) const {
  return {values_.data() + offset(agent, s, 0), actions_};
}

std::span<double> QTableSet::row(std::size_t agent, std::size_t s) {
  return {values_.data() + offset(agent, s, 0), actions_};
}

std::uint64_t& QTableSet::visits(std::size_t agent, std::size_t s, std::size_t a) {
  return visits_[offset(agent, s, a)];
}

double q_update(QTableSet& tables, std::size_t agent, std::size_t s, std::size_t a, double reward,
                std::size_t s_next, double learning_rate, double discount) {
  const auto next = tables.row(agent, s_next);
  const double best_next = *std::max_element(next.begin(), next.end());
  double& q = tables.q(agent, s, a);
  q = (1.0 - learning_rate) * q + learning_rate * (reward + discount * best_next);
  return q;
}

namespace {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < row.size(); ++a) {
    if (row[a] > row[best]) best = a;
  }
  return best;
}

std::size_t shared_argmax(const QTableSet& tables, std::span<const std::size_t> states) {
  std::vector<double> sum(tables.actions(), 0.0);
  for (std::size_t j = 0; j < states.size(); ++j) {
    const auto row = tables.row(j, states[j]);
    for (std::size_t a = 0; a < sum.size(); ++a) sum[a] += row[a];
  }
  return argmax(sum);
}

}  // namespace

std::vector<std::size_t> greedy_joint_action(const QTableSet& tables, std::span<const std::size_t> states,
                                             SelectionMode mode) {
  if (states.size() != tables.agents()) throw ValidationError("need one state per agent");
  std::vector<std::size_t> actions(states.size());
  if (mode == SelectionMode::shared_sum) {
    std::fill(actions.begin(), actions.end(), shared_argmax(tables, states));
  } else {
    for (std::size_t j = 0; j < states.size(); ++j) actions[j] = argmax(tables.row(j, states[j]));
  }
  return actions;
}

std::vector<std::size_t> select_joint_action(const QTableSet& tables, std::span<const std::size_t> states,
                                             double epsilon, Rng& rng, SelectionMode mode) {
  std::vector<std::size_t> actions = greedy_joint_action(tables, states, mode);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, tables.actions() - 1);
  for (auto& a : actions) {
    if (coin(rng) < epsilon) a = any(rng);
  }
  return actions;
}

double EpsilonSchedule::at(std::size_t episode) const noexcept {
  return std::max(floor, start * std::pow(decay, static_cast<double>(episode)));
}

void TrainOptions::validate() const {
  if (episodes == 0) throw ValidationError("training needs at least one episode");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning rate must lie in (0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) throw ValidationError("discount must lie in [0, 1)");
  if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.floor >= 0.0 && epsilon.floor <= 1.0 &&
        epsilon.decay > 0.0 && epsilon.decay <= 1.0)) {
    throw ValidationError("epsilon schedule values must lie in [0, 1]");
  }
  if (!(rm_exponent > 0.5 && rm_exponent <= 1.0)) {
    throw ValidationError("Robbins-Monro exponent must lie in (0.5, 1]");
  }
  if (!(reward_scale > 0.0)) throw ValidationError("reward scale must be positive");
}

TrainResult train(MultiAgentEnv& env, QTableSet& tables, const TrainOptions& options) {
  options.validate();
  if (tables.agents() != env.agent_count() || tables.states() != env.state_count() ||
      tables.actions() != env.action_count()) {
    throw ValidationError("Q-tables do not match the environment");
  }
  Rng rng(options.seed);
  TrainResult result;
  result.episodes.reserve(options.episodes);

  for (std::size_t episode = 0; episode < options.episodes; ++episode) {
    const double eps = options.epsilon.at(episode);
    std::vector<std::size_t> states = env.reset();
    EpisodeStats stats;
    stats.best_metric = env.metric();
    if (stats.best_metric > result.best_metric) {
      result.best_metric = stats.best_metric;
      result.best_states = states;
    }
    for (std::size_t step = 0; step < options.steps_per_episode; ++step) {
      const auto actions = select_joint_action(tables, states, eps, rng, options.selection);
      StepResult r = env.step(actions);
      double mean_reward = 0.0;
      for (std::size_t j = 0; j < states.size(); ++j) {
        const double reward = options.reward_scale * r.rewards[j];
        double lr = options.learning_rate;
        if (options.rate_mode == LearningRateMode::robbins_monro) {
          auto& visits = tables.visits(j, states[j], actions[j]);
          lr = 1.0 / std::pow(1.0 + static_cast<double>(visits), options.rm_exponent);
          ++visits;
        }
        q_update(tables, j, states[j], actions[j], reward, r.next_states[j], lr, options.discount);
        mean_reward += reward;
      }
      stats.cum_reward += mean_reward / static_cast<double>(states.size());
      if (r.metric > stats.best_metric) stats.best_metric = r.metric;
      if (r.metric > result.best_metric) {
        result.best_metric = r.metric;
        result.best_states = r.next_states;
      }
      states = std::move(r.next_states);
      ++result.steps;
      if (options.curve_stride > 0 && (step + 1) % options.curve_stride == 0) {
        result.curve.push_back({episode, step + 1, r.metric, stats.cum_reward});
      }
    }
    stats.final_metric = env.metric();
    result.episodes.push_back(stats);
  }
  return result;
}

UavPlacementEnv::UavPlacementEnv(GridSpec grid, ChannelParams channel, std::span<const Point2> users,
                                 std::span<const std::size_t> assignment, std::size_t n_uavs,
                                 std::vector<AgentState> start, bool power_control)
    : grid_(std::move(grid)), channel_(channel), assignment_(assignment.begin(), assignment.end()),
      n_users_(users.size()), power_control_(power_control) {
  grid_.validate();
  channel_.validate();
  if (assignment.size() != users.size()) throw ValidationError("assignment does not cover every user");
  if (start.size() != n_uavs) throw ValidationError("need one start state per UAV");
  sizes_ = cluster_sizes(assignment_, n_uavs);

  gains_.resize(grid_.position_count() * n_users_);
  const std::size_t levels = grid_.altitude_levels.size();
  for (std::size_t cx = 0; cx < grid_.x_cells; ++cx) {
    for (std::size_t cy = 0; cy < grid_.y_cells; ++cy) {
      const Point2 c = grid_.cell_center(cx, cy);
      for (std::size_t h = 0; h < levels; ++h) {
        const UavState uav{c.x, c.y, grid_.altitude_levels[h], 0.0};
        const std::size_t pos = (cx * grid_.y_cells + cy) * levels + h;
        for (std::size_t k = 0; k < n_users_; ++k) gains_[pos * n_users_ + k] = link_gain(uav, users[k], channel_);
      }
    }
  }
  set_start(std::move(start));
}

void UavPlacementEnv::set_start(std::vector<AgentState> start) {
  if (start.size() != sizes_.size()) throw ValidationError("need one start state per UAV");
  for (const auto& s : start) (void)encode_state(s, grid_);
  start_ = std::move(start);
  current_ = start_;
  current_rate_ = sum_rate_at(current_);
}

std::vector<std::size_t> UavPlacementEnv::reset() {
  current_ = start_;
  current_rate_ = sum_rate_at(current_);
  std::vector<std::size_t> out;
  out.reserve(current_.size());
  for (const auto& s : current_) out.push_back(encode_state(s, grid_));
  return out;
}

double UavPlacementEnv::sum_rate_at(std::span<const AgentState> states) const {
  const std::size_t n = states.size();
  const std::size_t levels = grid_.altitude_levels.size();
  std::vector<std::size_t> pos(n);
  std::vector<double> per_user_power(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    pos[j] = (states[j].cell_x * grid_.y_cells + states[j].cell_y) * levels + states[j].h_idx;
    if (sizes_[j] > 0) per_user_power[j] = grid_.power_levels[states[j].p_idx] / static_cast<double>(sizes_[j]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n_users_; ++k) {
    const std::size_t serving = assignment_[k];
    double interference = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == serving || sizes_[j] == 0) continue;
      interference += per_user_power[j] * gains_[pos[j] * n_users_ + k];
    }
    const double sub_band = channel_.bandwidth_hz / static_cast<double>(sizes_[serving]);
    const double signal = per_user_power[serving] * gains_[pos[serving] * n_users_ + k];
    const double sinr = signal / (interference + sub_band * channel_.noise_psd_w_per_hz);
    total += sub_band * std::log2(1.0 + sinr);
  }
  return total;
}

StepResult UavPlacementEnv::step(std::span<const std::size_t> actions) {
  if (actions.size() != current_.size()) throw ValidationError("need one action per UAV");
  StepResult r;
  r.next_states.reserve(current_.size());
  for (std::size_t j = 0; j < current_.size(); ++j) {
    ActionId a = ActionId::from_index(actions[j]);
    if (!power_control_) a.power = PowerDelta::maintain;
    current_[j] = apply_action(current_[j], a, grid_);
    r.next_states.push_back(encode_state(current_[j], grid_));
  }
  const double rate = sum_rate_at(current_);
  r.rewards.assign(current_.size(), global_reward(rate, current_rate_));
  current_rate_ = rate;
  r.metric = rate;
  return r;
}

std::vector<AgentState> centroid_above(std::span<const Point2> centroids, const GridSpec& grid) {
  std::vector<AgentState> out;
  out.reserve(centroids.size());
  for (const auto& c : centroids) out.push_back(locate(c, grid.middle_altitude_idx(), grid.initial_power_idx, grid));
  return out;
}

PlacementResult initial_placement(std::span<const Point2> users, std::span<const std::size_t> assignment,
                                  std::span<const Point2> centroids, const GridSpec& grid,
                                  const ChannelParams& channel, const PlacementOptions& options,
                                  QTableSet* tables) {
  const auto start = centroid_above(centroids, grid);
  UavPlacementEnv env(grid, channel, users, assignment, centroids.size(), start, options.power_control);
  QTableSet local(centroids.size(), grid.state_count());
  QTableSet& q = tables != nullptr ? *tables : local;

  PlacementResult out;
  out.baseline_sum_rate = env.sum_rate_at(start);
  out.training = train(env, q, options.train);

  // Closing greedy rollout from the start placement, without updates.
  auto states = env.reset();
  for (std::size_t step = 0; step < options.train.steps_per_episode; ++step) {
    const auto r = env.step(greedy_joint_action(q, states, options.train.selection));
    if (r.metric > out.training.best_metric) {
      out.training.best_metric = r.metric;
      out.training.best_states = r.next_states;
    }
    states = r.next_states;
  }

  for (auto s : out.training.best_states) out.states.push_back(decode_state(s, grid));
  out.sum_rate = env.sum_rate_at(out.states);
  return out;
}

AgentState step_towards(const AgentState& from, const AgentState& to) {
  auto move = [](std::size_t a, std::size_t b) { return a < b ? a + 1 : (a > b ? a - 1 : a); };
  return {move(from.cell_x, to.cell_x), move(from.cell_y, to.cell_y), move(from.h_idx, to.h_idx),
          move(from.p_idx, to.p_idx)};
}

nlohmann::json q_tables_to_json(const QTableSet& tables, const GridSpec& grid, const EpsilonSchedule& eps) {
  nlohmann::json agents = nlohmann::json::array();
  for (std::size_t j = 0; j < tables.agents(); ++j) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t s = 0; s < tables.states(); ++s) {
      const auto row = tables.row(j, s);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    agents.push_back(std::move(rows));
  }
  return {{"header",
           {{"grid",
             {{"x_cells", grid.x_cells},
              {"y_cells", grid.y_cells},
              {"cell_x_m", grid.cell_x_m},
              {"cell_y_m", grid.cell_y_m},
              {"altitude_levels", grid.altitude_levels}}},
            {"power_levels", grid.power_levels},
            {"epsilon_schedule", {{"start", eps.start}, {"decay", eps.decay}, {"floor", eps.floor}}}}},
          {"tables", std::move(agents)}};
}

}  // namespace aeronet
