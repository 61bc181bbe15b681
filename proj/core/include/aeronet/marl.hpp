#pragma once

// Cooperative multi-agent tabular Q-learning for UAV placement, trajectory
// and transmit-power control. Each agent owns a Q-table over its own
// discretized (x, y, h, P) state and a 21-element action set.

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aeronet/channel.hpp"
#include "aeronet/geo_mobility.hpp"
#include "aeronet/rng.hpp"

namespace aeronet {

/// Discretization of the flight volume and the power budget.
struct GridSpec {
  std::size_t x_cells = 20;
  std::size_t y_cells = 20;
  double cell_x_m = 100.0;
  double cell_y_m = 100.0;
  std::vector<double> altitude_levels{50.0, 100.0, 150.0};  // meters, ascending
  std::vector<double> power_levels{0.08, 0.09, 0.1};        // watts, ascending
  std::size_t initial_power_idx = 0;

  /// Grid covering `extent` with the given cell counts.
  static GridSpec over(const WorldExtent& extent, std::size_t x_cells, std::size_t y_cells,
                       std::vector<double> altitude_levels, std::vector<double> power_levels);

  void validate() const;
  [[nodiscard]] std::size_t state_count() const noexcept {
    return x_cells * y_cells * altitude_levels.size() * power_levels.size();
  }
  [[nodiscard]] std::size_t position_count() const noexcept {
    return x_cells * y_cells * altitude_levels.size();
  }
  [[nodiscard]] Point2 cell_center(std::size_t cx, std::size_t cy) const noexcept {
    return {(static_cast<double>(cx) + 0.5) * cell_x_m, (static_cast<double>(cy) + 0.5) * cell_y_m};
  }
  [[nodiscard]] std::size_t middle_altitude_idx() const noexcept { return altitude_levels.size() / 2; }
};

struct AgentState {
  std::size_t cell_x = 0;
  std::size_t cell_y = 0;
  std::size_t h_idx = 0;
  std::size_t p_idx = 0;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

std::size_t encode_state(const AgentState& s, const GridSpec& grid);
AgentState decode_state(std::size_t index, const GridSpec& grid);

/// Continuous UAV state at the centre of the state's cell.
UavState to_uav_state(const AgentState& s, const GridSpec& grid);

/// Cell containing `p` (clamped to the grid) at the given level indices.
AgentState locate(Point2 p, std::size_t h_idx, std::size_t p_idx, const GridSpec& grid);

enum class Move : std::uint8_t { right, left, forward, backward, up, down, stay };
enum class PowerDelta : std::uint8_t { increase, decrease, maintain };

inline constexpr std::size_t kMoveCount = 7;
inline constexpr std::size_t kPowerDeltaCount = 3;
inline constexpr std::size_t kActionCount = kMoveCount * kPowerDeltaCount;

/// Action index = move * 3 + power delta.
struct ActionId {
  Move move = Move::stay;
  PowerDelta power = PowerDelta::maintain;

  static ActionId from_index(std::size_t index);
  [[nodiscard]] std::size_t index() const noexcept {
    return static_cast<std::size_t>(move) * kPowerDeltaCount + static_cast<std::size_t>(power);
  }
  friend bool operator==(const ActionId&, const ActionId&) = default;
};

std::string to_string(Move move);
std::string to_string(PowerDelta delta);

/// Moves one index in the action's dimension. A move that would leave the
/// grid, altitude range or power range leaves that coordinate unchanged.
AgentState apply_action(const AgentState& s, ActionId action, const GridSpec& grid);

/// +1 when the new sum rate is strictly larger, otherwise -1.
double global_reward(double sum_rate_new, double sum_rate_old) noexcept;

/// One dense state x action table per agent, plus visit counts.
class QTableSet {
public:
  QTableSet(std::size_t agents, std::size_t states, std::size_t actions = kActionCount);

  [[nodiscard]] std::size_t agents() const noexcept { return agents_; }
  [[nodiscard]] std::size_t states() const noexcept { return states_; }
  [[nodiscard]] std::size_t actions() const noexcept { return actions_; }
  /// Total stored Q values: agents * states * actions.
  [[nodiscard]] std::size_t entry_count() const noexcept { return values_.size(); }

  [[nodiscard]] double& q(std::size_t agent, std::size_t s, std::size_t a);
  [[nodiscard]] double q(std::size_t agent, std::size_t s, std::size_t a) const;
  [[nodiscard]] std::span<const double> row(std::size_t agent, std::size_t s) const;
  [[nodiscard]] std::span<double> row(std::size_t agent, std::size_t s);
  [[nodiscard]] std::uint64_t& visits(std::size_t agent, std::size_t s, std::size_t a);
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

private:
  [[nodiscard]] std::size_t offset(std::size_t agent, std::size_t s, std::size_t a) const;

  std::size_t agents_;
  std::size_t states_;
  std::size_t actions_;
  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;
};

/// Q <- (1 - lr) Q + lr (r + discount * max_b Q(s', b)) on one agent's
/// table. Returns the new value.
double q_update(QTableSet& tables, std::size_t agent, std::size_t s, std::size_t a, double reward,
                std::size_t s_next, double learning_rate, double discount);

enum class SelectionMode {
  shared_sum,   // argmax over the sum of every agent's current Q-row
  independent,  // argmax over the agent's own row
};

/// Epsilon-greedy joint action. Each agent explores with probability
/// epsilon; otherwise it takes the greedy action, ties to the lowest index.
std::vector<std::size_t> select_joint_action(const QTableSet& tables, std::span<const std::size_t> states,
                                             double epsilon, Rng& rng,
                                             SelectionMode mode = SelectionMode::shared_sum);

/// Greedy action per agent (epsilon = 0).
std::vector<std::size_t> greedy_joint_action(const QTableSet& tables, std::span<const std::size_t> states,
                                             SelectionMode mode = SelectionMode::shared_sum);

struct StepResult {
  std::vector<std::size_t> next_states;
  std::vector<double> rewards;  // one per agent
  double metric = 0.0;          // e.g. sum rate after the step
};

/// Environment driven by train(). States and actions are plain indices.
class MultiAgentEnv {
public:
  virtual ~MultiAgentEnv() = default;
  [[nodiscard]] virtual std::size_t agent_count() const = 0;
  [[nodiscard]] virtual std::size_t state_count() const = 0;
  [[nodiscard]] virtual std::size_t action_count() const = 0;
  /// Starts an episode and returns the initial state of every agent.
  virtual std::vector<std::size_t> reset() = 0;
  /// Metric of the current joint state.
  [[nodiscard]] virtual double metric() const = 0;
  virtual StepResult step(std::span<const std::size_t> actions) = 0;
};

struct EpsilonSchedule {
  double start = 0.5;
  double decay = 0.995;  // multiplied in once per episode
  double floor = 0.05;

  [[nodiscard]] double at(std::size_t episode) const noexcept;
};

enum class LearningRateMode {
  constant,      // fixed learning_rate
  robbins_monro  // 1 / (1 + visits(s, a))^rm_exponent
};

struct TrainOptions {
  std::size_t episodes = 1;
  std::size_t steps_per_episode = 100;
  EpsilonSchedule epsilon;
  double learning_rate = 0.01;
  double discount = 0.7;
  LearningRateMode rate_mode = LearningRateMode::constant;
  double rm_exponent = 1.0;
  SelectionMode selection = SelectionMode::shared_sum;
  double reward_scale = 1.0;
  std::size_t curve_stride = 0;  // record a curve point every this many steps; 0 disables
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpisodeStats {
  double final_metric = 0.0;
  double best_metric = 0.0;
  double cum_reward = 0.0;
};

struct CurvePoint {
  std::size_t trial = 0;
  std::size_t iteration = 0;
  double metric = 0.0;
  double cum_reward = 0.0;
};

struct TrainResult {
  std::vector<EpisodeStats> episodes;
  std::vector<CurvePoint> curve;
  std::vector<std::size_t> best_states;  // joint state with the highest metric seen
  double best_metric = -std::numeric_limits<double>::infinity();
  std::size_t steps = 0;
};

/// Episodic multi-agent Q-learning. Every step shares the agents' current
/// Q-rows, picks an epsilon-greedy joint action, applies it and updates each
/// agent's table in agent order. The rewards are multiplied by reward_scale.
TrainResult train(MultiAgentEnv& env, QTableSet& tables, const TrainOptions& options);

/// Joint UAV environment on a fixed user snapshot. The reward is the global
/// +1/-1 sum-rate comparison, shared by every agent. Link gains for every
/// grid position are precomputed.
class UavPlacementEnv final : public MultiAgentEnv {
public:
  UavPlacementEnv(GridSpec grid, ChannelParams channel, std::span<const Point2> users,
                  std::span<const std::size_t> assignment, std::size_t n_uavs,
                  std::vector<AgentState> start, bool power_control = true);

  [[nodiscard]] std::size_t agent_count() const override { return start_.size(); }
  [[nodiscard]] std::size_t state_count() const override { return grid_.state_count(); }
  [[nodiscard]] std::size_t action_count() const override { return kActionCount; }
  std::vector<std::size_t> reset() override;
  [[nodiscard]] double metric() const override { return current_rate_; }
  StepResult step(std::span<const std::size_t> actions) override;

  void set_start(std::vector<AgentState> start);
  [[nodiscard]] const std::vector<AgentState>& current() const noexcept { return current_; }
  /// Sum rate of the snapshot with UAVs at the given grid states.
  [[nodiscard]] double sum_rate_at(std::span<const AgentState> states) const;
  [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }

private:
  GridSpec grid_;
  ChannelParams channel_;
  std::vector<std::size_t> assignment_;
  std::vector<std::size_t> sizes_;
  std::vector<double> gains_;  // position index x user
  std::size_t n_users_;
  std::vector<AgentState> start_;
  std::vector<AgentState> current_;
  bool power_control_;
  double current_rate_ = 0.0;
};

/// Cell of each cluster centroid at the middle altitude and the initial power.
std::vector<AgentState> centroid_above(std::span<const Point2> centroids, const GridSpec& grid);

struct PlacementOptions {
  TrainOptions train;
  bool power_control = true;
};

struct PlacementResult {
  std::vector<AgentState> states;
  double sum_rate = 0.0;           // on the snapshot used for learning
  double baseline_sum_rate = 0.0;  // centroid-above placement on the same snapshot
  TrainResult training;
};

/// Learns an initial deployment on a static snapshot. Episodes start from
/// the centroid-above placement; the result is the best joint state seen
/// during training or the closing greedy rollout, so it is never worse than
/// the starting placement.
PlacementResult initial_placement(std::span<const Point2> users, std::span<const std::size_t> assignment,
                                  std::span<const Point2> centroids, const GridSpec& grid,
                                  const ChannelParams& channel, const PlacementOptions& options,
                                  QTableSet* tables = nullptr);

/// Moves `from` one index per dimension towards `to`.
AgentState step_towards(const AgentState& from, const AgentState& to);

nlohmann::json q_tables_to_json(const QTableSet& tables, const GridSpec& grid, const EpsilonSchedule& eps);

}  // namespace aeronet
