#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "aeronet/channel.hpp"
#include "aeronet/error.hpp"
#include "aeronet/marl.hpp"
#include "support/oracles.hpp"

using namespace aeronet;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.x_cells = 5;
  g.y_cells = 5;
  g.cell_x_m = 100;
  g.cell_y_m = 100;
  return g;
}

ChannelParams params() { return ChannelParams::from_db(2e9, 0.36, 0.21, 0, 2, 3, 23, -170, 1e6, 20e3); }

}  // namespace

TEST_SUITE("marl") {
  TEST_CASE("state encoding round trip") {
    const GridSpec g = GridSpec{};
    for (std::size_t i = 0; i < g.state_count(); i += 37) CHECK(encode_state(decode_state(i, g), g) == i);
    CHECK(g.state_count() == 20 * 20 * 3 * 3);
    CHECK_THROWS_AS(decode_state(g.state_count(), g), ValidationError);
  }

  TEST_CASE("action indices") {
    for (std::size_t i = 0; i < kActionCount; ++i) CHECK(ActionId::from_index(i).index() == i);
    CHECK(kActionCount == 21);
    CHECK(to_string(Move::forward) == "forward");
    CHECK(to_string(PowerDelta::maintain) == "maintain");
  }

  TEST_CASE("actions move one index and saturate at the edges") {
    const GridSpec g = small_grid();
    const AgentState s{2, 2, 1, 0};
    CHECK(apply_action(s, {Move::stay, PowerDelta::maintain}, g) == s);
    CHECK(apply_action({4, 2, 1, 0}, {Move::right, PowerDelta::maintain}, g).cell_x == 4);
    const AgentState up = apply_action(s, {Move::stay, PowerDelta::increase}, g);
    CHECK(up.p_idx == 1);
    CHECK(to_uav_state(s, g).p_total == doctest::Approx(0.08));
    CHECK(to_uav_state(up, g).p_total == doctest::Approx(0.09));
    CHECK(apply_action({0, 0, 0, 0}, {Move::down, PowerDelta::decrease}, g) == AgentState{0, 0, 0, 0});
    CHECK(apply_action(s, {Move::up, PowerDelta::maintain}, g).h_idx == 2);
  }

  TEST_CASE("reward sign") {
    CHECK(global_reward(10, 9) == 1.0);
    CHECK(global_reward(9, 10) == -1.0);
    CHECK(global_reward(10, 10) == -1.0);
  }

  TEST_CASE("Q update") {
    QTableSet t(1, 2, 3);
    CHECK(q_update(t, 0, 0, 1, 1.0, 1, 0.5, 0.7) == doctest::Approx(0.5));
    t.q(0, 1, 2) = 0.0;
    t.q(0, 0, 0) = 4.2;
    CHECK(q_update(t, 0, 0, 0, 0.0, 1, 1.0, 0.7) == 0.0);
    t.q(0, 0, 2) = 1.5;
    CHECK(q_update(t, 0, 0, 2, 9.0, 1, 0.0, 0.7) == 1.5);
  }

  TEST_CASE("uniform exploration at epsilon one") {
    QTableSet t(1, 1);
    t.q(0, 0, 5) = 10;
    Rng rng(3);
    std::vector<double> counts(kActionCount, 0);
    const std::vector<std::size_t> states{0};
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) counts[select_joint_action(t, states, 1.0, rng)[0]] += 1;
    double chi2 = 0;
    const double expected = static_cast<double>(draws) / kActionCount;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 37.57);  // 99th percentile with 20 degrees of freedom
  }

  TEST_CASE("greedy selection sums the agents' rows and breaks ties low") {
    QTableSet t(2, 1);
    t.q(0, 0, 0) = 1.0;
    t.q(1, 0, 1) = 0.5;
    const std::vector<std::size_t> states{0, 0};
    CHECK(greedy_joint_action(t, states) == std::vector<std::size_t>{0, 0});
    CHECK(greedy_joint_action(t, states, SelectionMode::independent) == std::vector<std::size_t>{0, 1});
    QTableSet zero(2, 1);
    Rng rng(1);
    CHECK(select_joint_action(zero, states, 0.0, rng) == std::vector<std::size_t>{0, 0});
  }

  TEST_CASE("epsilon schedule") {
    const EpsilonSchedule e{0.5, 0.995, 0.05};
    CHECK(e.at(0) == 0.5);
    CHECK(e.at(1) == doctest::Approx(0.4975));
    CHECK(e.at(100000) == 0.05);
  }

  TEST_CASE("a greedy learner on an all-zero table repeats the tie-break action") {
    // Action 1 would pay, but a learner that never explores never tries it.
    const oracle::Mdp m{1, 2, {0, 1}, {1, 1}};
    oracle::IndependentMdpEnv env({m}, 1);
    QTableSet t(1, 1, 2);
    TrainOptions o;
    o.episodes = 2;
    o.steps_per_episode = 20;
    o.epsilon = {0, 1, 0};
    o.learning_rate = 0.5;
    train(env, t, o);
    CHECK(t.q(0, 0, 0) == 0.0);
    CHECK(t.q(0, 0, 1) == 0.0);
    CHECK(greedy_joint_action(t, std::vector<std::size_t>{0}) == std::vector<std::size_t>{0});
  }

  TEST_CASE("Q-learning finds the optimal policy of a small MDP") {
    const oracle::Mdp m{2, 2, {0, 1, 0.5, 0}, {0.9, 0.1, 0.1, 0.9, 0.2, 0.8, 0.7, 0.3}};
    const auto star = oracle::optimal_q(m, 0.7);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      oracle::IndependentMdpEnv env({m}, seed);
      QTableSet t(1, 2, 2);
      TrainOptions o;
      o.episodes = 10;
      o.steps_per_episode = 1000;
      o.epsilon = {1, 1, 1};
      o.discount = 0.7;
      o.rate_mode = LearningRateMode::robbins_monro;
      o.rm_exponent = 1.0;
      o.seed = seed;
      train(env, t, o);
      for (std::size_t s = 0; s < 2; ++s) {
        CHECK(oracle::greedy(t.row(0, s)) == oracle::greedy(std::span<const double>(star).subspan(2 * s, 2)));
      }
    }
  }

  TEST_CASE("scaling the reward scales every value and keeps every choice") {
    const oracle::Mdp m{3, 2, {0, 0.3, 0, 0.3, 1, 0.5}, {0.1, 0.9, 0, 1, 0, 0, 0.1, 0, 0.9, 1, 0, 0, 0.2, 0, 0.8, 0, 1, 0}};
    auto run = [&](double scale) {
      oracle::IndependentMdpEnv env({m}, 4);
      QTableSet t(1, 3, 2);
      TrainOptions o;
      o.episodes = 5;
      o.steps_per_episode = 200;
      o.epsilon = {0.3, 1, 0.3};
      o.learning_rate = 0.1;
      o.reward_scale = scale;
      o.seed = 9;
      train(env, t, o);
      return t;
    };
    const QTableSet a = run(1.0);
    const QTableSet b = run(8.0);
    for (std::size_t i = 0; i < a.values().size(); ++i) CHECK(b.values()[i] == doctest::Approx(8.0 * a.values()[i]));
    for (std::size_t s = 0; s < 3; ++s) CHECK(oracle::greedy(a.row(0, s)) == oracle::greedy(b.row(0, s)));
  }

  TEST_CASE("learning-rate and schedule validation") {
    TrainOptions o;
    o.rate_mode = LearningRateMode::robbins_monro;
    o.rm_exponent = 0.5;
    CHECK_THROWS_AS(o.validate(), ValidationError);
    o.rm_exponent = 0.8;
    CHECK_NOTHROW(o.validate());
    o.episodes = 0;
    CHECK_THROWS_AS(o.validate(), ValidationError);
  }

  TEST_CASE("one UAV and one user: the lowest altitude at full power above the user") {
    const GridSpec g = small_grid();
    const std::vector<Point2> user{{250, 350}};
    const std::vector<std::size_t> assignment{0};
    const std::vector<Point2> centroid{{50, 50}};
    PlacementOptions o;
    o.train.episodes = 20;
    o.train.steps_per_episode = 200;
    o.train.epsilon = {0.5, 0.995, 0.05};
    const PlacementResult r = initial_placement(user, assignment, centroid, g, params(), o);
    REQUIRE(r.states.size() == 1);
    CHECK(r.states[0] == AgentState{2, 3, 0, 2});
    CHECK(r.sum_rate >= r.baseline_sum_rate);
  }

  TEST_CASE("centroid-above placement mirrors symmetric clusters") {
    const GridSpec g = small_grid();
    const std::vector<Point2> c{{120, 250}, {380, 250}};
    const auto s = centroid_above(c, g);
    CHECK(s[0].cell_x + s[1].cell_x == g.x_cells - 1);
    CHECK(s[0].cell_y == s[1].cell_y);
    CHECK(s[0].h_idx == g.middle_altitude_idx());
    CHECK(s[0].p_idx == g.initial_power_idx);
  }

  TEST_CASE("placement environment rewards and rates") {
    const GridSpec g = small_grid();
    const std::vector<Point2> users{{50, 50}, {450, 450}};
    const std::vector<std::size_t> assignment{0, 1};
    UavPlacementEnv env(g, params(), users, assignment, 2, {{0, 0, 1, 0}, {4, 4, 1, 0}});
    const auto s = env.reset();
    const double before = env.metric();
    const std::vector<UavState> uavs{to_uav_state({0, 0, 1, 0}, g), to_uav_state({4, 4, 1, 0}, g)};
    CHECK(before == doctest::Approx(sum_rate(assignment, uavs, users, params())).epsilon(1e-12));
    const std::size_t down_up = ActionId{Move::down, PowerDelta::increase}.index();
    const std::vector<std::size_t> act{down_up, down_up};
    const StepResult r = env.step(act);
    CHECK(r.metric > before);
    CHECK(r.rewards == std::vector<double>{1.0, 1.0});
    CHECK(decode_state(r.next_states[0], g) == AgentState{0, 0, 0, 1});

    UavPlacementEnv fixed(g, params(), users, assignment, 2, {{0, 0, 1, 0}, {4, 4, 1, 0}}, false);
    (void)fixed.reset();
    const StepResult f = fixed.step(act);
    CHECK(decode_state(f.next_states[0], g).p_idx == 0);
  }

  TEST_CASE("step towards moves one index per dimension") {
    CHECK(step_towards({0, 5, 2, 0}, {3, 1, 2, 2}) == AgentState{1, 4, 2, 1});
    CHECK(step_towards({3, 3, 1, 1}, {3, 3, 1, 1}) == AgentState{3, 3, 1, 1});
  }

  TEST_CASE("per-agent tables") {
    QTableSet t(4, 3600);
    CHECK(t.entry_count() == 4 * 3600 * 21);
    t.q(2, 10, 5) = 1.0;
    CHECK(t.q(1, 10, 5) == 0.0);
    CHECK_THROWS_AS((void)t.q(4, 0, 0), ValidationError);
  }
}
