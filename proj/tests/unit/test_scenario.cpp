#include <doctest.h>

#include <filesystem>

#include "aeronet/error.hpp"
#include "aeronet/scenario.hpp"

using namespace aeronet;

TEST_SUITE("scenario") {
  TEST_CASE("the bundled scenario file holds the defaults") {
    const Scenario s = load_scenario(std::filesystem::path(AERONET_DATA_DIR) / "scenario.cfg");
    CHECK(render_scenario(s) == render_scenario(default_scenario()));
  }

  TEST_CASE("render and parse round trip") {
    Scenario s = default_scenario();
    s.n_uavs = 3;
    s.esn.spectral_radius = 0.75;
    s.grid.altitude_levels = {60, 90};
    s.controller = ControllerKind::gakmeans_follow;
    s.channel.power_bound_linear_altitude = true;
    s.rl.selection = SelectionMode::independent;
    CHECK(render_scenario(parse_scenario(render_scenario(s))) == render_scenario(s));
  }

  TEST_CASE("missing keys keep their defaults") {
    const Scenario s = parse_scenario("[scenario]\nn_uavs = 2\n");
    CHECK(s.n_uavs == 2);
    CHECK(s.n_slots == 256);
    CHECK(s.esn.reservoir_size == 1000);
    CHECK(s.grid.cell_x_m == doctest::Approx(100.0));
  }

  TEST_CASE("typos and bad values are rejected") {
    CHECK_THROWS_AS(parse_scenario("[scenario]\nn_uav = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[scenery]\nn_uavs = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[scenario]\nn_uavs = two\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[scenario]\ncontroller = greedy\n"), ValidationError);
    CHECK_THROWS_AS(parse_scenario("[grid]\naltitude_levels = 150,100\n"), ValidationError);
    CHECK_THROWS_AS(parse_scenario("[rl]\nslot_episodes = 0\n"), ValidationError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.cfg"), ParseError);
  }

  TEST_CASE("controller names") {
    for (auto k : {ControllerKind::learned, ControllerKind::learned_no_power_control,
                   ControllerKind::static_placement, ControllerKind::gakmeans_follow}) {
      CHECK(parse_controller(to_string(k)) == k);
    }
  }

  TEST_CASE("sweep axes") {
    const Scenario s = with_axis(default_scenario(), "reservoir_size", "100");
    CHECK(s.esn.reservoir_size == 100);
    CHECK(with_axis(default_scenario(), "controller", "static").controller == ControllerKind::static_placement);
    try {
      (void)with_axis(default_scenario(), "colour", "red");
      FAIL("no error");
    } catch (const ValidationError& e) {
      for (const auto& a : sweep_axes()) CHECK(std::string(e.what()).find(a) != std::string::npos);
    }
  }

  TEST_CASE("channel settings convert to linear units") {
    const ChannelParams p = default_scenario().channel.params();
    CHECK(p.mu_nlos == doctest::Approx(199.526231));
    CHECK(p.noise_psd_w_per_hz == doctest::Approx(1e-20));
    CHECK(p.min_rate_bps == 20e3);
  }
}
