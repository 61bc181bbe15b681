// Microbenchmarks of the inner loops: link evaluation, reservoir update,
// Lloyd pass and joint action selection.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "aeronet/channel.hpp"
#include "aeronet/clustering.hpp"
#include "aeronet/esn.hpp"
#include "aeronet/marl.hpp"

using namespace aeronet;

namespace {

std::vector<Point2> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2000.0);
  std::vector<Point2> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng)};
  return pts;
}

void BM_EvaluateLinks(benchmark::State& state) {
  const auto users = random_points(static_cast<std::size_t>(state.range(0)), 1);
  const ChannelParams params = ChannelParams::from_db(2e9, 0.36, 0.21, 0, 2, 3, 23, -170, 1e6, 20e3);
  const std::vector<UavState> uavs{{500, 500, 100, 0.1}, {1500, 500, 100, 0.1}, {500, 1500, 100, 0.1},
                                   {1500, 1500, 100, 0.1}};
  std::vector<std::size_t> assignment(users.size());
  for (std::size_t k = 0; k < users.size(); ++k) assignment[k] = k % uavs.size();
  for (auto _ : state) benchmark::DoNotOptimize(sum_rate(assignment, uavs, users, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvaluateLinks)->Arg(50)->Arg(500);

void BM_ReservoirStep(benchmark::State& state) {
  EsnConfig config;
  config.reservoir_size = static_cast<std::size_t>(state.range(0));
  EsnModel model = build_reservoir(config);
  const Eigen::Vector2d u(0.1, -0.2);
  for (auto _ : state) {
    model.step(u);
    benchmark::DoNotOptimize(model.state().data());
  }
}
BENCHMARK(BM_ReservoirStep)->Arg(100)->Arg(500)->Arg(1000);

void BM_LloydPass(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2);
  const Clustering start = kmeans(pts, 4, 3);
  for (auto _ : state) {
    Clustering c = start;
    benchmark::DoNotOptimize(lloyd_pass(c, pts));
  }
}
BENCHMARK(BM_LloydPass)->Arg(50)->Arg(5000);

void BM_SelectJointAction(benchmark::State& state) {
  const GridSpec grid;
  const std::size_t agents = static_cast<std::size_t>(state.range(0));
  QTableSet tables(agents, grid.state_count());
  Rng rng(4);
  std::vector<std::size_t> states(agents);
  for (std::size_t j = 0; j < agents; ++j) states[j] = (j * 997) % grid.state_count();
  for (auto _ : state) benchmark::DoNotOptimize(select_joint_action(tables, states, 0.1, rng));
}
BENCHMARK(BM_SelectJointAction)->Arg(2)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
