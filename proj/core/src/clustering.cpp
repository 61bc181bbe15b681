#include "aeronet/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"
#include "aeronet/log.hpp"
#include "aeronet/rng.hpp"

namespace aeronet {

namespace {

double sq_dist(Point2 a, Point2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

void check_inputs(std::span<const Point2> points, std::size_t n) {
  if (n == 0) throw ValidationError("number of clusters must be positive");
  if (n > points.size()) {
    throw ValidationError("number of clusters (" + std::to_string(n) + ") exceeds number of points (" +
                          std::to_string(points.size()) + ")");
  }
}

std::vector<Point2> kmeanspp_seeds(std::span<const Point2> points, std::size_t n, Rng& rng) {
  std::vector<Point2> seeds;
  seeds.reserve(n);
  std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
  seeds.push_back(points[first(rng)]);
  std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
  while (seeds.size() < n) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], sq_dist(points[i], seeds.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (pick = 0; pick + 1 < points.size(); ++pick) {
        r -= d2[pick];
        if (r <= 0.0 && d2[pick] > 0.0) break;
      }
    } else {
      pick = first(rng);  // all points coincide with seeds; duplicates are repaired later
    }
    seeds.push_back(points[pick]);
  }
  return seeds;
}

struct Individual {
  std::vector<Point2> centroids;
  double cost = std::numeric_limits<double>::infinity();
};

Individual evaluate(std::span<const Point2> points, std::vector<Point2> centroids, DistanceCounter* counter) {
  Clustering c{std::vector<std::size_t>(points.size(), 0), std::move(centroids)};
  lloyd_pass(c, points, counter);
  const double cost = wcss(c, points);
  return {std::move(c.centroids), cost};
}

}  // namespace

void GaParams::validate() const {
  if (population_size == 0) throw ValidationError("GA population size must be positive");
  if (generations == 0) throw ValidationError("GA generations must be at least 1");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("mutation rate must lie in [0, 1]");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw ValidationError("crossover rate must lie in [0, 1]");
  }
}

double wcss(const Clustering& clustering, std::span<const Point2> points) {
  if (clustering.assignment.size() != points.size()) throw ValidationError("clustering does not cover every point");
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += sq_dist(points[i], clustering.centroids.at(clustering.assignment[i]));
  }
  return total;
}

void recompute_centroids(Clustering& clustering, std::span<const Point2> points) {
  const std::size_t n = clustering.size();
  std::vector<double> sx(n, 0.0);
  std::vector<double> sy(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = clustering.assignment[i];
    sx[c] += points[i].x;
    sy[c] += points[i].y;
    ++count[c];
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (count[c] == 0) continue;
    clustering.centroids[c] = {sx[c] / static_cast<double>(count[c]), sy[c] / static_cast<double>(count[c])};
  }
}

std::size_t repair_empty_clusters(Clustering& clustering, std::span<const Point2> points) {
  const std::size_t n = clustering.size();
  std::size_t repairs = 0;
  for (;;) {
    std::vector<std::size_t> count(n, 0);
    for (auto a : clustering.assignment) ++count[a];
    const auto empty = std::find(count.begin(), count.end(), 0U);
    if (empty == count.end()) break;
    const auto largest =
        static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    std::size_t farthest = points.size();
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (clustering.assignment[i] != largest) continue;
      const double d = sq_dist(points[i], clustering.centroids[largest]);
      if (d > best) {
        best = d;
        farthest = i;
      }
    }
    const auto target = static_cast<std::size_t>(empty - count.begin());
    clustering.assignment[farthest] = target;
    clustering.centroids[target] = points[farthest];
    recompute_centroids(clustering, points);
    ++repairs;
  }
  return repairs;
}

bool lloyd_pass(Clustering& clustering, std::span<const Point2> points, DistanceCounter* counter) {
  const std::size_t n = clustering.size();
  if (clustering.assignment.size() != points.size()) clustering.assignment.assign(points.size(), 0);
  bool changed = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = sq_dist(points[i], clustering.centroids[0]);
    for (std::size_t c = 1; c < n; ++c) {
      const double d = sq_dist(points[i], clustering.centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (clustering.assignment[i] != best) {
      clustering.assignment[i] = best;
      changed = true;
    }
  }
  if (counter != nullptr) {
    counter->distances += points.size() * n;
    ++counter->lloyd_passes;
  }
  if (repair_empty_clusters(clustering, points) > 0) changed = true;
  recompute_centroids(clustering, points);
  return changed;
}

Clustering lloyd(std::span<const Point2> points, std::vector<Point2> centroids, DistanceCounter* counter,
                 std::size_t max_iterations) {
  check_inputs(points, centroids.size());
  Clustering c{std::vector<std::size_t>(points.size(), 0), std::move(centroids)};
  // The first pass moves centroids to member means, so it never certifies a fixed point.
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const bool changed = lloyd_pass(c, points, counter);
    if (!changed && it > 0) return c;
  }
  logger().warn("k-means stopped after {} iterations without reaching a fixed point", max_iterations);
  return c;
}

Clustering kmeans(std::span<const Point2> points, std::size_t n, std::uint64_t seed, DistanceCounter* counter) {
  check_inputs(points, n);
  Rng rng(seed);
  return lloyd(points, kmeanspp_seeds(points, n, rng), counter);
}

Clustering gak_means(std::span<const Point2> points, std::size_t n, const GaParams& ga, DistanceCounter* counter) {
  check_inputs(points, n);
  ga.validate();

  double x_lo = points[0].x;
  double x_hi = points[0].x;
  double y_lo = points[0].y;
  double y_hi = points[0].y;
  for (const auto& p : points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  const double sigma_x = 0.05 * (x_hi - x_lo);
  const double sigma_y = 0.05 * (y_hi - y_lo);

  const Clustering seeded = kmeans(points, n, ga.rng_seed, counter);
  std::vector<Individual> population;
  population.reserve(ga.population_size);
  population.push_back({seeded.centroids, wcss(seeded, points)});
  for (std::size_t i = 1; i < ga.population_size; ++i) {
    Rng rng(derive_seed(ga.rng_seed, i));
    population.push_back(evaluate(points, kmeanspp_seeds(points, n, rng), counter));
  }

  auto best_of = [](const std::vector<Individual>& pop) {
    return static_cast<std::size_t>(
        std::min_element(pop.begin(), pop.end(), [](const auto& a, const auto& b) { return a.cost < b.cost; }) -
        pop.begin());
  };

  for (std::size_t gen = 1; gen < ga.generations; ++gen) {
    Rng rng(derive_seed(ga.rng_seed, 0x10000 + gen));
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto tournament = [&]() -> const Individual& {
      const auto& a = population[pick(rng)];
      const auto& b = population[pick(rng)];
      return a.cost <= b.cost ? a : b;
    };

    std::vector<Individual> next;
    next.reserve(population.size());
    next.push_back(population[best_of(population)]);
    while (next.size() < population.size()) {
      std::vector<Point2> child = tournament().centroids;
      if (n >= 2 && coin(rng) < ga.crossover_rate) {
        std::vector<Point2> other = tournament().centroids;
        auto by_x = [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); };
        std::sort(child.begin(), child.end(), by_x);
        std::sort(other.begin(), other.end(), by_x);
        std::uniform_int_distribution<std::size_t> cut(1, n - 1);
        const auto k = cut(rng);
        std::copy(other.begin() + static_cast<std::ptrdiff_t>(k), other.end(),
                  child.begin() + static_cast<std::ptrdiff_t>(k));
      }
      for (auto& c : child) {
        if (coin(rng) < ga.mutation_rate) {
          c.x += sigma_x * noise(rng);
          c.y += sigma_y * noise(rng);
        }
      }
      next.push_back(evaluate(points, std::move(child), counter));
    }
    population = std::move(next);
  }

  return lloyd(points, population[best_of(population)].centroids, counter);
}

nlohmann::json clustering_to_json(const Clustering& clustering) {
  nlohmann::json centroids = nlohmann::json::array();
  for (const auto& c : clustering.centroids) centroids.push_back({c.x, c.y});
  return {{"assignment", clustering.assignment}, {"centroids", std::move(centroids)}};
}

}  // namespace aeronet
