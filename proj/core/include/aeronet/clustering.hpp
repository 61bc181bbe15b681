#pragma once

// Lloyd k-means and a genetic k-means wrapper that partition users into one
// cluster per UAV.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "aeronet/geo_mobility.hpp"

namespace aeronet {

struct Clustering {
  std::vector<std::size_t> assignment;  // user -> cluster in [0, n)
  std::vector<Point2> centroids;

  [[nodiscard]] std::size_t size() const noexcept { return centroids.size(); }
};

struct GaParams {
  std::size_t population_size = 24;
  std::size_t generations = 40;
  double mutation_rate = 0.2;   // per-centroid probability
  double crossover_rate = 0.8;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Counts point-to-centroid distance evaluations.
struct DistanceCounter {
  std::size_t distances = 0;
  std::size_t lloyd_passes = 0;
};

/// Within-cluster sum of squared distances to the stored centroids.
double wcss(const Clustering& clustering, std::span<const Point2> points);

/// Sets every centroid to the mean of its members. Empty clusters keep their
/// previous centroid.
void recompute_centroids(Clustering& clustering, std::span<const Point2> points);

/// Moves the point farthest from its centroid in the largest cluster into
/// each empty cluster, then recomputes centroids. Returns the number of
/// repairs made.
std::size_t repair_empty_clusters(Clustering& clustering, std::span<const Point2> points);

/// One Lloyd iteration: assign each point to its nearest centroid (ties to
/// the lowest index), repair empty clusters, recompute means. Returns true
/// if any assignment changed.
bool lloyd_pass(Clustering& clustering, std::span<const Point2> points,
                DistanceCounter* counter = nullptr);

/// Lloyd iterations from the given centroids until no assignment changes.
Clustering lloyd(std::span<const Point2> points, std::vector<Point2> centroids,
                 DistanceCounter* counter = nullptr, std::size_t max_iterations = 1000);

/// k-means++ seeding followed by Lloyd to a fixed point.
Clustering kmeans(std::span<const Point2> points, std::size_t n, std::uint64_t seed,
                  DistanceCounter* counter = nullptr);

/// Genetic k-means. Individuals are centroid sets with fitness 1/WCSS.
/// Individual 0 of the first generation is the kmeans() result for the same
/// seed and the best individual always survives, so the result is never
/// worse than kmeans().
Clustering gak_means(std::span<const Point2> points, std::size_t n, const GaParams& ga,
                     DistanceCounter* counter = nullptr);

nlohmann::json clustering_to_json(const Clustering& clustering);

}  // namespace aeronet
