#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace silico::cluster {

using Point = std::vector<double>;

struct ClusterModel {
  int k = 0;
  std::vector<Point> centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  uint64_t seed = 0;
  int iterations_run = 0;
};

struct ClusterQuality {
  int k = 0;
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double davies_bouldin = 0.0;
  bool db_degenerate = false;  // coincident centroids
};

struct SelectKResult {
  int k = 0;
  bool manual = false;
  std::vector<ClusterQuality> qualities;
};

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed
// (points, k, seed); the seeding draws over a content-hash canonical order,
// so permuting the input permutes the assignments identically. Empty
// clusters are repaired by re-seeding at the point farthest from its
// assigned centroid. Iterates until the assignment is a fixed point (or
// max_iter), so the result is always a locally optimal partition.
ClusterModel kmeans(const std::vector<Point>& points, int k, uint64_t seed,
                    int max_iter = 300, double tol = 1e-6);

// Mean over points of (b - a) / max(a, b); singletons contribute 0, and so
// do points whose distances are all zero.
double silhouette(const std::vector<Point>& points,
                  const std::vector<int>& assignments);

double calinski_harabasz(const std::vector<Point>& points,
                         const std::vector<int>& assignments);

// Mean over clusters of the worst (sigma_i + sigma_j) / d(c_i, c_j);
// +infinity when two centroids coincide.
double davies_bouldin(const std::vector<Point>& points,
                      const std::vector<int>& assignments);

// All three indices for every k in [k_min, k_max]; the automatic choice
// maximizes silhouette with ties broken by higher CH, then lower DB, then
// smaller k. An explicit override always wins and is flagged manual.
SelectKResult select_k(const std::vector<Point>& points, int k_min, int k_max,
                       uint64_t seed, std::optional<int> override_k = std::nullopt,
                       int max_iter = 300, double tol = 1e-6);

double squared_distance(const Point& a, const Point& b);

// Optional pre-clustering step: scale every row to unit L2 norm, which makes
// Euclidean k-means monotone in cosine similarity. Zero rows pass through.
std::vector<Point> normalize_rows(const std::vector<Point>& points);

}  // namespace silico::cluster
