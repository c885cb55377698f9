#include "silico/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "silico/rng.hpp"
#include "silico/sha256.hpp"
#include "silico/text.hpp"

namespace silico::cluster {

double squared_distance(const Point& a, const Point& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

namespace {

// content hash of a point, for the order-independent seeding permutation
uint64_t point_hash(const Point& p) {
  std::string bytes;
  bytes.reserve(p.size() * 24);
  for (double v : p) {
    bytes += format_double(v);
    bytes.push_back(',');
  }
  return sha256_prefix64(bytes);
}

std::vector<size_t> canonical_order(const std::vector<Point>& points) {
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<uint64_t> hashes(points.size());
  for (size_t i = 0; i < points.size(); ++i) hashes[i] = point_hash(points[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return hashes[a] < hashes[b]; });
  return order;
}

std::vector<Point> kmeanspp_init(const std::vector<Point>& points, int k,
                                 Rng& rng) {
  std::vector<size_t> order = canonical_order(points);
  std::vector<Point> centroids;
  centroids.reserve(size_t(k));
  centroids.push_back(points[order[rng.next_index(order.size())]]);
  std::vector<double> d2(points.size());
  while (int(centroids.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) {
        best = std::min(best, squared_distance(points[i], c));
      }
      d2[i] = best;
      total += best;
    }
    size_t chosen = order[0];
    if (total > 0.0) {
      double r = rng.next_double() * total;
      double acc = 0.0;
      chosen = order.back();
      for (size_t idx : order) {
        acc += d2[idx];
        if (r < acc) {
          chosen = idx;
          break;
        }
      }
    } else {
      // all points coincide with a centroid already; any choice is equal
      chosen = order[rng.next_index(order.size())];
    }
    centroids.push_back(points[chosen]);
  }
  return centroids;
}

double assign_points(const std::vector<Point>& points,
                     const std::vector<Point>& centroids,
                     std::vector<int>& assignments) {
  double inertia = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (size_t c = 0; c < centroids.size(); ++c) {
      double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        best_c = int(c);
      }
    }
    assignments[i] = best_c;
    inertia += best;
  }
  return inertia;
}

}  // namespace

ClusterModel kmeans(const std::vector<Point>& points, int k, uint64_t seed,
                    int max_iter, double tol) {
  size_t n = points.size();
  if (k < 1) throw std::domain_error("kmeans: k must be >= 1");
  if (size_t(k) > n) {
    throw std::domain_error("kmeans: k=" + std::to_string(k) + " exceeds n=" +
                            std::to_string(n));
  }
  size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::domain_error("kmeans: mixed dimensions");
  }

  Rng rng(derive_seed(seed, "kmeans-init"));
  ClusterModel model;
  model.k = k;
  model.seed = seed;
  model.centroids = kmeanspp_init(points, k, rng);
  model.assignments.assign(n, 0);

  std::vector<int> prev(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    model.iterations_run = iter + 1;
    model.inertia = assign_points(points, model.centroids, model.assignments);

    // repair empty clusters: re-seed each at the point farthest from its
    // assigned centroid and pin that point there, so coincident points
    // cannot leave the repaired cluster empty again
    {
      std::vector<int> pin(n, -1);
      for (int repairs = 0; repairs < k; ++repairs) {
        std::vector<long> sizes(size_t(k), 0);
        for (int a : model.assignments) sizes[size_t(a)]++;
        int empty = -1;
        for (int c = 0; c < k; ++c) {
          if (sizes[size_t(c)] == 0) {
            empty = c;
            break;
          }
        }
        if (empty < 0) break;
        size_t farthest = n;
        double worst = -1.0;
        for (size_t i = 0; i < n; ++i) {
          if (pin[i] >= 0) continue;
          double d = squared_distance(points[i],
                                      model.centroids[size_t(model.assignments[i])]);
          if (d > worst) {
            worst = d;
            farthest = i;
          }
        }
        if (farthest == n) break;  // everything pinned already
        pin[farthest] = empty;
        model.centroids[size_t(empty)] = points[farthest];
        model.inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
          if (pin[i] >= 0) {
            model.assignments[i] = pin[i];
            model.inertia +=
                squared_distance(points[i], model.centroids[size_t(pin[i])]);
            continue;
          }
          double best = std::numeric_limits<double>::infinity();
          int best_c = 0;
          for (int c = 0; c < k; ++c) {
            double d = squared_distance(points[i], model.centroids[size_t(c)]);
            if (d < best) {
              best = d;
              best_c = c;
            }
          }
          model.assignments[i] = best_c;
          model.inertia += best;
        }
      }
    }

    if (model.assignments == prev) break;  // fixed point
    prev = model.assignments;

    // centroid update
    std::vector<Point> next(size_t(k), Point(dim, 0.0));
    std::vector<long> sizes(size_t(k), 0);
    for (size_t i = 0; i < n; ++i) {
      int a = model.assignments[i];
      sizes[size_t(a)]++;
      for (size_t d = 0; d < dim; ++d) next[size_t(a)][d] += points[i][d];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      for (size_t d = 0; d < dim; ++d) next[size_t(c)][d] /= double(sizes[size_t(c)]);
      shift = std::max(shift, squared_distance(next[size_t(c)], model.centroids[size_t(c)]));
    }
    model.centroids = std::move(next);
    if (shift < tol * tol) {
      // final pass keeps assignments consistent with the moved centroids;
      // stop only if the sub-tol shift flipped nothing, so the returned
      // partition is always a Lloyd fixed point with non-empty clusters
      model.inertia = assign_points(points, model.centroids, model.assignments);
      if (model.assignments == prev) break;
    }
  }
  return model;
}

double silhouette(const std::vector<Point>& points,
                  const std::vector<int>& assignments) {
  size_t n = points.size();
  if (n != assignments.size()) throw std::domain_error("silhouette: size mismatch");
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  if (k < 2) throw std::domain_error("silhouette: need at least 2 clusters");
  if (n < 3) throw std::domain_error("silhouette: need at least 3 points");

  std::vector<long> sizes(size_t(k), 0);
  for (int a : assignments) sizes[size_t(a)]++;

  double total = 0.0;
  std::vector<double> mean_dist(static_cast<size_t>(k));
  for (size_t i = 0; i < n; ++i) {
    int own = assignments[i];
    if (sizes[size_t(own)] <= 1) continue;  // singleton contributes 0
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      mean_dist[size_t(assignments[j])] += std::sqrt(squared_distance(points[i], points[j]));
    }
    double a = mean_dist[size_t(own)] / double(sizes[size_t(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || sizes[size_t(c)] == 0) continue;
      b = std::min(b, mean_dist[size_t(c)] / double(sizes[size_t(c)]));
    }
    if (std::isinf(b)) continue;  // no other non-empty cluster exists
    double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;  // identical points: s = 0
  }
  return total / double(n);
}

double calinski_harabasz(const std::vector<Point>& points,
                         const std::vector<int>& assignments) {
  size_t n = points.size();
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  if (k < 2) throw std::domain_error("calinski_harabasz: need at least 2 clusters");
  size_t dim = points[0].size();

  Point grand(dim, 0.0);
  for (const auto& p : points) {
    for (size_t d = 0; d < dim; ++d) grand[d] += p[d];
  }
  for (size_t d = 0; d < dim; ++d) grand[d] /= double(n);

  std::vector<Point> centroids(size_t(k), Point(dim, 0.0));
  std::vector<long> sizes(size_t(k), 0);
  for (size_t i = 0; i < n; ++i) {
    int a = assignments[i];
    sizes[size_t(a)]++;
    for (size_t d = 0; d < dim; ++d) centroids[size_t(a)][d] += points[i][d];
  }
  for (int c = 0; c < k; ++c) {
    for (size_t d = 0; d < dim; ++d) centroids[size_t(c)][d] /= double(sizes[size_t(c)]);
  }

  double between = 0.0;
  for (int c = 0; c < k; ++c) {
    between += double(sizes[size_t(c)]) * squared_distance(centroids[size_t(c)], grand);
  }
  double within = 0.0;
  for (size_t i = 0; i < n; ++i) {
    within += squared_distance(points[i], centroids[size_t(assignments[i])]);
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / double(k - 1)) / (within / double(n - size_t(k)));
}

double davies_bouldin(const std::vector<Point>& points,
                      const std::vector<int>& assignments) {
  size_t n = points.size();
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  if (k < 2) throw std::domain_error("davies_bouldin: need at least 2 clusters");
  size_t dim = points[0].size();

  std::vector<Point> centroids(size_t(k), Point(dim, 0.0));
  std::vector<long> sizes(size_t(k), 0);
  for (size_t i = 0; i < n; ++i) {
    int a = assignments[i];
    sizes[size_t(a)]++;
    for (size_t d = 0; d < dim; ++d) centroids[size_t(a)][d] += points[i][d];
  }
  for (int c = 0; c < k; ++c) {
    for (size_t d = 0; d < dim; ++d) centroids[size_t(c)][d] /= double(sizes[size_t(c)]);
  }
  // sigma_i: mean distance of members to their centroid
  std::vector<double> sigma(size_t(k), 0.0);
  for (size_t i = 0; i < n; ++i) {
    int a = assignments[i];
    sigma[size_t(a)] += std::sqrt(squared_distance(points[i], centroids[size_t(a)]));
  }
  for (int c = 0; c < k; ++c) sigma[size_t(c)] /= double(sizes[size_t(c)]);

  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = std::sqrt(squared_distance(centroids[size_t(i)], centroids[size_t(j)]));
      if (d == 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, (sigma[size_t(i)] + sigma[size_t(j)]) / d);
    }
    total += worst;
  }
  return total / double(k);
}

std::vector<Point> normalize_rows(const std::vector<Point>& points) {
  std::vector<Point> out = points;
  for (auto& p : out) {
    double norm = 0.0;
    for (double v : p) norm += v * v;
    if (norm <= 0.0) continue;
    norm = std::sqrt(norm);
    for (double& v : p) v /= norm;
  }
  return out;
}

SelectKResult select_k(const std::vector<Point>& points, int k_min, int k_max,
                       uint64_t seed, std::optional<int> override_k,
                       int max_iter, double tol) {
  if (k_min > k_max) throw std::domain_error("select_k: empty k range");
  if (points.size() < 3 || k_min < 2 || size_t(k_max) + 1 > points.size()) {
    throw std::domain_error("select_k: range must lie within [2, n-1]");
  }
  SelectKResult out;
  for (int k = k_min; k <= k_max; ++k) {
    ClusterModel model = kmeans(points, k, derive_seed(seed, "k=" + std::to_string(k)),
                                max_iter, tol);
    ClusterQuality q;
    q.k = k;
    q.silhouette = silhouette(points, model.assignments);
    q.calinski_harabasz = calinski_harabasz(points, model.assignments);
    q.davies_bouldin = davies_bouldin(points, model.assignments);
    q.db_degenerate = std::isinf(q.davies_bouldin);
    out.qualities.push_back(q);
  }
  if (override_k) {
    out.k = *override_k;
    out.manual = true;
    return out;
  }
  const ClusterQuality* best = &out.qualities.front();
  for (const auto& q : out.qualities) {
    if (q.silhouette > best->silhouette ||
        (q.silhouette == best->silhouette &&
         (q.calinski_harabasz > best->calinski_harabasz ||
          (q.calinski_harabasz == best->calinski_harabasz &&
           q.davies_bouldin < best->davies_bouldin)))) {
      best = &q;
    }
  }
  out.k = best->k;
  return out;
}

}  // namespace silico::cluster
