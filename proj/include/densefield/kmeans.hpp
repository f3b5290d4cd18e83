#pragma once

#include <limits>
#include <random>
#include <span>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // max center displacement that counts as converged
  int restarts = 10;        // independent k-means++ runs; lowest inertia wins
};

struct KMeansResult {
  std::vector<Vec3> centers;
  std::vector<std::int32_t> labels;
  double inertia = 0.0;
  int iterations = 0;
};

namespace kmeans_detail {

inline std::int32_t nearest_center(const Vec3& p, const std::vector<Vec3>& centers, double* d2_out) {
  std::int32_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d2 = (p - centers[c]).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<std::int32_t>(c);
    }
  }
  if (d2_out) *d2_out = best_d2;
  return best;
}

inline std::vector<Vec3> plus_plus_init(std::span<const Vec3> pts, std::size_t k, std::mt19937_64& rng) {
  std::vector<Vec3> centers;
  centers.reserve(k);
  std::vector<char> taken(pts.size(), 0);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng);
  centers.push_back(pts[first]);
  taken[first] = 1;
  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d2[i] = (pts[i] - pts[first]).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!taken[i]) total += d2[i];
    std::size_t pick = pts.size();
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (taken[i] || d2[i] == 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point duplicates a center: pick uniformly among them.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (!taken[i]) free.push_back(i);
      pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    taken[pick] = 1;
    centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < pts.size(); ++i)
      d2[i] = std::min(d2[i], (pts[i] - pts[pick]).squaredNorm());
  }
  return centers;
}

inline KMeansResult lloyd(std::span<const Vec3> pts, std::vector<Vec3> centers, const KMeansOptions& opt) {
  KMeansResult r;
  const std::size_t k = centers.size();
  r.labels.assign(pts.size(), 0);
  std::vector<double> d2(pts.size());
  for (int it = 0; it < opt.max_iterations; ++it) {
    r.iterations = it + 1;
    for (std::size_t i = 0; i < pts.size(); ++i) r.labels[i] = nearest_center(pts[i], centers, &d2[i]);
    std::vector<Vec3> sums(k, Vec3::Zero());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sums[r.labels[i]] += pts[i];
      ++counts[r.labels[i]];
    }
    std::vector<Vec3> next(k);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next[c] = sums[c] / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it to the point worst served by its center.
      std::size_t far = 0;
      for (std::size_t i = 1; i < pts.size(); ++i)
        if (d2[i] > d2[far]) far = i;
      next[c] = pts[far];
      d2[far] = 0.0;
    }
    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) moved = std::max(moved, (next[c] - centers[c]).norm());
    centers = std::move(next);
    if (moved < opt.tolerance) break;
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double d = 0.0;
    r.labels[i] = nearest_center(pts[i], centers, &d);
    r.inertia += d;
  }
  r.centers = std::move(centers);
  return r;
}

}  // namespace kmeans_detail

/// k-means++ seeding followed by Lloyd iterations. Deterministic per seed.
inline KMeansResult kmeans_cluster(std::span<const Vec3> points, std::size_t k, std::uint64_t seed,
                                   const KMeansOptions& opt = {}) {
  if (k < 1 || k > points.size()) {
    throw InvalidCount("k-means needs 1 <= k <= M (k=" + std::to_string(k) + ", M=" +
                       std::to_string(points.size()) + ")");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, opt.restarts); ++run) {
    auto r = kmeans_detail::lloyd(points, kmeans_detail::plus_plus_init(points, k, rng), opt);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

inline std::vector<Vec3> kmeans(std::span<const Vec3> points, std::size_t k, std::uint64_t seed,
                                const KMeansOptions& opt = {}) {
  return kmeans_cluster(points, k, seed, opt).centers;
}

}  // namespace densefield
