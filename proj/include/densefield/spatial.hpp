#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

using IndexList = std::vector<std::int32_t>;

/// Greedy max-min subset selection starting from `start`. Each step takes
/// the point farthest from the selected set; ties go to the lowest index.
inline IndexList farthest_point_sampling_from(std::span<const Vec3> points, std::size_t m,
                                              std::size_t start) {
  const std::size_t n = points.size();
  if (m < 1 || m > n) {
    throw InvalidCount("FPS needs 1 <= m <= N (m=" + std::to_string(m) + ", N=" +
                       std::to_string(n) + ")");
  }
  if (start >= n) throw InvalidCount("FPS start index out of range");
  IndexList selected;
  selected.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t s = 0; s < m; ++s) {
    selected.push_back(static_cast<std::int32_t>(current));
    min_d2[current] = -1.0;  // excluded from further selection
    const Vec3& c = points[current];
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] < 0.0) continue;
      min_d2[i] = std::min(min_d2[i], (points[i] - c).squaredNorm());
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return selected;
}

/// Seeded start index, shared by every FPS entry point.
inline std::size_t fps_start_index(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline IndexList farthest_point_sampling(std::span<const Vec3> points, std::size_t m,
                                         std::uint64_t seed) {
  if (points.empty()) throw InvalidCount("FPS on an empty point set");
  return farthest_point_sampling_from(points, m, fps_start_index(points.size(), seed));
}

inline IndexList farthest_point_sampling(const PointCloud& cloud, std::size_t m, std::uint64_t seed) {
  return farthest_point_sampling(std::span<const Vec3>(cloud.points), m, seed);
}

namespace spatial_detail {

struct Candidate {
  double d2;
  std::int32_t index;
  bool operator<(const Candidate& o) const {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

}  // namespace spatial_detail

/// Up to k neighbors within radius r of each center, ascending distance.
/// Short lists are padded by repeating the nearest qualifying index.
inline std::vector<IndexList> ball_query(std::span<const Vec3> points,
                                         std::span<const std::int32_t> centers, double r,
                                         std::size_t k) {
  if (!(r > 0.0)) throw InvalidArgument("ball query radius must be positive");
  if (k < 1) throw InvalidCount("ball query needs k >= 1");
  const double r2 = r * r;
  std::vector<IndexList> out;
  out.reserve(centers.size());
  std::vector<spatial_detail::Candidate> cand;
  for (auto c : centers) {
    if (c < 0 || static_cast<std::size_t>(c) >= points.size()) {
      throw InvalidCount("ball query center index out of range");
    }
    cand.clear();
    const Vec3& pc = points[c];
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d2 = (points[i] - pc).squaredNorm();
      if (d2 <= r2) cand.push_back({d2, static_cast<std::int32_t>(i)});
    }
    const std::size_t keep = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end());
    IndexList list;
    list.reserve(k);
    for (std::size_t i = 0; i < keep; ++i) list.push_back(cand[i].index);
    while (list.size() < k) list.push_back(list.front());
    out.push_back(std::move(list));
  }
  return out;
}

inline std::vector<IndexList> ball_query(const PointCloud& cloud, std::span<const std::int32_t> centers,
                                         double r, std::size_t k) {
  return ball_query(std::span<const Vec3>(cloud.points), centers, r, k);
}

/// k nearest points to each query, ascending distance, ties by lowest index.
inline std::vector<IndexList> knn(std::span<const Vec3> points, std::span<const Vec3> queries,
                                  std::size_t k) {
  if (k < 1 || k > points.size()) {
    throw InvalidCount("knn needs 1 <= k <= N (k=" + std::to_string(k) + ", N=" +
                       std::to_string(points.size()) + ")");
  }
  std::vector<IndexList> out;
  out.reserve(queries.size());
  std::vector<spatial_detail::Candidate> cand(points.size());
  for (const auto& q : queries) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      cand[i] = {(points[i] - q).squaredNorm(), static_cast<std::int32_t>(i)};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    IndexList list(k);
    for (std::size_t i = 0; i < k; ++i) list[i] = cand[i].index;
    out.push_back(std::move(list));
  }
  return out;
}

inline std::vector<IndexList> knn(const PointCloud& cloud, std::span<const Vec3> queries, std::size_t k) {
  return knn(std::span<const Vec3>(cloud.points), queries, k);
}

}  // namespace densefield
