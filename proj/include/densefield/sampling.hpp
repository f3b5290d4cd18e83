#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

/// Area-uniform surface sampling: a face is drawn with probability
/// proportional to its area, then a barycentric-uniform point inside it.
/// Point normals are the flat face normals. Deterministic per seed.
inline PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidCount("sample count must be at least 1");
  if (mesh.faces.empty()) throw DegenerateGeometry("mesh has no faces");
  validate(mesh);

  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += face_area(mesh, f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw DegenerateGeometry("mesh has zero total area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PointCloud cloud;
  cloud.frame = mesh.frame;
  cloud.points.reserve(n);
  cloud.normals.reserve(n);
  cloud.face_index.reserve(n);
  cloud.barycentric.reserve(n);
  // Stratified draw along the cumulative area: point i takes a uniform
  // position inside stratum i, then the strata are shuffled so every output
  // slot is marginally area-uniform.
  std::vector<std::size_t> stratum(n);
  std::iota(stratum.begin(), stratum.end(), std::size_t{0});
  std::shuffle(stratum.begin(), stratum.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = (static_cast<double>(stratum[i]) + unit(rng)) / static_cast<double>(n) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto f = static_cast<std::size_t>(it - cumulative.begin());
    const double s = std::sqrt(unit(rng));
    const double r = unit(rng);
    const Vec3 bary(1.0 - s, s * (1.0 - r), s * r);
    const Face& t = mesh.faces[f];
    cloud.points.push_back(bary[0] * mesh.vertices[t[0]] + bary[1] * mesh.vertices[t[1]] +
                           bary[2] * mesh.vertices[t[2]]);
    cloud.normals.push_back(face_normal_unnormalized(mesh, f).normalized());
    cloud.face_index.push_back(static_cast<std::int32_t>(f));
    cloud.barycentric.push_back(bary);
  }
  return cloud;
}

struct NormalizedCloud {
  PointCloud cloud;
  NormalizationTransform transform;
};

/// Centers the cloud at its centroid and scales it so the farthest point has
/// norm 1. The returned transform maps normalized coordinates back to model.
inline NormalizedCloud normalize_unit_ball(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyInput("cannot normalize an empty cloud");
  NormalizationTransform t;
  t.center = centroid(cloud.points);
  double max_norm = 0.0;
  for (const auto& p : cloud.points) max_norm = std::max(max_norm, (p - t.center).norm());
  if (!(max_norm > 0.0)) throw DegenerateGeometry("all points coincide");
  t.scale = 1.0 / max_norm;

  NormalizedCloud out{cloud, t};
  for (auto& p : out.cloud.points) p = t.to_normalized(p);
  out.cloud.frame = Frame::normalized;
  return out;
}

}  // namespace densefield
