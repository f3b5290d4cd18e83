#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <unordered_map>
#include <utility>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultSnapTolerance = 0.05;

struct GeodesicResult {
  std::vector<double> vertex_distance;  // +inf where unreachable
  Vec3 source = Vec3::Zero();           // snapped onto the surface
  double snap_distance = 0.0;
  std::int32_t source_face = -1;
};

/// Approximate surface distances by Dijkstra on a graph whose nodes are the
/// mesh vertices plus one node per edge midpoint. Inside every triangle all
/// six nodes are connected pairwise with straight-line weights, so every
/// path stays on the surface and the metric is bounded below by the chord.
///
/// The graph is built once per mesh; `field()` can then be called for many
/// sources.
class GeodesicSolver {
 public:
  explicit GeodesicSolver(const TriangleMesh& mesh) : mesh_(&mesh) {
    validate(mesh);
    const std::size_t nv = mesh.vertices.size();
    std::unordered_map<std::uint64_t, std::int32_t> edge_ids;
    edge_ids.reserve(mesh.faces.size() * 2);
    positions_ = mesh.vertices;
    face_nodes_.reserve(mesh.faces.size());
    auto midpoint_node = [&](std::int32_t a, std::int32_t b) {
      const auto lo = static_cast<std::uint64_t>(std::min(a, b));
      const auto hi = static_cast<std::uint64_t>(std::max(a, b));
      auto [it, inserted] = edge_ids.try_emplace((lo << 32) | hi, 0);
      if (inserted) {
        it->second = static_cast<std::int32_t>(positions_.size());
        positions_.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
      }
      return it->second;
    };
    for (const Face& f : mesh.faces) {
      face_nodes_.push_back({f[0], f[1], f[2], midpoint_node(f[0], f[1]),
                             midpoint_node(f[1], f[2]), midpoint_node(f[2], f[0])});
    }
    vertex_count_ = nv;

    // CSR adjacency; duplicate arcs from neighboring faces are harmless.
    const std::size_t nn = positions_.size();
    std::vector<std::int32_t> degree(nn, 0);
    for (const auto& fn : face_nodes_)
      for (int i = 0; i < 6; ++i) degree[fn[i]] += 5;
    offsets_.assign(nn + 1, 0);
    for (std::size_t i = 0; i < nn; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
    targets_.resize(offsets_.back());
    weights_.resize(offsets_.back());
    std::vector<std::int32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& fn : face_nodes_) {
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
          if (i == j) continue;
          const auto slot = fill[fn[i]]++;
          targets_[slot] = fn[j];
          weights_[slot] = (positions_[fn[i]] - positions_[fn[j]]).norm();
        }
      }
    }
  }

  const TriangleMesh& mesh() const { return *mesh_; }
  std::size_t node_count() const { return positions_.size(); }

  /// Distances from `source` (snapped to the closest surface point) to every
  /// vertex. Throws SourceOffSurface when the snap exceeds `snap_tolerance`.
  GeodesicResult field(const Vec3& source, double snap_tolerance = kDefaultSnapTolerance) const {
    const TriangleMesh& mesh = *mesh_;
    if (mesh.faces.empty()) throw DegenerateGeometry("mesh has no faces");
    const SurfaceHit hit = closest_point_on_mesh(mesh, source);
    if (hit.closest.distance > snap_tolerance) {
      throw SourceOffSurface("source lies " + std::to_string(hit.closest.distance) +
                             " from the surface (tolerance " + std::to_string(snap_tolerance) + ")");
    }
    GeodesicResult result;
    result.source = hit.closest.point;
    result.snap_distance = hit.closest.distance;
    result.source_face = hit.face;

    std::vector<double> dist(positions_.size(), kUnreachable);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    auto seed = [&](std::size_t f) {
      for (auto node : face_nodes_[f]) {
        const double d = (positions_[node] - result.source).norm();
        if (d < dist[node]) {
          dist[node] = d;
          queue.emplace(d, node);
        }
      }
    };
    // The snapped point may sit on a shared edge or vertex; seed every face
    // that contains it.
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
      const Face& t = mesh.faces[f];
      if (static_cast<std::int32_t>(f) == hit.face ||
          closest_point_on_triangle(result.source, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                    mesh.vertices[t[2]])
                  .distance <= 1e-12) {
        seed(f);
      }
    }
    while (!queue.empty()) {
      auto [d, u] = queue.top();
      queue.pop();
      if (d > dist[u]) continue;
      for (auto s = offsets_[u]; s < offsets_[u + 1]; ++s) {
        const double nd = d + weights_[s];
        const auto v = targets_[s];
        if (nd < dist[v]) {
          dist[v] = nd;
          queue.emplace(nd, v);
        }
      }
    }
    dist.resize(vertex_count_);
    result.vertex_distance = std::move(dist);
    return result;
  }

 private:
  const TriangleMesh* mesh_;
  std::size_t vertex_count_ = 0;
  std::vector<Vec3> positions_;
  std::vector<std::array<std::int32_t, 6>> face_nodes_;
  std::vector<std::int32_t> offsets_;
  std::vector<std::int32_t> targets_;
  std::vector<double> weights_;
};

inline GeodesicResult geodesic_field(const TriangleMesh& mesh, const Vec3& source,
                                     double snap_tolerance = kDefaultSnapTolerance) {
  return GeodesicSolver(mesh).field(source, snap_tolerance);
}

namespace geodesic_detail {

inline double interpolate(const std::vector<double>& vd, const Face& f, const Vec3& bary) {
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    if (bary[c] == 0.0) continue;
    if (vd[f[c]] == kUnreachable) return kUnreachable;
    acc += bary[c] * vd[f[c]];
  }
  return acc;
}

}  // namespace geodesic_detail

/// Transfers per-vertex distances to sampled points by barycentric
/// interpolation over each point's source face. Clouds without sampling
/// provenance are located by closest-point search.
inline std::vector<double> distances_at_points(const GeodesicResult& result, const TriangleMesh& mesh,
                                               const PointCloud& cloud) {
  if (cloud.frame != mesh.frame) {
    throw FrameMismatch(std::string("cloud is in ") + to_string(cloud.frame) +
                        " frame, mesh is in " + to_string(mesh.frame));
  }
  if (result.vertex_distance.size() != mesh.vertices.size()) {
    throw ShapeMismatch("geodesic result does not belong to this mesh");
  }
  std::vector<double> out(cloud.size());
  const bool provenance = cloud.has_provenance();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::int32_t f;
    Vec3 bary;
    if (provenance) {
      f = cloud.face_index[i];
      bary = cloud.barycentric[i];
      if (f < 0 || static_cast<std::size_t>(f) >= mesh.faces.size()) {
        throw ShapeMismatch("cloud face index out of range for this mesh");
      }
    } else {
      auto hit = closest_point_on_mesh(mesh, cloud.points[i]);
      f = hit.face;
      bary = hit.closest.barycentric;
    }
    out[i] = geodesic_detail::interpolate(result.vertex_distance, mesh.faces[f], bary);
  }
  return out;
}

}  // namespace densefield
