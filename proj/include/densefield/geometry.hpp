#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "densefield/error.hpp"

namespace densefield {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::int32_t, 3>;

/// Coordinate frame tag. Model coordinates are the input units (e.g. mm);
/// normalized coordinates live inside the unit ball.
enum class Frame { model, normalized };

inline const char* to_string(Frame f) { return f == Frame::model ? "model" : "normalized"; }

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;  // optional, per vertex
  Frame frame = Frame::model;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
};

/// Throws TopologyError when a face index is out of range or repeats a vertex.
inline void validate(const TriangleMesh& mesh) {
  const auto n = static_cast<std::int64_t>(mesh.vertices.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (auto idx : t) {
      if (idx < 0 || idx >= n) {
        throw TopologyError("face " + std::to_string(f) + " references vertex " +
                            std::to_string(idx) + " but mesh has " + std::to_string(n));
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw TopologyError("face " + std::to_string(f) + " references the same vertex twice");
    }
  }
  if (!mesh.normals.empty() && mesh.normals.size() != mesh.vertices.size()) {
    throw TopologyError("vertex normal count does not match vertex count");
  }
}

inline Vec3 face_normal_unnormalized(const TriangleMesh& mesh, std::size_t f) {
  const Face& t = mesh.faces[f];
  const Vec3& a = mesh.vertices[t[0]];
  return (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
}

inline double face_area(const TriangleMesh& mesh, std::size_t f) {
  return 0.5 * face_normal_unnormalized(mesh, f).norm();
}

inline double surface_area(const TriangleMesh& mesh) {
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) total += face_area(mesh, f);
  return total;
}

/// N points with unit normals. `face_index` / `barycentric` are filled when
/// the cloud was sampled from a mesh and let per-vertex quantities be
/// transferred to the points exactly.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  Frame frame = Frame::model;
  std::vector<std::int32_t> face_index;
  std::vector<Vec3> barycentric;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_provenance() const {
    return face_index.size() == points.size() && barycentric.size() == points.size();
  }
};

inline Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return pts.empty() ? c : Vec3(c / static_cast<double>(pts.size()));
}

/// normalized = (model - center) * scale;  model = normalized / scale + center.
struct NormalizationTransform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 to_normalized(const Vec3& p) const { return (p - center) * scale; }
  Vec3 to_model(const Vec3& p) const { return p / scale + center; }
  double length_to_model(double normalized_length) const { return normalized_length / scale; }
};

inline TriangleMesh apply(const NormalizationTransform& t, const TriangleMesh& mesh) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t.to_normalized(v);
  out.frame = Frame::normalized;
  return out;
}

inline PointCloud invert(const NormalizationTransform& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.to_model(p);
  out.frame = Frame::model;
  return out;
}

struct ClosestPoint {
  Vec3 point;
  Vec3 barycentric;  // weights of the triangle's corners
  double distance = 0.0;
};

/// Closest point on triangle (a, b, c) to p, by Voronoi-region classification.
inline ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                              const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  auto done = [&](double u, double v, double w) {
    Vec3 q = u * a + v * b + w * c;
    return ClosestPoint{q, Vec3(u, v, w), (p - q).norm()};
  };
  if (d1 <= 0.0 && d2 <= 0.0) return done(1, 0, 0);
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return done(0, 1, 0);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return done(1 - v, v, 0);
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return done(0, 0, 1);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return done(1 - w, 0, w);
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return done(0, 1 - w, w);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return done(1 - v - w, v, w);
}

struct SurfaceHit {
  std::int32_t face = -1;
  ClosestPoint closest;
};

/// Brute-force closest point over all faces; ties keep the lowest face index.
inline SurfaceHit closest_point_on_mesh(const TriangleMesh& mesh, const Vec3& p) {
  SurfaceHit best;
  best.closest.distance = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    auto cp = closest_point_on_triangle(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                        mesh.vertices[t[2]]);
    if (cp.distance < best.closest.distance) {
      best.face = static_cast<std::int32_t>(f);
      best.closest = cp;
    }
  }
  return best;
}

}  // namespace densefield
