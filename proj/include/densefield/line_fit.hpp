#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

/// Raised when the points do not determine a direction. Carries the mean
/// point so callers can still report where the degenerate fit sits.
class DegenerateFit : public Error {
 public:
  DegenerateFit(const std::string& what, const Vec3& point)
      : Error("DegenerateFit", what), point_(point) {}
  const Vec3& point() const { return point_; }

 private:
  Vec3 point_;
};

/// Flips `d` so its largest-magnitude component is positive (first index
/// wins ties). Lines are undirected; this fixes one representative.
inline Vec3 canonicalize_direction(const Vec3& d) {
  int arg = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(d[i]) > std::abs(d[arg])) arg = i;
  return d[arg] < 0.0 ? Vec3(-d) : d;
}

struct Line3 {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();

  double distance_to(const Vec3& p) const {
    const Vec3 r = p - point;
    return (r - r.dot(direction) * direction).norm();
  }
};

struct PowerIterationOptions {
  int max_iterations = 200;
  double relative_residual = 1e-12;
};

/// Dominant eigenvector of a symmetric positive semi-definite 3x3 matrix.
inline Vec3 dominant_eigenvector(const Eigen::Matrix3d& c, const PowerIterationOptions& opt = {}) {
  int col = 0;
  for (int j = 1; j < 3; ++j)
    if (c.col(j).squaredNorm() > c.col(col).squaredNorm()) col = j;
  Vec3 v = c.col(col);
  if (!(v.norm() > 0.0)) return Vec3::UnitZ();
  v.normalize();
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Vec3 w = c * v;
    const double lambda = v.dot(w);
    const double wn = w.norm();
    if (!(wn > 0.0)) break;
    const double residual = (w - lambda * v).norm() / std::abs(lambda);
    v = w / wn;
    if (residual < opt.relative_residual) break;
  }
  return v;
}

/// Total-least-squares line: centroid plus principal direction of the
/// scatter matrix.
inline Line3 fit_line_3d(std::span<const Vec3> points, const PowerIterationOptions& opt = {}) {
  if (points.size() < 2) throw InvalidCount("line fit needs at least 2 points");
  const Vec3 mean = centroid(points);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 r = p - mean;
    cov += r * r.transpose();
  }
  cov /= static_cast<double>(points.size());
  const double spread = std::sqrt(std::max(cov.trace(), 0.0));
  if (!(spread > 1e-12 * std::max(1.0, mean.norm()))) {
    throw DegenerateFit("all points coincide; direction is undefined", mean);
  }
  return {mean, canonicalize_direction(dominant_eigenvector(cov, opt).normalized())};
}

}  // namespace densefield
