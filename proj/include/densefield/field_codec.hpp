#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geodesic.hpp"
#include "densefield/geometry.hpp"
#include "densefield/kmeans.hpp"
#include "densefield/line_fit.hpp"

namespace densefield {

inline constexpr double kDefaultSigma = 0.3;
inline constexpr double kDefaultThreshold = 0.5;
inline constexpr int kKindCount = 4;

/// Contact, cusp, facial-axis and occlusal points.
enum class LandmarkKind { CO = 0, CU = 1, FA = 2, OC = 3 };
/// Buccal, lingual, mesial and distal surface axes.
enum class AxisKind { BA = 0, LA = 1, MA = 2, DA = 3 };

inline constexpr std::array<LandmarkKind, 4> kLandmarkKinds{LandmarkKind::CO, LandmarkKind::CU,
                                                            LandmarkKind::FA, LandmarkKind::OC};
inline constexpr std::array<AxisKind, 4> kAxisKinds{AxisKind::BA, AxisKind::LA, AxisKind::MA,
                                                    AxisKind::DA};

inline std::string_view to_string(LandmarkKind k) {
  constexpr std::array<std::string_view, 4> names{"CO", "CU", "FA", "OC"};
  return names[static_cast<int>(k)];
}
inline std::string_view to_string(AxisKind k) {
  constexpr std::array<std::string_view, 4> names{"BA", "LA", "MA", "DA"};
  return names[static_cast<int>(k)];
}
inline int index_of(LandmarkKind k) { return static_cast<int>(k); }
inline int index_of(AxisKind k) { return static_cast<int>(k); }

inline LandmarkKind parse_landmark_kind(std::string_view s) {
  for (auto k : kLandmarkKinds)
    if (to_string(k) == s) return k;
  throw ParseError("unknown landmark kind '" + std::string(s) + "'");
}
inline AxisKind parse_axis_kind(std::string_view s) {
  for (auto k : kAxisKinds)
    if (to_string(k) == s) return k;
  throw ParseError("unknown axis kind '" + std::string(s) + "'");
}

struct Landmark {
  Vec3 position = Vec3::Zero();
  LandmarkKind kind = LandmarkKind::CO;
};

struct LandmarkSet {
  std::vector<Landmark> landmarks;

  std::size_t count(LandmarkKind k) const {
    return static_cast<std::size_t>(std::count_if(landmarks.begin(), landmarks.end(),
                                                  [k](const Landmark& l) { return l.kind == k; }));
  }
  std::vector<Vec3> positions(LandmarkKind k) const {
    std::vector<Vec3> out;
    for (const auto& l : landmarks)
      if (l.kind == k) out.push_back(l.position);
    return out;
  }
};

struct ToothAxis {
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  AxisKind kind = AxisKind::BA;

  Line3 line() const { return {point, direction}; }
};

/// N x 4 per-point values in [0, 1], one column per landmark kind.
struct DistanceField {
  Eigen::MatrixXd values;
  double sigma = kDefaultSigma;

  Eigen::Index size() const { return values.rows(); }
  auto column(LandmarkKind k) const { return values.col(index_of(k)); }
};

/// N x 12 displacement vectors; kind k occupies columns 3k..3k+2.
struct ProjectionVectorField {
  Eigen::MatrixXd vectors;

  Eigen::Index size() const { return vectors.rows(); }
  auto column(AxisKind k) const { return vectors.middleCols(3 * index_of(k), 3); }
  auto column(AxisKind k) { return vectors.middleCols(3 * index_of(k), 3); }
};

/// exp(-G^2 / (2 sigma^2)); an unreachable point (G = +inf) codes to 0.
inline double gaussian_coding(double geodesic_distance, double sigma) {
  return std::exp(-(geodesic_distance * geodesic_distance) / (2.0 * sigma * sigma));
}

/// Pointwise maximum of single-landmark fields of one kind.
inline Eigen::VectorXd combine_fields(std::span<const Eigen::VectorXd> fields, Eigen::Index n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (const auto& f : fields) {
    if (f.size() != n) throw ShapeMismatch("field length mismatch in combine_fields");
    out = out.cwiseMax(f);
  }
  return out;
}

/// Single-landmark field over the cloud.
inline Eigen::VectorXd landmark_field(const GeodesicSolver& solver, const PointCloud& cloud,
                                      const Vec3& landmark, double sigma,
                                      double snap_tolerance = kDefaultSnapTolerance) {
  const auto g = solver.field(landmark, snap_tolerance);
  const auto d = distances_at_points(g, solver.mesh(), cloud);
  Eigen::VectorXd out(static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) out[static_cast<Eigen::Index>(i)] = gaussian_coding(d[i], sigma);
  return out;
}

/// Dense distance-field coding of a landmark set. `mesh`, `cloud` and the
/// landmark positions must share one frame (normalized for network use).
inline DistanceField encode_landmarks(const TriangleMesh& mesh, const PointCloud& cloud,
                                      const LandmarkSet& landmarks, double sigma = kDefaultSigma,
                                      double snap_tolerance = kDefaultSnapTolerance) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (cloud.frame != mesh.frame) throw FrameMismatch("cloud and mesh frames differ");
  const auto n = static_cast<Eigen::Index>(cloud.size());
  DistanceField field{Eigen::MatrixXd::Zero(n, kKindCount), sigma};
  if (landmarks.landmarks.empty()) return field;
  const GeodesicSolver solver(mesh);
  for (auto kind : kLandmarkKinds) {
    std::vector<Eigen::VectorXd> singles;
    for (const auto& p : landmarks.positions(kind)) {
      singles.push_back(landmark_field(solver, cloud, p, sigma, snap_tolerance));
    }
    field.values.col(index_of(kind)) = combine_fields(singles, n);
  }
  return field;
}

struct EncodedAxis {
  ToothAxis axis;
  Eigen::MatrixX3d vectors;  // N x 3
};

/// Projection-vector coding of an axis through the cloud centroid: each
/// point stores the displacement to its perpendicular foot on the line.
inline EncodedAxis encode_axis(const PointCloud& cloud, const Vec3& axis_direction, AxisKind kind) {
  if (cloud.empty()) throw EmptyInput("cannot encode an axis on an empty cloud");
  const double len = axis_direction.norm();
  if (std::abs(len - 1.0) > 1e-6) throw InvalidArgument("axis direction must be a unit vector");
  EncodedAxis out;
  out.axis.kind = kind;
  out.axis.direction = canonicalize_direction(axis_direction / len);
  out.axis.point = centroid(cloud.points);
  const Vec3& c = out.axis.point;
  const Vec3& n = out.axis.direction;
  out.vectors.resize(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3 r = p - c;
    // q - p with q = c + (r.n) n, written as the rejection of r from n.
    const Vec3 v = r.dot(n) * n - r;
    out.vectors.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return out;
}

struct DecodeOptions {
  double threshold = kDefaultThreshold;
  KMeansOptions kmeans{};
};

/// Threshold filter then k-means; the cluster centers are the landmarks.
/// When fewer than `count` points clear the threshold it is lowered to the
/// count-th largest value.
inline std::vector<Vec3> decode_landmarks(const PointCloud& cloud, std::span<const double> field_column,
                                          std::size_t count, std::uint64_t seed,
                                          const DecodeOptions& opt = {}) {
  if (count < 1) throw InvalidCount("expected landmark count must be at least 1");
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0)) {
    throw InvalidArgument("threshold must lie in (0, 1)");
  }
  if (field_column.size() != cloud.size()) {
    throw ShapeMismatch("field column length does not match the cloud");
  }
  if (count > cloud.size()) throw InvalidCount("more landmarks requested than points");
  const double peak = *std::max_element(field_column.begin(), field_column.end());
  if (!(peak > 0.0)) throw EmptyField("field is zero everywhere");

  double threshold = opt.threshold;
  auto survivors = static_cast<std::size_t>(std::count_if(
      field_column.begin(), field_column.end(), [&](double v) { return v >= threshold; }));
  if (survivors < count) {
    std::vector<double> sorted(field_column.begin(), field_column.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(count - 1),
                     sorted.end(), std::greater<>());
    threshold = sorted[count - 1];
  }
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (field_column[i] >= threshold) kept.push_back(cloud.points[i]);
  return kmeans(kept, count, seed, opt.kmeans);
}

inline std::vector<Vec3> decode_landmarks(const PointCloud& cloud, const Eigen::Ref<const Eigen::VectorXd>& column,
                                          std::size_t count, std::uint64_t seed,
                                          const DecodeOptions& opt = {}) {
  std::vector<double> values(column.data(), column.data() + column.size());
  return decode_landmarks(cloud, std::span<const double>(values), count, seed, opt);
}

/// Moves every point by its vector and fits a line to the result.
inline ToothAxis decode_axis(const PointCloud& cloud, const Eigen::Ref<const Eigen::MatrixX3d>& vectors,
                             AxisKind kind = AxisKind::BA) {
  if (cloud.empty()) throw EmptyInput("cannot decode an axis on an empty cloud");
  if (vectors.rows() != static_cast<Eigen::Index>(cloud.size())) {
    throw ShapeMismatch("vector column length does not match the cloud");
  }
  std::vector<Vec3> projected(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    projected[i] = cloud.points[i] + vectors.row(static_cast<Eigen::Index>(i)).transpose();
  }
  const Line3 line = fit_line_3d(projected);
  return {line.point, line.direction, kind};
}

}  // namespace densefield
