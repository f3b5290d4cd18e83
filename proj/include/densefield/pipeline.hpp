#pragma once

#include <array>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "densefield/annotation.hpp"
#include "densefield/error.hpp"
#include "densefield/field_codec.hpp"
#include "densefield/metrics.hpp"
#include "densefield/sampling.hpp"
#include "densefield/synthetic.hpp"

namespace densefield {

inline constexpr std::size_t kDefaultPointCount = 2048;

inline std::string tooth_id_for_seed(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "tooth_%03llu", static_cast<unsigned long long>(seed));
  return buf;
}

inline ToothAnnotation annotation_of(const SyntheticTooth& t, const std::string& tooth_id) {
  return {tooth_id, std::string(to_string(t.spec.category)), t.landmarks, t.axes};
}

/// Everything the encoder produces for one tooth, in the normalized frame.
struct EncodedTooth {
  PointCloud cloud;  // normalized, with sampling provenance
  NormalizationTransform transform;
  TriangleMesh mesh;  // normalized
  LandmarkSet landmarks;
  std::vector<ToothAxis> axes;  // encoded axes (through the cloud centroid)
  DistanceField distance;
  ProjectionVectorField vectors;
};

/// Samples `points` surface points from a model-frame mesh, normalizes them
/// into the unit ball and encodes the annotation's landmarks and axes.
inline EncodedTooth encode_tooth(const TriangleMesh& model_mesh, const ToothAnnotation& annotation,
                                 std::size_t points = kDefaultPointCount, double sigma = kDefaultSigma,
                                 std::uint64_t seed = 0) {
  if (model_mesh.frame != Frame::model) throw FrameMismatch("encode_tooth expects a model-frame mesh");
  EncodedTooth e;
  auto nc = normalize_unit_ball(sample_surface(model_mesh, points, seed));
  e.cloud = std::move(nc.cloud);
  e.transform = nc.transform;
  e.mesh = apply(e.transform, model_mesh);
  e.landmarks = annotation.landmarks;
  for (auto& l : e.landmarks.landmarks) l.position = e.transform.to_normalized(l.position);
  e.distance = encode_landmarks(e.mesh, e.cloud, e.landmarks, sigma);
  e.vectors.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(e.cloud.size()), 12);
  for (const auto& ax : annotation.axes) {
    auto enc = encode_axis(e.cloud, ax.direction, ax.kind);
    e.vectors.column(ax.kind) = enc.vectors;
    e.axes.push_back(enc.axis);
  }
  return e;
}

/// Per-kind expected landmark counts.
using LandmarkCounts = std::array<std::size_t, 4>;

inline LandmarkCounts counts_of(const LandmarkSet& s) {
  LandmarkCounts c{};
  for (auto k : kLandmarkKinds) c[static_cast<std::size_t>(index_of(k))] = s.count(k);
  return c;
}

/// Decodes every kind with a positive count and every axis kind. Failures
/// are recorded as warnings rather than aborting the tooth.
inline DecodedTooth decode_tooth(const std::string& tooth_id, const PointCloud& cloud, const DistanceField& distance,
                                 const ProjectionVectorField& vectors, const LandmarkCounts& counts,
                                 std::uint64_t seed = 0, const DecodeOptions& opt = {}) {
  if (distance.values.rows() != static_cast<Eigen::Index>(cloud.size()) || distance.values.cols() != 4) {
    throw ShapeMismatch("distance field must be N x 4 for the cloud");
  }
  if (vectors.vectors.rows() != static_cast<Eigen::Index>(cloud.size()) || vectors.vectors.cols() != 12) {
    throw ShapeMismatch("vector field must be N x 12 for the cloud");
  }
  DecodedTooth d;
  d.tooth_id = tooth_id;
  for (auto k : kLandmarkKinds) {
    const std::size_t n = counts[static_cast<std::size_t>(index_of(k))];
    if (n == 0) continue;
    try {
      const Eigen::VectorXd col = distance.column(k);
      for (const auto& p : decode_landmarks(cloud, col, n, seed + static_cast<std::uint64_t>(index_of(k)), opt)) {
        d.landmarks.landmarks.push_back({p, k});
      }
    } catch (const EmptyField& e) {
      d.warnings.push_back(std::string(to_string(k)) + ": " + e.what());
    }
  }
  for (auto k : kAxisKinds) {
    DecodedAxis a;
    a.axis.kind = k;
    try {
      const Eigen::MatrixX3d v = vectors.column(k);
      a.axis = decode_axis(cloud, v, k);
    } catch (const DegenerateFit& e) {
      a.valid = false;
      a.axis.point = e.point();
      a.axis.direction = Vec3::UnitZ();
      d.warnings.push_back(std::string(to_string(k)) + ": " + e.what());
    }
    d.axes.push_back(a);
  }
  return d;
}

/// Scores a decoded tooth against its model-frame annotation. Invalid axes
/// and axis kinds absent from either side are skipped.
inline ToothResult evaluate_tooth(const DecodedTooth& decoded, const ToothAnnotation& gt,
                                  const NormalizationTransform& t, AxisMode mode) {
  if (decoded.tooth_id != gt.tooth_id) {
    throw InvalidArgument("tooth id mismatch: decoded '" + decoded.tooth_id + "' vs annotation '" + gt.tooth_id +
                          "'");
  }
  ToothResult r;
  r.tooth_id = gt.tooth_id;
  LandmarkSet gt_norm = gt.landmarks;
  for (auto& l : gt_norm.landmarks) l.position = t.to_normalized(l.position);
  const auto le = landmark_errors(decoded.landmarks, gt_norm, t);
  r.landmark_kinds = le.kinds;
  r.landmark_errors_mm = le.errors_mm;
  r.unmatched_predictions = le.unmatched_predictions;
  for (const auto& g : gt.axes) {
    for (const auto& p : decoded.axes) {
      if (p.axis.kind != g.kind || !p.valid) continue;
      r.axis_kinds.push_back(g.kind);
      r.axis_errors_deg.push_back(axis_error(p.axis, g, mode));
    }
  }
  return r;
}

}  // namespace densefield
