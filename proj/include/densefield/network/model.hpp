#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/geometry.hpp"
#include "densefield/network/config.hpp"
#include "densefield/network/layers.hpp"
#include "densefield/network/weights.hpp"
#include "densefield/spatial.hpp"

namespace densefield::net {

/// Features bound to a subset of a parent cloud: row i belongs to parent
/// point indices[i].
struct FeatureMap {
  IndexList indices;
  Eigen::MatrixXd features;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index channels() const { return features.cols(); }
};

inline void check(const FeatureMap& f, const char* what) {
  if (static_cast<Eigen::Index>(f.indices.size()) != f.features.rows()) {
    throw ShapeMismatch(std::string(what) + ": index list and feature rows differ");
  }
  if (f.features.cols() < 1) throw ShapeMismatch(std::string(what) + ": no channels");
  if (!f.features.allFinite()) throw ShapeMismatch(std::string(what) + ": non-finite features");
}

struct AggregationConfig {
  std::size_t sample_count = 512;
  double radius = 0.1;
  std::size_t neighbors = 32;
  std::string prefix = "scale0";  // weight-name prefix of this scale
};

inline void validate(const AggregationConfig& c, std::size_t input_count) {
  if (c.sample_count < 1 || c.sample_count > input_count) {
    throw InvalidCount("aggregation sample count " + std::to_string(c.sample_count) +
                       " not in [1, " + std::to_string(input_count) + "]");
  }
  if (!(c.radius > 0.0)) throw InvalidArgument("aggregation radius must be positive");
  if (c.neighbors < 1) throw InvalidCount("aggregation needs k >= 1");
}

/// Row-softmax of H * H^T with H = L(F).
inline Eigen::MatrixXd self_similarity_adjacency(const Eigen::MatrixXd& embedded) {
  return row_softmax(embedded * embedded.transpose());
}

inline Eigen::MatrixXd self_similarity_adjacency(const FeatureMap& f, const NetworkWeights& w,
                                                 const std::string& prefix) {
  check(f, "self_similarity_adjacency");
  return self_similarity_adjacency(linear(f.features, w, prefix + ".embed"));
}

/// Column indices of the k largest entries of `row` with entry `self` set to
/// zero; ties go to the lower index. Padded by repetition when k exceeds
/// the row length.
inline IndexList top_k_columns(const Eigen::RowVectorXd& row, Eigen::Index self, std::size_t k) {
  const auto m = static_cast<std::size_t>(row.size());
  IndexList order(m);
  std::iota(order.begin(), order.end(), 0);
  auto value = [&](std::int32_t j) { return j == self ? 0.0 : row[j]; };
  const std::size_t keep = std::min(k, m);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    [&](std::int32_t a, std::int32_t b) {
                      const double va = value(a), vb = value(b);
                      return va > vb || (va == vb && a < b);
                    });
  order.resize(keep);
  while (order.size() < k) order.push_back(order.front());
  return order;
}

struct AggregationResult {
  IndexList sampled;               // indices into the input set
  Eigen::MatrixXd adjacency;       // M x M
  Eigen::MatrixXd smoothed;        // F_s = Adj * L(F_in), M x E
  Eigen::MatrixXd sampled_feats;   // F_ps, m x E
  Eigen::MatrixXd nonlocal_feats;  // F_adj, m x E (max over Top(k))
  Eigen::MatrixXd local_feats;     // F_bq, m x E (max over the ball)
  Eigen::MatrixXd output;          // F_out, m x last MLP width
  std::vector<IndexList> nonlocal_neighbors;
  std::vector<IndexList> local_neighbors;
};

/// One set-abstraction block over `points` (the input set's positions) and
/// their features `f_in`, with FPS started at `fps_start`.
///
/// Neighbor t of the non-local list is paired with neighbor t of the ball
/// list: each pair gives one row [F_ps, F_s[a_t] - F_ps, F_s[b_t] - F_ps],
/// the MLP runs on all rows, and the result is max-pooled over t.
inline AggregationResult feature_aggregation(std::span<const Vec3> points, const Eigen::MatrixXd& f_in,
                                             const AggregationConfig& cfg, const NetworkWeights& w,
                                             std::size_t fps_start, double eps,
                                             std::span<const int> mlp_widths) {
  const std::size_t n = points.size();
  if (static_cast<std::size_t>(f_in.rows()) != n) {
    throw ShapeMismatch("feature_aggregation: " + std::to_string(f_in.rows()) + " feature rows for " +
                        std::to_string(n) + " points");
  }
  if (!f_in.allFinite()) throw ShapeMismatch("feature_aggregation: non-finite input features");
  validate(cfg, n);

  AggregationResult r;
  const Eigen::MatrixXd h = linear(f_in, w, cfg.prefix + ".embed");
  r.adjacency = self_similarity_adjacency(h);
  r.smoothed = r.adjacency * h;
  r.sampled = farthest_point_sampling_from(points, cfg.sample_count, fps_start);
  r.local_neighbors = ball_query(points, r.sampled, cfg.radius, cfg.neighbors);

  const auto m = static_cast<Eigen::Index>(r.sampled.size());
  const auto k = static_cast<Eigen::Index>(cfg.neighbors);
  const Eigen::Index e = h.cols();
  r.sampled_feats.resize(m, e);
  r.nonlocal_feats.resize(m, e);
  r.local_feats.resize(m, e);
  Eigen::MatrixXd cat(m * k, 3 * e);
  r.nonlocal_neighbors.reserve(r.sampled.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto c = r.sampled[static_cast<std::size_t>(i)];
    const auto ps = r.smoothed.row(c);
    r.sampled_feats.row(i) = ps;
    r.nonlocal_neighbors.push_back(top_k_columns(r.adjacency.row(c), c, cfg.neighbors));
    const auto& adj = r.nonlocal_neighbors.back();
    const auto& bq = r.local_neighbors[static_cast<std::size_t>(i)];
    Eigen::RowVectorXd amax = Eigen::RowVectorXd::Constant(e, -std::numeric_limits<double>::infinity());
    Eigen::RowVectorXd bmax = amax;
    for (Eigen::Index t = 0; t < k; ++t) {
      const auto a = r.smoothed.row(adj[static_cast<std::size_t>(t)]);
      const auto b = r.smoothed.row(bq[static_cast<std::size_t>(t)]);
      amax = amax.cwiseMax(a);
      bmax = bmax.cwiseMax(b);
      const Eigen::Index row = i * k + t;
      cat.block(row, 0, 1, e) = ps;
      cat.block(row, e, 1, e) = a - ps;
      cat.block(row, 2 * e, 1, e) = b - ps;
    }
    r.nonlocal_feats.row(i) = amax;
    r.local_feats.row(i) = bmax;
  }

  Eigen::MatrixXd x = std::move(cat);
  for (std::size_t l = 0; l < mlp_widths.size(); ++l) {
    x = lbr(x, w, cfg.prefix + ".mlp" + std::to_string(l), eps);
  }
  r.output.resize(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) r.output.row(i) = x.middleRows(i * k, k).colwise().maxCoeff();
  return r;
}

/// Seeded variant: the FPS start is drawn from `seed`.
inline AggregationResult feature_aggregation(std::span<const Vec3> points, const Eigen::MatrixXd& f_in,
                                             const AggregationConfig& cfg, const NetworkWeights& w,
                                             std::uint64_t seed, const NetworkConfig& net) {
  if (points.empty()) throw InvalidCount("feature_aggregation on an empty set");
  return feature_aggregation(points, f_in, cfg, w, fps_start_index(points.size(), seed), net.norm_epsilon,
                             net.mlp_widths);
}

struct AttentionResult {
  Eigen::MatrixXd output;   // |x| x V width
  Eigen::MatrixXd weights;  // |x| x |y|
};

/// softmax(Q K^T / sqrt(d_k)) V with Q = L_q(x), K = L_k(y), V = L_v(y).
inline AttentionResult cross_attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const NetworkWeights& w,
                                       const std::string& prefix) {
  if (y.rows() < 1) throw ShapeMismatch("cross_attention: empty key set");
  if (!x.allFinite() || !y.allFinite()) throw ShapeMismatch("cross_attention: non-finite input");
  const Eigen::MatrixXd q = linear(x, w, prefix + ".query");
  const Eigen::MatrixXd kk = linear(y, w, prefix + ".key");
  const Eigen::MatrixXd v = linear(y, w, prefix + ".value");
  if (q.cols() != kk.cols()) throw ShapeMismatch("cross_attention: query and key widths differ");
  AttentionResult r;
  r.weights = row_softmax((q * kk.transpose()) / std::sqrt(static_cast<double>(q.cols())));
  r.output = r.weights * v;
  return r;
}

inline FeatureMap cross_attention(const FeatureMap& x, const FeatureMap& y, const NetworkWeights& w,
                                  const std::string& prefix) {
  check(x, "cross_attention(x)");
  check(y, "cross_attention(y)");
  return {x.indices, cross_attention(x.features, y.features, w, prefix).output};
}

/// Inverse-distance 3-NN interpolation of features held at
/// `coarse_indices` (into `fine_points`) onto every fine point.
inline Eigen::MatrixXd interpolate_features(std::span<const std::int32_t> coarse_indices,
                                            std::span<const Vec3> fine_points, const Eigen::MatrixXd& coarse) {
  if (coarse_indices.empty()) throw InvalidCount("interpolation needs at least one coarse point");
  if (static_cast<Eigen::Index>(coarse_indices.size()) != coarse.rows()) {
    throw ShapeMismatch("interpolation: coarse index count and feature rows differ");
  }
  std::vector<Vec3> coarse_pts;
  coarse_pts.reserve(coarse_indices.size());
  for (auto i : coarse_indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= fine_points.size()) {
      throw ShapeMismatch("interpolation: coarse index out of range");
    }
    coarse_pts.push_back(fine_points[static_cast<std::size_t>(i)]);
  }
  const std::size_t k = std::min<std::size_t>(3, coarse_pts.size());
  const auto nn = knn(coarse_pts, fine_points, k);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(fine_points.size()), coarse.cols());
  for (std::size_t p = 0; p < fine_points.size(); ++p) {
    double wsum = 0.0;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(coarse.cols());
    for (auto j : nn[p]) {
      const double wj = 1.0 / ((fine_points[p] - coarse_pts[static_cast<std::size_t>(j)]).norm() + 1e-8);
      acc += wj * coarse.row(j);
      wsum += wj;
    }
    out.row(static_cast<Eigen::Index>(p)) = acc / wsum;
  }
  return out;
}

inline FeatureMap interpolate_features(const FeatureMap& coarse, const PointCloud& fine) {
  check(coarse, "interpolate_features");
  IndexList all(fine.size());
  std::iota(all.begin(), all.end(), 0);
  return {std::move(all), interpolate_features(coarse.indices, fine.points, coarse.features)};
}

/// Row-sum deviations and sizes recorded during a forward pass.
struct ForwardTrace {
  std::array<std::size_t, 3> sampled_counts{};
  std::vector<double> adjacency_row_sum_deviation;
  std::vector<double> attention_row_sum_deviation;
};

/// N x 6 input: xyz then normal.
inline Eigen::MatrixXd input_features(const PointCloud& cloud) {
  if (cloud.normals.size() != cloud.size()) throw ShapeMismatch("network input needs one normal per point");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(cloud.size()), NetworkConfig::kInputChannels);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    x.block<1, 3>(static_cast<Eigen::Index>(i), 0) = cloud.points[i].transpose();
    x.block<1, 3>(static_cast<Eigen::Index>(i), 3) = cloud.normals[i].transpose();
  }
  return x;
}

/// Per-scale FPS start seeds derived from the run seed.
inline std::uint64_t scale_seed(std::uint64_t seed, int scale) {
  return seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(scale) + 1;
}

/// Three chained aggregation scales, each upsampled to every input point,
/// then coarse-to-fine cross attention; the results are concatenated.
/// Sample counts larger than the set they draw from are clamped to it.
inline FeatureMap multi_scale_extract(const PointCloud& cloud, const NetworkWeights& w, const NetworkConfig& cfg,
                                      std::uint64_t seed, ForwardTrace* trace = nullptr) {
  validate(cfg);
  w.check(cfg);
  if (cloud.empty()) throw EmptyInput("forward pass on an empty cloud");
  const Eigen::MatrixXd x0 = input_features(cloud);
  if (!x0.allFinite()) throw ShapeMismatch("network input is not finite");

  std::vector<Vec3> pts = cloud.points;  // positions of the current scale's input set
  IndexList to_cloud(cloud.size());      // current input set -> cloud index
  std::iota(to_cloud.begin(), to_cloud.end(), 0);
  Eigen::MatrixXd feats = x0;
  std::array<Eigen::MatrixXd, 3> upsampled;
  for (int s = 0; s < 3; ++s) {
    AggregationConfig ac;
    ac.sample_count = std::min<std::size_t>(static_cast<std::size_t>(cfg.sample_counts[s]), pts.size());
    ac.radius = cfg.radii[s];
    ac.neighbors = static_cast<std::size_t>(cfg.neighbors);
    ac.prefix = scale_prefix(s);
    auto r = feature_aggregation(pts, feats, ac, w, scale_seed(seed, s), cfg);
    if (trace) {
      trace->sampled_counts[static_cast<std::size_t>(s)] = r.sampled.size();
      trace->adjacency_row_sum_deviation.push_back(row_sum_deviation(r.adjacency));
    }
    IndexList next_to_cloud;
    std::vector<Vec3> next_pts;
    for (auto i : r.sampled) {
      next_to_cloud.push_back(to_cloud[static_cast<std::size_t>(i)]);
      next_pts.push_back(pts[static_cast<std::size_t>(i)]);
    }
    upsampled[static_cast<std::size_t>(s)] = interpolate_features(next_to_cloud, cloud.points, r.output);
    pts = std::move(next_pts);
    to_cloud = std::move(next_to_cloud);
    feats = std::move(r.output);
  }

  const Eigen::Index n = static_cast<Eigen::Index>(cloud.size());
  const Eigen::Index c = cfg.scale_channels();
  FeatureMap latent;
  latent.indices.resize(cloud.size());
  std::iota(latent.indices.begin(), latent.indices.end(), 0);
  latent.features.resize(n, 3 * c);
  latent.features.leftCols(c) = upsampled[0];
  for (int s = 1; s < 3; ++s) {
    Eigen::MatrixXd out;
    if (cfg.pairing == AttentionPairing::coarse_to_fine) {
      auto a = cross_attention(upsampled[static_cast<std::size_t>(s)], upsampled[static_cast<std::size_t>(s - 1)],
                               w, attention_prefix(s));
      if (trace) trace->attention_row_sum_deviation.push_back(row_sum_deviation(a.weights));
      out = std::move(a.output);
    } else {
      out = upsampled[static_cast<std::size_t>(s)];
    }
    latent.features.middleCols(s * c, c) = out;
  }
  return latent;
}

/// Per-point outputs. `distance_fields` is N x 4 (the N x 1 x 4 tensor);
/// `projection_vectors` is N x 12 with kind k in columns 3k..3k+2 (the
/// N x 3 x 4 tensor).
struct Prediction {
  Eigen::MatrixXd distance_fields;
  Eigen::MatrixXd projection_vectors;

  std::array<Eigen::Index, 3> distance_shape() const { return {distance_fields.rows(), 1, 4}; }
  std::array<Eigen::Index, 3> vector_shape() const { return {projection_vectors.rows(), 3, 4}; }
  double vector(Eigen::Index point, int component, int kind) const {
    return projection_vectors(point, 3 * kind + component);
  }
};

inline Eigen::MatrixXd head_stack(const Eigen::MatrixXd& x, const NetworkWeights& w, const NetworkConfig& cfg,
                                  const std::string& head) {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < cfg.head_widths.size(); ++l) {
    h = lbr(h, w, head + ".lbr" + std::to_string(l), cfg.norm_epsilon);
  }
  return linear(h, w, head + ".out");
}

/// Appends xyz and normals to the latent, then runs the two heads. The
/// landmark head is squashed into [0, 1] with a logistic sigmoid.
inline Prediction feature_enhance(const Eigen::MatrixXd& latent, const PointCloud& cloud, const NetworkWeights& w,
                                  const NetworkConfig& cfg) {
  if (latent.rows() != static_cast<Eigen::Index>(cloud.size())) {
    throw ShapeMismatch("feature_enhance: latent has " + std::to_string(latent.rows()) + " rows for " +
                        std::to_string(cloud.size()) + " points");
  }
  if (latent.cols() != cfg.latent_width()) throw ShapeMismatch("feature_enhance: latent width mismatch");
  Eigen::MatrixXd x(latent.rows(), latent.cols() + NetworkConfig::kInputChannels);
  x << latent, input_features(cloud);
  Prediction p;
  p.distance_fields = head_stack(x, w, cfg, "head.landmark").unaryExpr([](double v) { return sigmoid(v); });
  p.projection_vectors = head_stack(x, w, cfg, "head.axis");
  return p;
}

inline Prediction forward(const PointCloud& cloud, const NetworkWeights& w, const NetworkConfig& cfg,
                          std::uint64_t seed, ForwardTrace* trace = nullptr) {
  const FeatureMap latent = multi_scale_extract(cloud, w, cfg, seed, trace);
  return feature_enhance(latent.features, cloud, w, cfg);
}

}  // namespace densefield::net
