#include <gtest/gtest.h>

#include <random>

#include "densefield/field_codec.hpp"
#include "densefield/sampling.hpp"
#include "densefield/synthetic.hpp"
#include "oracles.hpp"

using namespace densefield;

namespace {

PointCloud cloud_of(std::vector<Vec3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  c.normals.assign(c.points.size(), Vec3::UnitZ());
  c.frame = Frame::normalized;
  return c;
}

std::vector<Vec3> blob(const Vec3& center, std::size_t n, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, spread);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(center + Vec3(g(rng), g(rng), g(rng)));
  return out;
}

}  // namespace

TEST(GaussianCoding, PointValues) {
  EXPECT_DOUBLE_EQ(gaussian_coding(0.0, 0.3), 1.0);
  EXPECT_NEAR(gaussian_coding(0.3, 0.3), std::exp(-0.5), 1e-15);
  EXPECT_EQ(gaussian_coding(kUnreachable, 0.3), 0.0);
}

TEST(GaussianCoding, StrictlyDecreasing) {
  double prev = 2.0;
  for (double g = 0.0; g < 2.0; g += 0.05) {
    const double v = gaussian_coding(g, 0.3);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(CombineFields, PointwiseMax) {
  Eigen::VectorXd a(3), b(3);
  a << 0.1, 0.9, 0.5;
  b << 0.4, 0.2, 0.5;
  std::vector<Eigen::VectorXd> f{a, b};
  auto c = combine_fields(f, 3);
  EXPECT_EQ(c, Eigen::Vector3d(0.4, 0.9, 0.5));
  EXPECT_EQ(combine_fields({}, 3), Eigen::VectorXd::Zero(3));
}

class EncodedMolar : public ::testing::Test {
 protected:
  void SetUp() override {
    auto tooth = generate_tooth(default_spec(31));
    auto nc = normalize_unit_ball(sample_surface(tooth.mesh, 2048, 5));
    cloud = nc.cloud;
    mesh = apply(nc.transform, tooth.mesh);
    landmarks = tooth.landmarks;
    for (auto& l : landmarks.landmarks) l.position = nc.transform.to_normalized(l.position);
    axes = tooth.axes;
  }
  PointCloud cloud;
  TriangleMesh mesh;
  LandmarkSet landmarks;
  std::vector<ToothAxis> axes;
};

TEST_F(EncodedMolar, RangeAndEmptyKinds) {
  auto f = encode_landmarks(mesh, cloud, landmarks);
  EXPECT_EQ(f.values.rows(), 2048);
  EXPECT_EQ(f.values.cols(), 4);
  EXPECT_GE(f.values.minCoeff(), 0.0);
  EXPECT_LE(f.values.maxCoeff(), 1.0);
  for (auto k : kLandmarkKinds) EXPECT_GE(f.column(k).maxCoeff(), 0.99) << to_string(k);
  LandmarkSet only_cu;
  for (const auto& l : landmarks.landmarks)
    if (l.kind == LandmarkKind::CU) only_cu.landmarks.push_back(l);
  auto g = encode_landmarks(mesh, cloud, only_cu);
  EXPECT_EQ(g.column(LandmarkKind::CO).maxCoeff(), 0.0);
  EXPECT_EQ(g.column(LandmarkKind::CU), f.column(LandmarkKind::CU));
}

TEST_F(EncodedMolar, MultipleCuspsCombineByMax) {
  auto f = encode_landmarks(mesh, cloud, landmarks);
  GeodesicSolver solver(mesh);
  std::vector<Eigen::VectorXd> singles;
  for (const auto& p : landmarks.positions(LandmarkKind::CU)) singles.push_back(landmark_field(solver, cloud, p, 0.3));
  ASSERT_EQ(singles.size(), 4u);
  const Eigen::VectorXd col = f.column(LandmarkKind::CU);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    bool attained = false;
    for (const auto& s : singles) {
      EXPECT_GE(col[i], s[i]);
      attained |= col[i] == s[i];
    }
    EXPECT_TRUE(attained);
  }
}

TEST_F(EncodedMolar, LandmarkRoundTrip) {
  auto f = encode_landmarks(mesh, cloud, landmarks);
  for (auto k : kLandmarkKinds) {
    const auto gt = landmarks.positions(k);
    const auto dec = decode_landmarks(cloud, Eigen::VectorXd(f.column(k)), gt.size(), 1);
    ASSERT_EQ(dec.size(), gt.size());
    for (const auto& g : gt) {
      double best = 1e9;
      for (const auto& d : dec) best = std::min(best, (d - g).norm());
      EXPECT_LT(best, 0.05) << to_string(k);
    }
  }
}

TEST_F(EncodedMolar, AxisRoundTripAndPerpendicularity) {
  for (const auto& ax : axes) {
    auto enc = encode_axis(cloud, ax.direction, ax.kind);
    for (Eigen::Index i = 0; i < enc.vectors.rows(); ++i) {
      const Vec3 v = enc.vectors.row(i).transpose();
      EXPECT_LE(std::abs(v.dot(enc.axis.direction)), 1e-7 * std::max(v.norm(), 1e-300));
    }
    auto dec = decode_axis(cloud, enc.vectors, ax.kind);
    EXPECT_LT(oracle::angle_between_lines(dec.direction, ax.direction), 1e-6);
    EXPECT_LT(enc.axis.line().distance_to(dec.point), 1e-9);
  }
}

TEST_F(EncodedMolar, DecodeAxisPermutationInvariant) {
  auto enc = encode_axis(cloud, axes[2].direction, axes[2].kind);
  std::mt19937_64 rng(3);
  std::vector<std::size_t> perm(cloud.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PointCloud shuffled = cloud;
  Eigen::MatrixX3d v(enc.vectors.rows(), 3);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.points[i] = cloud.points[perm[i]];
    v.row(static_cast<Eigen::Index>(i)) = enc.vectors.row(static_cast<Eigen::Index>(perm[i]));
  }
  auto a = decode_axis(cloud, enc.vectors);
  auto b = decode_axis(shuffled, v);
  EXPECT_LT((a.direction - b.direction).norm(), 1e-9);
  EXPECT_LT((a.point - b.point).norm(), 1e-9);
}

TEST(EncodeAxis, HandExample) {
  auto c = cloud_of({Vec3(1, 0, 2), Vec3(-1, 0, -2)});
  auto enc = encode_axis(c, Vec3(0, 0, 1), AxisKind::BA);
  EXPECT_NEAR((enc.axis.point - Vec3::Zero()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((Vec3(enc.vectors.row(0).transpose()) - Vec3(-1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_THROW(encode_axis(c, Vec3(0, 0, 2), AxisKind::BA), InvalidArgument);
}

TEST(EncodeAxis, PointOnAxisHasZeroVector) {
  auto c = cloud_of({Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(0, 0, 0.3)});
  auto enc = encode_axis(c, Vec3(0, 0, 1), AxisKind::LA);
  EXPECT_EQ(enc.vectors.row(2).norm(), 0.0);
}

TEST(DecodeLandmarks, SinglePeak) {
  auto c = cloud_of({Vec3(0, 0, 0), Vec3(0.3, 0.1, 0), Vec3(0.5, 0.5, 0.5)});
  std::vector<double> f{0.0, 1.0, 0.0};
  auto d = decode_landmarks(c, f, 1, 0);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], c.points[1]);
}

TEST(DecodeLandmarks, TwoGaussianBumps) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) {
    Vec3 p(u(rng), u(rng), u(rng));
    if (p.norm() <= 1.0) pts.push_back(p);
  }
  const Vec3 a(-0.55, 0, 0), b(0.55, 0.1, 0);
  auto c = cloud_of(pts);
  std::vector<double> f;
  for (const auto& p : pts) f.push_back(std::max(gaussian_coding((p - a).norm(), 0.3), gaussian_coding((p - b).norm(), 0.3)));
  // Oracle: centroid of the above-threshold points in each half, which is
  // where Lloyd's iteration settles for two well-separated blobs.
  Vec3 pa = Vec3::Zero(), pb = Vec3::Zero();
  int na = 0, nb = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (f[i] < 0.5) continue;
    if (pts[i].x() < 0) pa += pts[i], ++na;
    else pb += pts[i], ++nb;
  }
  ASSERT_GT(na, 0);
  ASSERT_GT(nb, 0);
  pa /= na;
  pb /= nb;
  auto d = decode_landmarks(c, f, 2, 4);
  std::sort(d.begin(), d.end(), [](const Vec3& x, const Vec3& y) { return x.x() < y.x(); });
  EXPECT_LT((d[0] - pa).norm(), 1e-9);
  EXPECT_LT((d[1] - pb).norm(), 1e-9);
  // Both blobs are sampled densely enough to land near the true centers.
  EXPECT_LT((d[0] - a).norm(), 0.1);
  EXPECT_LT((d[1] - b).norm(), 0.1);
}

TEST(DecodeLandmarks, ThresholdRelaxationAndErrors) {
  auto c = cloud_of({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)});
  std::vector<double> low{0.1, 0.2, 0.05, 0.15};
  auto d = decode_landmarks(c, low, 2, 0);
  ASSERT_EQ(d.size(), 2u);
  // Threshold drops to 0.15: points 1 and 3 survive, one cluster each.
  const bool order_a = d[0] == c.points[1] && d[1] == c.points[3];
  const bool order_b = d[0] == c.points[3] && d[1] == c.points[1];
  EXPECT_TRUE(order_a || order_b);
  std::vector<double> zero(4, 0.0);
  EXPECT_THROW(decode_landmarks(c, zero, 1, 0), EmptyField);
  EXPECT_THROW(decode_landmarks(c, low, 0, 0), InvalidCount);
  DecodeOptions bad;
  bad.threshold = 1.0;
  EXPECT_THROW(decode_landmarks(c, low, 1, 0, bad), InvalidArgument);
  std::vector<double> short_col{1.0};
  EXPECT_THROW(decode_landmarks(c, short_col, 1, 0), ShapeMismatch);
}

TEST(DecodeLandmarks, MismatchedCountStillEmitsCount) {
  auto c = cloud_of({Vec3(0, 0, 0), Vec3(0.01, 0, 0), Vec3(0, 0.01, 0), Vec3(0.02, 0.01, 0)});
  std::vector<double> f{1.0, 0.9, 0.8, 0.7};
  EXPECT_EQ(decode_landmarks(c, f, 3, 0).size(), 3u);
}

TEST(DecodeAxis, ZAxisAndDegenerate) {
  auto c = cloud_of({Vec3(1, 0, 0), Vec3(0, 1, 1), Vec3(-1, 0, 2)});
  Eigen::MatrixX3d v(3, 3);
  v << -1, 0, 0, 0, -1, 0, 1, 0, 0;
  auto ax = decode_axis(c, v);
  EXPECT_NEAR((ax.direction - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
  Eigen::MatrixX3d collapse(3, 3);
  collapse << -1, 0, 0, 0, -1, -1, 1, 0, -2;
  try {
    decode_axis(c, collapse);
    FAIL() << "expected DegenerateFit";
  } catch (const DegenerateFit& e) {
    EXPECT_NEAR(e.point().norm(), 0.0, 1e-12);
  }
}

TEST(KMeans, EachPointItsOwnCenter) {
  std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 5, 0)};
  auto c = kmeans(p, 3, 0);
  std::sort(c.begin(), c.end(), [](const Vec3& a, const Vec3& b) { return a.x() + 10 * a.y() < b.x() + 10 * b.y(); });
  EXPECT_EQ(c[0], p[0]);
  EXPECT_EQ(c[1], p[1]);
  EXPECT_EQ(c[2], p[2]);
}

TEST(KMeans, TwoBlobsGiveBlobMeans) {
  std::mt19937_64 rng(5);
  auto a = blob(Vec3(-3, 0, 0), 200, 0.1, rng);
  auto b = blob(Vec3(3, 1, 0), 150, 0.1, rng);
  std::vector<Vec3> all = a;
  all.insert(all.end(), b.begin(), b.end());
  auto c = kmeans(all, 2, 9);
  std::sort(c.begin(), c.end(), [](const Vec3& x, const Vec3& y) { return x.x() < y.x(); });
  EXPECT_LT((c[0] - centroid(a)).norm(), 1e-6);
  EXPECT_LT((c[1] - centroid(b)).norm(), 1e-6);
}

TEST(KMeans, SingleClusterIsCentroidAndDeterministic) {
  std::mt19937_64 rng(6);
  auto p = blob(Vec3(1, 2, 3), 100, 1.0, rng);
  auto c = kmeans(p, 1, 3);
  EXPECT_LT((c[0] - centroid(p)).norm(), 1e-12);
  auto x = kmeans(p, 4, 17), y = kmeans(p, 4, 17);
  EXPECT_EQ(x, y);
  EXPECT_THROW(kmeans(p, 101, 1), InvalidCount);
  EXPECT_THROW(kmeans(p, 0, 1), InvalidCount);
}

TEST(LineFit, HandExamples) {
  std::vector<Vec3> p{Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, 2)};
  auto l = fit_line_3d(p);
  EXPECT_NEAR((l.point - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((l.direction - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  const Vec3 d = Vec3(1, 1, 1).normalized();
  std::vector<Vec3> q;
  for (int i = -3; i <= 3; ++i) q.push_back(0.7 * i * d);
  EXPECT_LT((fit_line_3d(q).direction - d).norm(), 1e-9);
  EXPECT_THROW(fit_line_3d(std::vector<Vec3>{Vec3::Zero()}), InvalidCount);
  EXPECT_THROW(fit_line_3d(std::vector<Vec3>{Vec3::Ones(), Vec3::Ones()}), DegenerateFit);
}

TEST(LineFit, MatchesEigensolverOnNoisyLines) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 dir = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 origin(g(rng), g(rng), g(rng));
    std::vector<Vec3> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(origin + 2.0 * g(rng) * dir + 0.05 * Vec3(g(rng), g(rng), g(rng)));
    const auto l = fit_line_3d(pts);
    const Vec3 ref = canonicalize_direction(oracle::principal_direction(pts));
    EXPECT_LT((l.direction - ref).norm(), 1e-6);
    EXPECT_NEAR(l.direction.norm(), 1.0, 1e-9);
  }
}

TEST(LineFit, Canonicalization) {
  EXPECT_EQ(canonicalize_direction(Vec3(0.1, -0.9, 0.2)), Vec3(-0.1, 0.9, -0.2));
  EXPECT_EQ(canonicalize_direction(Vec3(0.1, 0.9, 0.2)), Vec3(0.1, 0.9, 0.2));
}

TEST(Kinds, NamesRoundTrip) {
  for (auto k : kLandmarkKinds) EXPECT_EQ(parse_landmark_kind(to_string(k)), k);
  for (auto k : kAxisKinds) EXPECT_EQ(parse_axis_kind(to_string(k)), k);
  EXPECT_THROW(parse_landmark_kind("XX"), ParseError);
}
