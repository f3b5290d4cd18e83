#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "densefield/pipeline.hpp"

using namespace densefield;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "densefield_pipeline_test";
  fs::create_directories(d);
  return d / name;
}

struct Encoded : ::testing::Test {
  static void SetUpTestSuite() {
    tooth = new SyntheticTooth(generate_tooth(default_spec(7)));
    ann = new ToothAnnotation(annotation_of(*tooth, tooth_id_for_seed(7)));
    enc = new EncodedTooth(encode_tooth(tooth->mesh, *ann, 2048, kDefaultSigma, 7));
  }
  static void TearDownTestSuite() {
    delete enc;
    delete ann;
    delete tooth;
  }
  static SyntheticTooth* tooth;
  static ToothAnnotation* ann;
  static EncodedTooth* enc;
};
SyntheticTooth* Encoded::tooth = nullptr;
ToothAnnotation* Encoded::ann = nullptr;
EncodedTooth* Encoded::enc = nullptr;

}  // namespace

TEST(ToothId, ZeroPadded) {
  EXPECT_EQ(tooth_id_for_seed(7), "tooth_007");
  EXPECT_EQ(tooth_id_for_seed(1234), "tooth_1234");
}

TEST_F(Encoded, FieldsHaveExpectedShapes) {
  EXPECT_EQ(enc->cloud.size(), 2048u);
  EXPECT_EQ(enc->distance.values.rows(), 2048);
  EXPECT_EQ(enc->distance.values.cols(), 4);
  EXPECT_EQ(enc->vectors.vectors.cols(), 12);
  EXPECT_EQ(enc->axes.size(), 4u);
  EXPECT_GE(enc->distance.values.minCoeff(), 0.0);
  EXPECT_LE(enc->distance.values.maxCoeff(), 1.0);
  for (const auto& p : enc->cloud.points) EXPECT_LE(p.norm(), 1.0 + 1e-12);
  EXPECT_EQ(enc->mesh.frame, Frame::normalized);
}

TEST_F(Encoded, RoundTripThroughDecodeAndEval) {
  const auto d = decode_tooth(ann->tooth_id, enc->cloud, enc->distance, enc->vectors, counts_of(ann->landmarks), 7);
  EXPECT_TRUE(d.warnings.empty());
  const auto r = evaluate_tooth(d, *ann, enc->transform, AxisMode::directed);
  ASSERT_EQ(r.landmark_errors_mm.size(), ann->landmarks.landmarks.size());
  const double tolerance_mm = enc->transform.length_to_model(0.05);
  for (double e : r.landmark_errors_mm) EXPECT_LT(e, tolerance_mm);
  ASSERT_EQ(r.axis_errors_deg.size(), 4u);
  for (double e : r.axis_errors_deg) EXPECT_LT(e, 1e-4);
  EXPECT_GT(tolerance_mm, 0.0);
}

TEST_F(Encoded, MismatchedIdAndFrameRejected) {
  auto d = decode_tooth("other", enc->cloud, enc->distance, enc->vectors, counts_of(ann->landmarks));
  EXPECT_THROW(evaluate_tooth(d, *ann, enc->transform, AxisMode::directed), InvalidArgument);
  auto normalized = apply(enc->transform, tooth->mesh);
  EXPECT_THROW(encode_tooth(normalized, *ann, 64), FrameMismatch);
  DistanceField bad;
  bad.values = Eigen::MatrixXd::Zero(10, 4);
  EXPECT_THROW(decode_tooth("x", enc->cloud, bad, enc->vectors, counts_of(ann->landmarks)), ShapeMismatch);
}

TEST_F(Encoded, CollapsedVectorsGiveInvalidAxesNotAborts) {
  // Every vector sends its point to the same spot, so no direction exists.
  ProjectionVectorField collapsed{Eigen::MatrixXd::Zero(2048, 12)};
  for (Eigen::Index i = 0; i < 2048; ++i)
    for (int k = 0; k < 4; ++k)
      collapsed.vectors.block<1, 3>(i, 3 * k) = (Vec3(0.1, 0.2, 0.3) - enc->cloud.points[static_cast<std::size_t>(i)]).transpose();
  const auto d = decode_tooth(ann->tooth_id, enc->cloud, enc->distance, collapsed, counts_of(ann->landmarks));
  ASSERT_EQ(d.axes.size(), 4u);
  for (const auto& a : d.axes) EXPECT_FALSE(a.valid);
  EXPECT_EQ(d.warnings.size(), 4u);
  const auto r = evaluate_tooth(d, *ann, enc->transform, AxisMode::directed);
  EXPECT_TRUE(r.axis_errors_deg.empty());
  EXPECT_FALSE(r.landmark_errors_mm.empty());
}

TEST_F(Encoded, FileRoundTrips) {
  save_annotation(scratch("a.json"), *ann);
  const auto a = load_annotation(scratch("a.json"));
  EXPECT_EQ(a.tooth_id, ann->tooth_id);
  EXPECT_EQ(a.category, ann->category);
  ASSERT_EQ(a.landmarks.landmarks.size(), ann->landmarks.landmarks.size());
  for (std::size_t i = 0; i < a.landmarks.landmarks.size(); ++i) {
    EXPECT_EQ(a.landmarks.landmarks[i].position, ann->landmarks.landmarks[i].position);
    EXPECT_EQ(a.landmarks.landmarks[i].kind, ann->landmarks.landmarks[i].kind);
  }
  for (std::size_t i = 0; i < a.axes.size(); ++i) EXPECT_LT((a.axes[i].direction - ann->axes[i].direction).norm(), 1e-15);

  save_transform(scratch("t.json"), "tooth_007", enc->transform);
  const auto t = load_transform(scratch("t.json"));
  EXPECT_EQ(t.tooth_id, "tooth_007");
  EXPECT_EQ(t.transform.scale, enc->transform.scale);
  EXPECT_EQ(t.transform.center, enc->transform.center);

  save_distance_csv(scratch("d.csv"), enc->distance);
  const auto df = load_distance_csv(scratch("d.csv"));
  EXPECT_EQ(df.values, enc->distance.values);
  EXPECT_EQ(df.sigma, 0.3);
  save_vector_csv(scratch("v.csv"), enc->vectors);
  EXPECT_EQ(load_vector_csv(scratch("v.csv")).vectors, enc->vectors.vectors);

  const auto d = decode_tooth(ann->tooth_id, enc->cloud, enc->distance, enc->vectors, counts_of(ann->landmarks));
  save_decoded(scratch("dec.json"), d);
  const auto back = load_decoded(scratch("dec.json"));
  EXPECT_EQ(back.tooth_id, d.tooth_id);
  EXPECT_EQ(back.landmarks.landmarks.size(), d.landmarks.landmarks.size());
  EXPECT_EQ(back.axes.size(), d.axes.size());
  EXPECT_EQ(back.axes[2].axis.direction, d.axes[2].axis.direction);
}

TEST(AnnotationJson, RejectsMalformedInput) {
  nlohmann::json j = {{"tooth_id", "x"}, {"landmarks", nlohmann::json::array()},
                      {"axes", {{{"kind", "BA"}, {"point", {0, 0, 0}}, {"direction", {0, 0, 0}}}}}};
  EXPECT_THROW(annotation_from_json(j), ParseError);
  j["axes"][0]["direction"] = {0, 0};
  EXPECT_THROW(annotation_from_json(j), ParseError);
  j["axes"][0]["direction"] = {0, 0, 2};
  j["landmarks"] = {{{"kind", "XX"}, {"position", {0, 0, 0}}}};
  EXPECT_THROW(annotation_from_json(j), ParseError);
  EXPECT_THROW(load_annotation(scratch("does_not_exist.json")), IOError);
  nlohmann::json model = {{"tooth_id", "x"}, {"frame", "model"}, {"landmarks", nlohmann::json::array()},
                          {"axes", nlohmann::json::array()}};
  EXPECT_THROW(decoded_from_json(model), FrameMismatch);
}
