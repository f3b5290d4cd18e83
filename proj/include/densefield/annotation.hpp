#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "densefield/error.hpp"
#include "densefield/field_codec.hpp"
#include "densefield/geometry.hpp"
#include "densefield/mesh_io.hpp"

namespace densefield {

// Annotation JSON (model units, mm):
//   {"tooth_id", "category", "units": "mm",
//    "landmarks": [{"kind", "position": [x,y,z]}],
//    "axes": [{"kind", "point": [x,y,z], "direction": [x,y,z]}]}

struct ToothAnnotation {
  std::string tooth_id;
  std::string category;
  LandmarkSet landmarks;
  std::vector<ToothAxis> axes;
};

namespace annotation_detail {

inline nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

inline Vec3 json_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IOError("write failed: " + path.string());
}

template <typename F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline nlohmann::json landmarks_json(const LandmarkSet& s) {
  auto arr = nlohmann::json::array();
  for (const auto& l : s.landmarks) arr.push_back({{"kind", to_string(l.kind)}, {"position", vec_json(l.position)}});
  return arr;
}

inline LandmarkSet json_landmarks(const nlohmann::json& arr) {
  LandmarkSet s;
  for (const auto& l : arr) {
    s.landmarks.push_back({json_vec(l.at("position")), parse_landmark_kind(l.at("kind").get<std::string>())});
  }
  return s;
}

}  // namespace annotation_detail

inline nlohmann::json to_json(const ToothAnnotation& a) {
  using namespace annotation_detail;
  nlohmann::json j;
  j["tooth_id"] = a.tooth_id;
  j["category"] = a.category;
  j["units"] = "mm";
  j["landmarks"] = landmarks_json(a.landmarks);
  auto& axes = j["axes"] = nlohmann::json::array();
  for (const auto& ax : a.axes) {
    axes.push_back({{"kind", to_string(ax.kind)}, {"point", vec_json(ax.point)}, {"direction", vec_json(ax.direction)}});
  }
  return j;
}

inline ToothAnnotation annotation_from_json(const nlohmann::json& j, const std::string& where = "<annotation>") {
  using namespace annotation_detail;
  return guarded(where, [&] {
    ToothAnnotation a;
    a.tooth_id = j.at("tooth_id").get<std::string>();
    a.category = j.value("category", "");
    a.landmarks = json_landmarks(j.at("landmarks"));
    for (const auto& ax : j.at("axes")) {
      ToothAxis t;
      t.kind = parse_axis_kind(ax.at("kind").get<std::string>());
      t.point = json_vec(ax.at("point"));
      const Vec3 d = json_vec(ax.at("direction"));
      if (!(d.norm() > 0.0)) throw ParseError(where + ": zero axis direction");
      t.direction = d.normalized();
      a.axes.push_back(t);
    }
    return a;
  });
}

inline void save_annotation(const std::filesystem::path& path, const ToothAnnotation& a) {
  annotation_detail::write_json(path, to_json(a));
}
inline ToothAnnotation load_annotation(const std::filesystem::path& path) {
  return annotation_from_json(annotation_detail::read_json(path), path.string());
}

// Transform JSON: {"tooth_id", "center": [x,y,z], "scale"}; normalized =
// (model - center) * scale.

inline void save_transform(const std::filesystem::path& path, const std::string& tooth_id,
                           const NormalizationTransform& t) {
  annotation_detail::write_json(
      path, {{"tooth_id", tooth_id}, {"center", annotation_detail::vec_json(t.center)}, {"scale", t.scale}});
}

struct LoadedTransform {
  std::string tooth_id;
  NormalizationTransform transform;
};

inline LoadedTransform load_transform(const std::filesystem::path& path) {
  const auto j = annotation_detail::read_json(path);
  return annotation_detail::guarded(path.string(), [&] {
    LoadedTransform t;
    t.tooth_id = j.at("tooth_id").get<std::string>();
    t.transform.center = annotation_detail::json_vec(j.at("center"));
    t.transform.scale = j.at("scale").get<double>();
    if (!(t.transform.scale > 0.0)) throw ParseError(path.string() + ": scale must be positive");
    return t;
  });
}

/// Decoder output in the normalized frame. An axis whose fit failed is kept
/// with `valid = false`.
struct DecodedAxis {
  ToothAxis axis;
  bool valid = true;
};

struct DecodedTooth {
  std::string tooth_id;
  LandmarkSet landmarks;
  std::vector<DecodedAxis> axes;
  std::vector<std::string> warnings;
};

inline nlohmann::json to_json(const DecodedTooth& d) {
  using namespace annotation_detail;
  nlohmann::json j;
  j["tooth_id"] = d.tooth_id;
  j["frame"] = "normalized";
  j["landmarks"] = landmarks_json(d.landmarks);
  auto& axes = j["axes"] = nlohmann::json::array();
  for (const auto& a : d.axes) {
    axes.push_back({{"kind", to_string(a.axis.kind)},
                    {"valid", a.valid},
                    {"point", vec_json(a.axis.point)},
                    {"direction", vec_json(a.axis.direction)}});
  }
  j["warnings"] = d.warnings;
  return j;
}

inline DecodedTooth decoded_from_json(const nlohmann::json& j, const std::string& where = "<decoded>") {
  using namespace annotation_detail;
  return guarded(where, [&] {
    if (j.value("frame", "normalized") != "normalized") throw FrameMismatch(where + ": decoded results must be normalized");
    DecodedTooth d;
    d.tooth_id = j.at("tooth_id").get<std::string>();
    d.landmarks = json_landmarks(j.at("landmarks"));
    for (const auto& a : j.at("axes")) {
      DecodedAxis da;
      da.axis.kind = parse_axis_kind(a.at("kind").get<std::string>());
      da.valid = a.value("valid", true);
      da.axis.point = json_vec(a.at("point"));
      da.axis.direction = json_vec(a.at("direction"));
      d.axes.push_back(da);
    }
    if (j.contains("warnings")) d.warnings = j.at("warnings").get<std::vector<std::string>>();
    return d;
  });
}

inline void save_decoded(const std::filesystem::path& path, const DecodedTooth& d) {
  annotation_detail::write_json(path, to_json(d));
}
inline DecodedTooth load_decoded(const std::filesystem::path& path) {
  return decoded_from_json(annotation_detail::read_json(path), path.string());
}

// Field CSVs. Distance: optional "# sigma=<v>" line, header CO,CU,FA,OC.
// Vectors: header BA_x,BA_y,BA_z,LA_x,...,DA_z.

inline std::vector<std::string> distance_header() {
  std::vector<std::string> h;
  for (auto k : kLandmarkKinds) h.emplace_back(to_string(k));
  return h;
}

inline std::vector<std::string> vector_header() {
  std::vector<std::string> h;
  for (auto k : kAxisKinds)
    for (const char* c : {"_x", "_y", "_z"}) h.push_back(std::string(to_string(k)) + c);
  return h;
}

namespace annotation_detail {

inline void write_matrix_csv(std::ostream& out, const std::vector<std::string>& header, const Eigen::MatrixXd& m) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << io_detail::format_double(m(r, c));
    out << '\n';
  }
}

inline Eigen::MatrixXd table_matrix(const CsvTable& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][c];
  return m;
}

}  // namespace annotation_detail

inline void write_distance_csv(std::ostream& out, const DistanceField& f) {
  out << "# sigma=" << io_detail::format_double(f.sigma) << '\n';
  annotation_detail::write_matrix_csv(out, distance_header(), f.values);
}

inline void save_distance_csv(const std::filesystem::path& path, const DistanceField& f) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  write_distance_csv(out, f);
}

inline DistanceField load_distance_csv(const std::filesystem::path& path) {
  const auto t = load_csv(path);
  if (t.header != distance_header()) throw ParseError(path.string() + ": header must be CO,CU,FA,OC");
  DistanceField f;
  f.values = annotation_detail::table_matrix(t);
  for (const auto& c : t.comments) {
    const auto pos = c.find("sigma=");
    if (pos != std::string::npos) f.sigma = io_detail::parse_double(c.substr(pos + 6), path.string());
  }
  return f;
}

inline void write_vector_csv(std::ostream& out, const ProjectionVectorField& f) {
  annotation_detail::write_matrix_csv(out, vector_header(), f.vectors);
}

inline void save_vector_csv(const std::filesystem::path& path, const ProjectionVectorField& f) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  write_vector_csv(out, f);
}

inline ProjectionVectorField load_vector_csv(const std::filesystem::path& path) {
  const auto t = load_csv(path);
  if (t.header != vector_header()) throw ParseError(path.string() + ": header must be BA_x,BA_y,...,DA_z");
  return {annotation_detail::table_matrix(t)};
}

}  // namespace densefield
