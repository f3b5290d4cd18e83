#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/field_codec.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

enum class ToothCategory { incisor = 0, canine = 1, premolar = 2, molar = 3 };

inline std::string_view to_string(ToothCategory c) {
  constexpr std::array<std::string_view, 4> names{"incisor", "canine", "premolar", "molar"};
  return names[static_cast<int>(c)];
}

inline ToothCategory parse_category(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    auto c = static_cast<ToothCategory>(i);
    if (to_string(c) == s) return c;
  }
  throw ParseError("unknown tooth category '" + std::string(s) + "'");
}

/// Parameters of one synthetic tooth. Lengths are model units (mm).
///
/// The body is a superellipsoid with half extents `half_width` (mesio-distal,
/// x), `half_depth` (bucco-lingual, y), `crown_height` above the equator and
/// `crown_height * root_ratio` below it. +z is occlusal, +y buccal, +x mesial.
struct SyntheticToothSpec {
  ToothCategory category = ToothCategory::molar;
  int cusp_count = 4;
  double half_width = 5.2;
  double half_depth = 5.0;
  double crown_height = 3.4;
  double root_ratio = 1.0;
  double vertical_exponent = 0.35;  // < 1 gives a flat occlusal table and upright walls
  double plan_exponent = 0.6;       // < 1 gives a squarish outline
  double mesial_taper = 0.06;       // flare of the mesial/distal walls toward the crown
  double cusp_spread = 0.45;        // cusp ring radius as a fraction of the half extents
  double bump_amplitude = 0.7;
  double bump_width = 1.3;
  double tilt_x_deg = 0.0;
  double tilt_y_deg = 0.0;
  Vec3 offset = Vec3::Zero();
  int resolution = 40;  // grid cells per cube face
  std::uint64_t seed = 0;
};

inline void validate(const SyntheticToothSpec& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (s.cusp_count < 1) throw InvalidSpec("cusp count must be at least 1");
  if (!(s.half_width > 0 && s.half_depth > 0 && s.crown_height > 0 && s.root_ratio > 0)) {
    throw InvalidSpec("body extents must be positive");
  }
  if (!(s.vertical_exponent > 0 && s.vertical_exponent < 2 && s.plan_exponent > 0 &&
        s.plan_exponent < 2)) {
    throw InvalidSpec("superellipsoid exponents must lie in (0, 2)");
  }
  if (!(std::abs(s.tilt_x_deg) <= 30.0 && std::abs(s.tilt_y_deg) <= 30.0)) {
    throw InvalidSpec("tilt angles must lie within +/-30 degrees");
  }
  if (!(s.bump_amplitude >= 0 && s.bump_width > 0 && s.cusp_spread >= 0 && s.cusp_spread < 1)) {
    throw InvalidSpec("cusp parameters out of range");
  }
  if (s.resolution < 4 || s.resolution % 2 != 0) {
    throw InvalidSpec("resolution must be an even number >= 4");
  }
  if (!(finite(s.mesial_taper) && std::abs(s.mesial_taper) < 0.5 && s.offset.allFinite())) {
    throw InvalidSpec("taper/offset out of range");
  }
}

struct SyntheticTooth {
  SyntheticToothSpec spec;
  TriangleMesh mesh;
  LandmarkSet landmarks;
  std::vector<ToothAxis> axes;  // BA, LA, MA, DA
};

/// Corpus default for `seed`: ten teeth per category in seed blocks of 10
/// (0-9 incisors, 10-19 canines, 20-29 premolars, 30-39 molars, repeating),
/// with dimensions and tilts jittered per seed.
inline SyntheticToothSpec default_spec(std::uint64_t seed) {
  SyntheticToothSpec s;
  s.seed = seed;
  s.category = static_cast<ToothCategory>((seed / 10) % 4);
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 1);
  auto jitter = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  switch (s.category) {
    case ToothCategory::incisor:
      s.cusp_count = 1;
      s.half_width = 4.3;
      s.half_depth = 3.4;
      s.crown_height = 3.6;
      break;
    case ToothCategory::canine:
      s.cusp_count = 1;
      s.half_width = 4.0;
      s.half_depth = 4.0;
      s.crown_height = 3.8;
      break;
    case ToothCategory::premolar:
      s.cusp_count = 2;
      s.half_width = 3.6;
      s.half_depth = 4.6;
      s.crown_height = 3.4;
      break;
    case ToothCategory::molar:
      s.cusp_count = 4;
      s.half_width = 5.2;
      s.half_depth = 5.0;
      s.crown_height = 3.4;
      break;
  }
  const double size = jitter(0.92, 1.08);
  s.half_width *= size * jitter(0.96, 1.04);
  s.half_depth *= size * jitter(0.96, 1.04);
  s.crown_height *= size * jitter(0.96, 1.04);
  s.root_ratio = jitter(1.0, 1.15);
  s.mesial_taper = jitter(0.02, 0.10);
  s.bump_amplitude = jitter(0.2, 0.35) * size;
  s.bump_width = jitter(1.2, 1.45) * size;
  s.tilt_x_deg = jitter(-15.0, 15.0);
  s.tilt_y_deg = jitter(-15.0, 15.0);
  s.offset = Vec3(jitter(-20, 20), jitter(-20, 20), jitter(-5, 5));
  return s;
}

namespace synthetic_detail {

inline double signed_pow(double v, double e) { return std::copysign(std::pow(std::abs(v), e), v); }

/// Radial distance along unit direction d to the superellipsoid surface.
inline double radial_extent(const SyntheticToothSpec& s, const Vec3& d) {
  const double c = d.z() >= 0 ? s.crown_height : s.crown_height * s.root_ratio;
  const double e1 = s.vertical_exponent, e2 = s.plan_exponent;
  const double plan = std::pow(std::abs(d.x() / s.half_width), 2.0 / e2) +
                      std::pow(std::abs(d.y() / s.half_depth), 2.0 / e2);
  const double f = std::pow(plan, e2 / e1) + std::pow(std::abs(d.z() / c), 2.0 / e1);
  return std::pow(f, -e1 / 2.0);
}

/// One cusp sits on the occlusal center; otherwise cusps form a ring. Four
/// cusps land on the corners (+/-spread*w, +/-spread*d), two on the bucco-
/// lingual line.
inline std::vector<Eigen::Vector2d> cusp_centers(const SyntheticToothSpec& s) {
  std::vector<Eigen::Vector2d> out;
  if (s.cusp_count == 1) {
    out.emplace_back(0.0, 0.0);
    return out;
  }
  const bool square = s.cusp_count == 4;
  const double offset = square ? std::numbers::pi / 4 : std::numbers::pi / 2;
  const double radius = s.cusp_spread * (square ? std::sqrt(2.0) : 1.0);
  for (int i = 0; i < s.cusp_count; ++i) {
    const double a = offset + 2.0 * std::numbers::pi * i / s.cusp_count;
    out.emplace_back(radius * s.half_width * std::cos(a), radius * s.half_depth * std::sin(a));
  }
  return out;
}

inline double smoothstep(double lo, double hi, double x) {
  const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace synthetic_detail

/// Builds a closed genus-0 tooth-like surface with analytic ground truth.
///
/// The surface is a cube-sphere lattice projected radially onto the
/// superellipsoid, flared mesio-distally, with Gaussian cusp bumps raised on
/// the occlusal table. Landmarks are mesh vertices: cusp tips at the vertex
/// nearest each bump center, FA at the buccal-face center, CO at the mesial
/// and distal extremes, OC at the occlusal center (premolars and molars
/// only). Axes are the wall tangents at the buccal, lingual, mesial and
/// distal equator points.
inline SyntheticTooth generate_tooth(const SyntheticToothSpec& spec) {
  using namespace synthetic_detail;
  validate(spec);
  const int n = spec.resolution;
  SyntheticTooth tooth;
  tooth.spec = spec;
  TriangleMesh& mesh = tooth.mesh;

  // Lattice points on the surface of the {0..n}^3 cube.
  std::map<std::array<int, 3>, std::int32_t> index;
  auto vertex_of = [&](int i, int j, int k) {
    auto [it, inserted] = index.try_emplace({i, j, k}, 0);
    if (inserted) {
      it->second = static_cast<std::int32_t>(mesh.vertices.size());
      const Vec3 u(2.0 * i / n - 1.0, 2.0 * j / n - 1.0, 2.0 * k / n - 1.0);
      const double c = u.z() >= 0 ? spec.crown_height : spec.crown_height * spec.root_ratio;
      const Vec3 d = Vec3(u.x() * spec.half_width, u.y() * spec.half_depth, u.z() * c).normalized();
      mesh.vertices.push_back(radial_extent(spec, d) * d);
    }
    return it->second;
  };
  // Each cube face: axis `a` fixed at side `s`; (b, c) span the face with
  // b x c pointing outward.
  for (int a = 0; a < 3; ++a) {
    for (int side = 0; side <= 1; ++side) {
      int b = (a + 1) % 3, c = (a + 2) % 3;
      if (side == 0) std::swap(b, c);
      for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
          auto at = [&](int pp, int qq) {
            std::array<int, 3> ijk{};
            ijk[a] = side * n;
            ijk[b] = pp;
            ijk[c] = qq;
            return vertex_of(ijk[0], ijk[1], ijk[2]);
          };
          const auto v00 = at(p, q), v10 = at(p + 1, q), v11 = at(p + 1, q + 1), v01 = at(p, q + 1);
          mesh.faces.push_back({v00, v10, v11});
          mesh.faces.push_back({v00, v11, v01});
        }
      }
    }
  }
  const auto lattice = [&](int i, int j, int k) { return index.at({i, j, k}); };
  const std::int32_t top_center = lattice(n / 2, n / 2, n);
  const std::int32_t buccal_center = lattice(n / 2, n, n / 2);
  const std::int32_t lingual_center = lattice(n / 2, 0, n / 2);
  const std::int32_t mesial_center = lattice(n, n / 2, n / 2);
  const std::int32_t distal_center = lattice(0, n / 2, n / 2);

  // Mesio-distal flare, then cusp bumps on the occlusal table.
  const auto centers = cusp_centers(spec);
  std::vector<double> occlusal_weight(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    Vec3& p = mesh.vertices[v];
    occlusal_weight[v] = smoothstep(0.55, 0.9, p.z() / spec.crown_height);
    p.x() *= 1.0 + spec.mesial_taper * p.z() / spec.crown_height;
  }
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    Vec3& p = mesh.vertices[v];
    double h = 0.0;
    for (const auto& c : centers) {
      const double r2 = (p.head<2>() - c).squaredNorm();
      const double q = r2 / (2.0 * spec.bump_width * spec.bump_width);
      h += spec.bump_amplitude * std::exp(-q * q);
    }
    p.z() += occlusal_weight[v] * h;
  }

  // Ground truth in the body frame.
  auto add = [&](LandmarkKind k, std::int32_t v) { tooth.landmarks.landmarks.push_back({mesh.vertices[v], k}); };
  add(LandmarkKind::CO, mesial_center);
  add(LandmarkKind::CO, distal_center);
  for (const auto& c : centers) {
    std::int32_t best = top_center;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (occlusal_weight[v] < 1.0) continue;
      const double d2 = (mesh.vertices[v].head<2>() - c).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<std::int32_t>(v);
      }
    }
    add(LandmarkKind::CU, best);
  }
  add(LandmarkKind::FA, buccal_center);
  if (spec.category == ToothCategory::premolar || spec.category == ToothCategory::molar) {
    add(LandmarkKind::OC, top_center);
  }
  const double lean = spec.half_width * spec.mesial_taper / spec.crown_height;
  tooth.axes = {
      {mesh.vertices[buccal_center], Vec3::UnitZ(), AxisKind::BA},
      {mesh.vertices[lingual_center], Vec3::UnitZ(), AxisKind::LA},
      {mesh.vertices[mesial_center], Vec3(lean, 0, 1).normalized(), AxisKind::MA},
      {mesh.vertices[distal_center], Vec3(-lean, 0, 1).normalized(), AxisKind::DA},
  };

  // Rigid placement.
  constexpr double deg = std::numbers::pi / 180.0;
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(spec.tilt_x_deg * deg, Vec3::UnitX()) *
                               Eigen::AngleAxisd(spec.tilt_y_deg * deg, Vec3::UnitY()))
                                  .toRotationMatrix();
  for (auto& p : mesh.vertices) p = rot * p + spec.offset;
  for (auto& l : tooth.landmarks.landmarks) l.position = rot * l.position + spec.offset;
  for (auto& ax : tooth.axes) {
    ax.point = rot * ax.point + spec.offset;
    ax.direction = canonicalize_direction((rot * ax.direction).normalized());
  }
  mesh.frame = Frame::model;
  validate(mesh);
  return tooth;
}

/// Adds seeded Gaussian noise; distance values are clamped back to [0, 1].
inline DistanceField perturb_field(const DistanceField& field, double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw InvalidArgument("noise std must be non-negative");
  DistanceField out = field;
  if (noise_std == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std);
  for (Eigen::Index j = 0; j < out.values.cols(); ++j)
    for (Eigen::Index i = 0; i < out.values.rows(); ++i)
      out.values(i, j) = std::clamp(out.values(i, j) + noise(rng), 0.0, 1.0);
  return out;
}

inline ProjectionVectorField perturb_field(const ProjectionVectorField& field, double noise_std,
                                           std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw InvalidArgument("noise std must be non-negative");
  ProjectionVectorField out = field;
  if (noise_std == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_std);
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j)
    for (Eigen::Index i = 0; i < out.vectors.rows(); ++i) out.vectors(i, j) += noise(rng);
  return out;
}

}  // namespace densefield
