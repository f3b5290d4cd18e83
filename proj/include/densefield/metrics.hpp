#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "densefield/error.hpp"
#include "densefield/field_codec.hpp"
#include "densefield/geometry.hpp"

namespace densefield {

inline constexpr std::array<double, 5> kPointThresholdsMm{0.2, 0.4, 0.6, 0.8, 1.0};
inline constexpr std::array<double, 5> kAxisThresholdsDeg{2.0, 4.0, 6.0, 8.0, 10.0};
inline constexpr double kPointBinMm = 0.2;
inline constexpr double kAxisBinDeg = 2.0;

enum class AxisMode { directed, undirected };

inline const char* to_string(AxisMode m) { return m == AxisMode::directed ? "directed" : "undirected"; }
inline AxisMode parse_axis_mode(const std::string& s) {
  if (s == "directed") return AxisMode::directed;
  if (s == "undirected") return AxisMode::undirected;
  throw ParseError("axis mode must be directed or undirected, got '" + s + "'");
}

/// Distance from `gt` to its nearest prediction, converted to model units.
/// Both inputs are in the normalized frame.
inline double landmark_error(std::span<const Vec3> pred, const Vec3& gt, const NormalizationTransform& t) {
  if (pred.empty()) throw EmptyPrediction("no predicted landmarks to match against");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pred) best = std::min(best, (p - gt).norm());
  return t.length_to_model(best);
}

/// One error per GT landmark; each is matched to the nearest prediction of
/// the same kind.
struct LandmarkErrors {
  std::vector<LandmarkKind> kinds;
  std::vector<double> errors_mm;
  std::array<std::size_t, 4> unmatched_predictions{};
};

inline LandmarkErrors landmark_errors(const LandmarkSet& pred, const LandmarkSet& gt,
                                      const NormalizationTransform& t) {
  LandmarkErrors out;
  for (auto kind : kLandmarkKinds) {
    const auto g = gt.positions(kind);
    const auto p = pred.positions(kind);
    if (g.empty()) continue;
    if (p.empty()) {
      throw EmptyPrediction("no predicted " + std::string(to_string(kind)) + " landmarks");
    }
    std::vector<bool> used(p.size(), false);
    for (const auto& q : g) {
      out.kinds.push_back(kind);
      out.errors_mm.push_back(landmark_error(p, q, t));
      std::size_t best = 0;
      for (std::size_t i = 1; i < p.size(); ++i)
        if ((p[i] - q).norm() < (p[best] - q).norm()) best = i;
      used[best] = true;
    }
    out.unmatched_predictions[static_cast<std::size_t>(index_of(kind))] =
        static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  }
  return out;
}

/// Percentage of errors at or below `threshold`.
inline double success_rate(std::span<const double> errors, double threshold) {
  if (errors.empty()) throw EmptyInput("success rate of an empty error list");
  if (!(threshold > 0.0)) throw InvalidArgument("success-rate threshold must be positive");
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= threshold; });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
}

inline double success_rate_points(std::span<const double> errors_mm, double r_mm) {
  return success_rate(errors_mm, r_mm);
}
inline double success_rate_axes(std::span<const double> errors_deg, double dg) {
  return success_rate(errors_deg, dg);
}

/// Angle between two unit directions in degrees; the undirected mode
/// ignores sign.
inline double axis_error(const Vec3& pred_dir, const Vec3& gt_dir, AxisMode mode = AxisMode::directed) {
  double c = pred_dir.dot(gt_dir);
  c = mode == AxisMode::directed ? std::clamp(c, -1.0, 1.0) : std::clamp(std::abs(c), 0.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

inline double axis_error(const ToothAxis& pred, const ToothAxis& gt, AxisMode mode = AxisMode::directed) {
  return axis_error(pred.direction, gt.direction, mode);
}

/// Evaluation of one tooth.
struct ToothResult {
  std::string tooth_id;
  std::vector<LandmarkKind> landmark_kinds;
  std::vector<double> landmark_errors_mm;
  std::vector<AxisKind> axis_kinds;
  std::vector<double> axis_errors_deg;
  std::array<std::size_t, 4> unmatched_predictions{};
};

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  // bin i covers [i w, (i+1) w); the last bin is closed
};

inline Histogram make_histogram(std::span<const double> values, double bin_width) {
  Histogram h{bin_width, {}};
  if (values.empty()) return h;
  const double top = *std::max_element(values.begin(), values.end());
  const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(top / bin_width)) + 1);
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>(std::floor(std::max(v, 0.0) / bin_width));
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

struct KindSummary {
  std::size_t count = 0;
  double mean = 0.0;
  std::vector<double> success;  // one per threshold
};

struct EvalReport {
  AxisMode axis_mode = AxisMode::directed;
  std::size_t tooth_count = 0;
  std::map<std::string, KindSummary> landmarks;  // per kind plus "all"
  std::map<std::string, KindSummary> axes;
  Histogram landmark_histogram;
  Histogram axis_histogram;
  std::vector<ToothResult> teeth;
};

namespace metrics_detail {

inline KindSummary summarize(std::span<const double> values, std::span<const double> thresholds) {
  KindSummary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  for (double t : thresholds) s.success.push_back(success_rate(values, t));
  return s;
}

}  // namespace metrics_detail

inline EvalReport build_report(std::span<const ToothResult> teeth, AxisMode mode) {
  if (teeth.empty()) throw EmptyInput("no teeth to report on");
  EvalReport r;
  r.axis_mode = mode;
  r.tooth_count = teeth.size();
  r.teeth.assign(teeth.begin(), teeth.end());
  std::map<std::string, std::vector<double>> lm, ax;
  for (const auto& t : teeth) {
    for (std::size_t i = 0; i < t.landmark_errors_mm.size(); ++i) {
      lm[std::string(to_string(t.landmark_kinds[i]))].push_back(t.landmark_errors_mm[i]);
      lm["all"].push_back(t.landmark_errors_mm[i]);
    }
    for (std::size_t i = 0; i < t.axis_errors_deg.size(); ++i) {
      ax[std::string(to_string(t.axis_kinds[i]))].push_back(t.axis_errors_deg[i]);
      ax["all"].push_back(t.axis_errors_deg[i]);
    }
  }
  if (lm.empty() && ax.empty()) throw EmptyInput("no landmark or axis errors to report");
  for (const auto& [k, v] : lm) r.landmarks[k] = metrics_detail::summarize(v, kPointThresholdsMm);
  for (const auto& [k, v] : ax) r.axes[k] = metrics_detail::summarize(v, kAxisThresholdsDeg);
  r.landmark_histogram = make_histogram(lm["all"], kPointBinMm);
  r.axis_histogram = make_histogram(ax["all"], kAxisBinDeg);
  return r;
}

namespace metrics_detail {

inline std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::vector<std::string> ordered_keys(const std::map<std::string, KindSummary>& m, bool landmarks) {
  std::vector<std::string> keys;
  if (landmarks) {
    for (auto k : kLandmarkKinds)
      if (m.count(std::string(to_string(k)))) keys.emplace_back(to_string(k));
  } else {
    for (auto k : kAxisKinds)
      if (m.count(std::string(to_string(k)))) keys.emplace_back(to_string(k));
  }
  if (m.count("all")) keys.emplace_back("all");
  return keys;
}

}  // namespace metrics_detail

/// Key-value header followed by the two success-rate tables.
inline void write_report(std::ostream& out, const EvalReport& r) {
  using metrics_detail::fmt;
  out << "teeth = " << r.tooth_count << '\n';
  out << "axis_mode = " << to_string(r.axis_mode) << '\n';
  out << "landmark_units = mm\n";
  out << "axis_units = degrees\n\n";
  out << "[landmarks]\n";
  out << "kind,count,mean_mm";
  for (double t : kPointThresholdsMm) out << ",SR@" << fmt(t, "%.1f") << "mm";
  out << '\n';
  for (const auto& k : metrics_detail::ordered_keys(r.landmarks, true)) {
    const auto& s = r.landmarks.at(k);
    out << k << ',' << s.count << ',' << fmt(s.mean);
    for (double v : s.success) out << ',' << fmt(v, "%.2f");
    out << '\n';
  }
  out << "\n[axes]\n";
  out << "kind,count,mean_deg";
  for (double t : kAxisThresholdsDeg) out << ",SR@" << fmt(t, "%.0f") << "deg";
  out << '\n';
  for (const auto& k : metrics_detail::ordered_keys(r.axes, false)) {
    const auto& s = r.axes.at(k);
    out << k << ',' << s.count << ',' << fmt(s.mean);
    for (double v : s.success) out << ',' << fmt(v, "%.2f");
    out << '\n';
  }
  std::size_t unmatched = 0;
  for (const auto& t : r.teeth)
    for (auto u : t.unmatched_predictions) unmatched += u;
  out << "\nunmatched_predictions = " << unmatched << '\n';
}

/// One row per tooth: mean landmark error, mean axis error, then each kind.
inline void write_per_tooth_csv(std::ostream& out, const EvalReport& r) {
  using metrics_detail::fmt;
  out << "tooth_id,landmark_count,mean_landmark_mm,axis_count,mean_axis_deg";
  for (auto k : kLandmarkKinds) out << ",mean_" << to_string(k) << "_mm";
  for (auto k : kAxisKinds) out << ',' << to_string(k) << "_deg";
  out << '\n';
  for (const auto& t : r.teeth) {
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
    };
    out << t.tooth_id << ',' << t.landmark_errors_mm.size() << ',' << fmt(mean(t.landmark_errors_mm)) << ','
        << t.axis_errors_deg.size() << ',' << fmt(mean(t.axis_errors_deg));
    for (auto k : kLandmarkKinds) {
      std::vector<double> v;
      for (std::size_t i = 0; i < t.landmark_kinds.size(); ++i)
        if (t.landmark_kinds[i] == k) v.push_back(t.landmark_errors_mm[i]);
      out << ',' << (v.empty() ? "" : fmt(mean(v)));
    }
    for (auto k : kAxisKinds) {
      std::string cell;
      for (std::size_t i = 0; i < t.axis_kinds.size(); ++i)
        if (t.axis_kinds[i] == k) cell = fmt(t.axis_errors_deg[i]);
      out << ',' << cell;
    }
    out << '\n';
  }
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h, const char* unit) {
  using metrics_detail::fmt;
  out << "bin_start_" << unit << ",bin_end_" << unit << ",count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << fmt(static_cast<double>(i) * h.bin_width, "%.4f") << ','
        << fmt(static_cast<double>(i + 1) * h.bin_width, "%.4f") << ',' << h.counts[i] << '\n';
  }
}

}  // namespace densefield
