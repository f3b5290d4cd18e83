#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "densefield/error.hpp"
#include "densefield/network/config.hpp"

namespace densefield::net {

/// How normalization layers obtain their statistics: stored running
/// estimates, or the statistics of the rows being evaluated.
enum class NormMode { running, instance };

inline const char* to_string(NormMode m) { return m == NormMode::running ? "running" : "instance"; }

using Shape = std::pair<Eigen::Index, Eigen::Index>;

namespace weights_detail {

inline void add_linear(std::map<std::string, Shape>& s, const std::string& p, Eigen::Index in, Eigen::Index out) {
  s[p + ".weight"] = {in, out};
  s[p + ".bias"] = {1, out};
}

inline void add_lbr(std::map<std::string, Shape>& s, const std::string& p, Eigen::Index in, Eigen::Index out) {
  add_linear(s, p, in, out);
  for (const char* n : {".gamma", ".beta", ".running_mean", ".running_var"}) s[p + n] = {1, out};
}

inline std::string shape_text(const Shape& s) {
  return "[" + std::to_string(s.first) + ", " + std::to_string(s.second) + "]";
}

}  // namespace weights_detail

inline std::string scale_prefix(int s) { return "scale" + std::to_string(s); }
inline std::string attention_prefix(int s) { return "attn" + std::to_string(s); }

/// Every tensor the architecture needs, by name, with its shape.
inline std::map<std::string, Shape> expected_shapes(const NetworkConfig& c) {
  using namespace weights_detail;
  std::map<std::string, Shape> s;
  for (int sc = 0; sc < 3; ++sc) {
    const std::string p = scale_prefix(sc);
    const Eigen::Index in = sc == 0 ? NetworkConfig::kInputChannels : c.scale_channels();
    add_linear(s, p + ".embed", in, c.embed_width);
    Eigen::Index width = 3 * c.embed_width;
    for (std::size_t l = 0; l < c.mlp_widths.size(); ++l) {
      add_lbr(s, p + ".mlp" + std::to_string(l), width, c.mlp_widths[l]);
      width = c.mlp_widths[l];
    }
  }
  if (c.pairing == AttentionPairing::coarse_to_fine) {
    for (int sc = 1; sc < 3; ++sc) {
      const std::string p = attention_prefix(sc);
      add_linear(s, p + ".query", c.scale_channels(), c.attention_width);
      add_linear(s, p + ".key", c.scale_channels(), c.attention_width);
      add_linear(s, p + ".value", c.scale_channels(), c.scale_channels());
    }
  }
  for (const std::string head : {"head.landmark", "head.axis"}) {
    Eigen::Index width = c.latent_width() + NetworkConfig::kInputChannels;
    for (std::size_t l = 0; l < c.head_widths.size(); ++l) {
      add_lbr(s, head + ".lbr" + std::to_string(l), width, c.head_widths[l]);
      width = c.head_widths[l];
    }
    add_linear(s, head + ".out", width,
               head == "head.landmark" ? NetworkConfig::kLandmarkOutputs : NetworkConfig::kAxisOutputs);
  }
  return s;
}

/// Named tensors of the forward pass plus the normalization mode and the
/// checksum of the architecture they were built for.
class NetworkWeights {
 public:
  NetworkWeights() = default;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit
  /// scales; evaluated with instance statistics.
  static NetworkWeights random(const NetworkConfig& c, std::uint64_t seed) {
    validate(c);
    NetworkWeights w;
    w.mode_ = NormMode::instance;
    w.checksum_ = checksum(c);
    std::mt19937_64 rng(seed);
    for (const auto& [name, shape] : expected_shapes(c)) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(shape.first, shape.second);
      if (ends_with(name, ".weight")) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(shape.first));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
          for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = u(rng);
      } else if (ends_with(name, ".gamma") || ends_with(name, ".running_var")) {
        t.setOnes();
      }
      w.tensors_.emplace(name, std::move(t));
    }
    return w;
  }

  /// Every parameter zero (running variances stay one).
  static NetworkWeights zeros(const NetworkConfig& c) {
    validate(c);
    NetworkWeights w;
    w.mode_ = NormMode::instance;
    w.checksum_ = checksum(c);
    for (const auto& [name, shape] : expected_shapes(c)) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(shape.first, shape.second);
      if (ends_with(name, ".running_var")) t.setOnes();
      w.tensors_.emplace(name, std::move(t));
    }
    return w;
  }

  const Eigen::MatrixXd& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ShapeMismatch("missing tensor '" + name + "'");
    return it->second;
  }
  Eigen::MatrixXd& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ShapeMismatch("missing tensor '" + name + "'");
    return it->second;
  }

  NormMode norm_mode() const { return mode_; }
  void set_norm_mode(NormMode m) { mode_ = m; }
  const std::string& config_checksum() const { return checksum_; }
  const std::map<std::string, Eigen::MatrixXd>& tensors() const { return tensors_; }

  /// Throws ShapeMismatch naming the first tensor that is missing, extra,
  /// mis-shaped or non-finite.
  void check(const NetworkConfig& c) const {
    using weights_detail::shape_text;
    const auto shapes = expected_shapes(c);
    for (const auto& [name, shape] : shapes) {
      auto it = tensors_.find(name);
      if (it == tensors_.end()) throw ShapeMismatch("missing tensor '" + name + "'");
      const Shape got{it->second.rows(), it->second.cols()};
      if (got != shape) {
        throw ShapeMismatch("tensor '" + name + "' has shape " + shape_text(got) + ", expected " +
                            shape_text(shape));
      }
      if (!it->second.allFinite()) throw ShapeMismatch("tensor '" + name + "' has non-finite entries");
    }
    for (const auto& [name, t] : tensors_) {
      if (!shapes.count(name)) throw ShapeMismatch("unexpected tensor '" + name + "'");
    }
    if (checksum_ != checksum(c)) {
      throw ShapeMismatch("weights were built for config " + checksum_ + ", current config is " +
                          checksum(c));
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "densefield-weights";
    j["version"] = 1;
    j["norm_mode"] = to_string(mode_);
    j["config_checksum"] = checksum_;
    auto& arr = j["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : tensors_) {
      std::vector<double> data;
      data.reserve(static_cast<std::size_t>(t.size()));
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index k = 0; k < t.cols(); ++k) data.push_back(t(i, k));
      arr.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}, {"data", std::move(data)}});
    }
    return j;
  }

  static NetworkWeights from_json(const nlohmann::json& j, const NetworkConfig& c) {
    NetworkWeights w;
    try {
      if (j.at("format").get<std::string>() != "densefield-weights") {
        throw ParseError("not a densefield weights file");
      }
      const auto mode = j.at("norm_mode").get<std::string>();
      if (mode == "running") w.mode_ = NormMode::running;
      else if (mode == "instance") w.mode_ = NormMode::instance;
      else throw ParseError("unknown norm_mode '" + mode + "'");
      w.checksum_ = j.at("config_checksum").get<std::string>();
      for (const auto& t : j.at("tensors")) {
        const auto name = t.at("name").get<std::string>();
        const auto shape = t.at("shape").get<std::vector<long long>>();
        const auto data = t.at("data").get<std::vector<double>>();
        if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
            static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
          throw ShapeMismatch("tensor '" + name + "' shape header does not match its data length");
        }
        Eigen::MatrixXd m(shape[0], shape[1]);
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = data[static_cast<std::size_t>(i * m.cols() + k)];
        w.tensors_[name] = std::move(m);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed weights file: ") + e.what());
    }
    w.check(c);
    return w;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IOError("cannot write " + path.string());
    out << to_json().dump() << '\n';
  }

  static NetworkWeights load(const std::filesystem::path& path, const NetworkConfig& c) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    return from_json(j, c);
  }

 private:
  static bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  }

  std::map<std::string, Eigen::MatrixXd> tensors_;
  NormMode mode_ = NormMode::instance;
  std::string checksum_;
};

}  // namespace densefield::net
