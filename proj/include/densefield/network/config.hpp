#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "densefield/error.hpp"

namespace densefield::net {

enum class AttentionPairing { coarse_to_fine, none };

/// Hyperparameters of the multi-scale forward pass. Lengths are in
/// normalized (unit-ball) units.
struct NetworkConfig {
  std::array<int, 3> sample_counts{512, 128, 32};
  std::array<double, 3> radii{0.1, 0.2, 0.4};
  int neighbors = 32;
  int embed_width = 64;
  std::vector<int> mlp_widths{64, 64};
  int attention_width = 32;
  std::vector<int> head_widths{192, 64, 32};
  AttentionPairing pairing = AttentionPairing::coarse_to_fine;
  double norm_epsilon = 1e-5;

  static constexpr int kInputChannels = 6;  // xyz + normal
  static constexpr int kLandmarkOutputs = 4;
  static constexpr int kAxisOutputs = 12;

  int scale_channels() const { return mlp_widths.back(); }
  int latent_width() const { return 3 * scale_channels(); }
};

inline void validate(const NetworkConfig& c) {
  for (int m : c.sample_counts)
    if (m < 1) throw InvalidArgument("sample counts must be positive");
  for (double r : c.radii)
    if (!(r > 0.0)) throw InvalidArgument("radii must be positive");
  if (c.neighbors < 1) throw InvalidArgument("neighbors must be at least 1");
  if (c.embed_width < 1 || c.attention_width < 1) throw InvalidArgument("widths must be positive");
  if (c.mlp_widths.empty() || c.head_widths.empty()) throw InvalidArgument("layer lists cannot be empty");
  for (int w : c.mlp_widths)
    if (w < 1) throw InvalidArgument("mlp widths must be positive");
  for (int w : c.head_widths)
    if (w < 1) throw InvalidArgument("head widths must be positive");
  if (!(c.norm_epsilon > 0.0)) throw InvalidArgument("norm_epsilon must be positive");
}

namespace config_detail {

template <typename T>
std::string join(const T& values) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& v : values) {
    if (!first) os << ", ";
    os << v;
    first = false;
  }
  return os.str();
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& value, const std::string& key) {
  std::vector<T> out;
  std::istringstream is(value);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    cell = trim(cell);
    std::istringstream cs(cell);
    T v{};
    if (!(cs >> v) || !cs.eof()) throw ParseError("config key '" + key + "': bad value '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("config key '" + key + "' is empty");
  return out;
}

}  // namespace config_detail

/// Canonical key-value text; it is also the input of the checksum.
inline std::string to_text(const NetworkConfig& c) {
  using config_detail::join;
  std::ostringstream os;
  os.precision(17);
  os << "sample_counts = " << join(c.sample_counts) << '\n'
     << "radii = " << join(c.radii) << '\n'
     << "neighbors = " << c.neighbors << '\n'
     << "embed_width = " << c.embed_width << '\n'
     << "mlp_widths = " << join(c.mlp_widths) << '\n'
     << "attention_width = " << c.attention_width << '\n'
     << "head_widths = " << join(c.head_widths) << '\n'
     << "attention_pairing = "
     << (c.pairing == AttentionPairing::coarse_to_fine ? "coarse_to_fine" : "none") << '\n'
     << "norm_epsilon = " << c.norm_epsilon << '\n';
  return os.str();
}

/// FNV-1a over the canonical text, as 16 hex digits.
inline std::string checksum(const NetworkConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Parses `key = value` lines; '#' starts a comment. Keys not present keep
/// their defaults.
inline NetworkConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  using namespace config_detail;
  NetworkConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto one_int = [&] {
      auto v = parse_list<int>(value, key);
      if (v.size() != 1) throw ParseError("config key '" + key + "' takes one value");
      return v[0];
    };
    if (key == "sample_counts") {
      auto v = parse_list<int>(value, key);
      if (v.size() != 3) throw ParseError("sample_counts needs 3 values");
      std::copy(v.begin(), v.end(), c.sample_counts.begin());
    } else if (key == "radii") {
      auto v = parse_list<double>(value, key);
      if (v.size() != 3) throw ParseError("radii needs 3 values");
      std::copy(v.begin(), v.end(), c.radii.begin());
    } else if (key == "neighbors") {
      c.neighbors = one_int();
    } else if (key == "embed_width") {
      c.embed_width = one_int();
    } else if (key == "mlp_widths") {
      c.mlp_widths = parse_list<int>(value, key);
    } else if (key == "attention_width") {
      c.attention_width = one_int();
    } else if (key == "head_widths") {
      c.head_widths = parse_list<int>(value, key);
    } else if (key == "attention_pairing") {
      if (value == "coarse_to_fine") c.pairing = AttentionPairing::coarse_to_fine;
      else if (value == "none") c.pairing = AttentionPairing::none;
      else throw ParseError("attention_pairing must be coarse_to_fine or none");
    } else if (key == "norm_epsilon") {
      auto v = parse_list<double>(value, key);
      if (v.size() != 1) throw ParseError("norm_epsilon takes one value");
      c.norm_epsilon = v[0];
    } else {
      throw ParseError(name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

inline NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path.string());
  return parse_config(in, path.string());
}

}  // namespace densefield::net
