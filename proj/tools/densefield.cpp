// densefield command-line driver: synth, encode, forward, decode, eval,
// export-colored. Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "densefield/densefield.hpp"

namespace fs = std::filesystem;
using namespace densefield;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IOError("cannot create output directory " + dir.string());
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index writes
/// its own files, so the result does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw IOError(e);
}

std::string strip_suffix(std::string s, const std::string& suffix) {
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
    s.resize(s.size() - suffix.size());
  }
  return s;
}

// ---- synth ---------------------------------------------------------------

SyntheticToothSpec spec_from_json(const nlohmann::json& j) {
  SyntheticToothSpec s = default_spec(j.at("seed").get<std::uint64_t>());
  if (j.contains("category")) {
    s.category = parse_category(j.at("category").get<std::string>());
    if (!j.contains("cusp_count")) {
      constexpr int cusps[] = {1, 1, 2, 4};
      s.cusp_count = cusps[static_cast<int>(s.category)];
    }
  }
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  if (j.contains("cusp_count")) s.cusp_count = j.at("cusp_count").get<int>();
  num("half_width", s.half_width);
  num("half_depth", s.half_depth);
  num("crown_height", s.crown_height);
  num("root_ratio", s.root_ratio);
  num("mesial_taper", s.mesial_taper);
  num("bump_amplitude", s.bump_amplitude);
  num("bump_width", s.bump_width);
  num("tilt_x_deg", s.tilt_x_deg);
  num("tilt_y_deg", s.tilt_y_deg);
  if (j.contains("resolution")) s.resolution = j.at("resolution").get<int>();
  return s;
}

struct SynthArgs {
  std::string out;
  std::string spec_file;
  int count = 40;
};

void cmd_synth(const SynthArgs& a, std::uint64_t seed, int jobs) {
  std::vector<SyntheticToothSpec> specs;
  if (!a.spec_file.empty()) {
    const auto j = annotation_detail::read_json(a.spec_file);
    try {
      for (const auto& e : j.at("teeth")) specs.push_back(spec_from_json(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(a.spec_file + ": " + e.what());
    }
  } else {
    if (a.count < 1) throw UsageError("--count must be positive");
    for (int i = 0; i < a.count; ++i) specs.push_back(default_spec(seed + static_cast<std::uint64_t>(i)));
  }
  for (const auto& s : specs) validate(s);
  ensure_dir(a.out);
  const fs::path out(a.out);
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    const auto tooth = generate_tooth(specs[i]);
    const std::string id = tooth_id_for_seed(specs[i].seed);
    save_obj(out / (id + ".obj"), tooth.mesh);
    save_annotation(out / (id + ".json"), annotation_of(tooth, id));
  });
  nlohmann::json manifest;
  manifest["count"] = specs.size();
  auto& teeth = manifest["teeth"] = nlohmann::json::array();
  for (const auto& s : specs) {
    const std::string id = tooth_id_for_seed(s.seed);
    teeth.push_back({{"tooth_id", id},
                     {"seed", s.seed},
                     {"category", to_string(s.category)},
                     {"cusp_count", s.cusp_count},
                     {"mesh", id + ".obj"},
                     {"annotation", id + ".json"}});
  }
  annotation_detail::write_json(out / "manifest.json", manifest);
}

// ---- encode --------------------------------------------------------------

struct EncodeArgs {
  std::string mesh, annotation, out;
  double sigma = kDefaultSigma;
  std::size_t points = kDefaultPointCount;
};

void cmd_encode(const EncodeArgs& a, std::uint64_t seed) {
  if (!(a.sigma > 0.0)) throw UsageError("--sigma must be positive");
  if (a.points < 1) throw UsageError("--points must be positive");
  const auto mesh = load_mesh(a.mesh);
  const auto ann = load_annotation(a.annotation);
  const auto enc = encode_tooth(mesh, ann, a.points, a.sigma, seed);
  ensure_dir(a.out);
  const fs::path out(a.out);
  save_cloud_csv(out / (ann.tooth_id + "_cloud.csv"), enc.cloud);
  save_distance_csv(out / (ann.tooth_id + "_distance.csv"), enc.distance);
  save_vector_csv(out / (ann.tooth_id + "_vectors.csv"), enc.vectors);
  save_transform(out / (ann.tooth_id + "_transform.json"), ann.tooth_id, enc.transform);
}

// ---- forward -------------------------------------------------------------

struct ForwardArgs {
  std::string cloud, out, weights, config, dump_weights, tooth_id;
};

void cmd_forward(const ForwardArgs& a, std::uint64_t seed) {
  const net::NetworkConfig cfg = a.config.empty() ? net::NetworkConfig{} : net::load_config(a.config);
  const auto weights = a.weights.empty() ? net::NetworkWeights::random(cfg, seed) : net::NetworkWeights::load(a.weights, cfg);
  const auto cloud = load_cloud_csv(a.cloud);
  const std::string id =
      a.tooth_id.empty() ? strip_suffix(fs::path(a.cloud).stem().string(), "_cloud") : a.tooth_id;
  net::ForwardTrace trace;
  const auto pred = net::forward(cloud, weights, cfg, seed, &trace);
  ensure_dir(a.out);
  const fs::path out(a.out);
  save_distance_csv(out / (id + "_pred_distance.csv"), DistanceField{pred.distance_fields, kDefaultSigma});
  save_vector_csv(out / (id + "_pred_vectors.csv"), ProjectionVectorField{pred.projection_vectors});
  nlohmann::json meta;
  meta["tooth_id"] = id;
  meta["points"] = cloud.size();
  meta["seed"] = seed;
  meta["weights"] = a.weights.empty() ? "random" : "file";
  meta["norm_mode"] = net::to_string(weights.norm_mode());
  meta["config_checksum"] = net::checksum(cfg);
  meta["sampled_counts"] = trace.sampled_counts;
  meta["distance_shape"] = pred.distance_shape();
  meta["vector_shape"] = pred.vector_shape();
  annotation_detail::write_json(out / (id + "_forward.json"), meta);
  if (!a.dump_weights.empty()) weights.save(a.dump_weights);
}

// ---- decode --------------------------------------------------------------

struct DecodeArgs {
  std::string cloud, distance, vectors, out, counts, counts_from, tooth_id;
  double threshold = kDefaultThreshold;
};

LandmarkCounts parse_counts(const std::string& text) {
  LandmarkCounts c{};
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--counts expects kind=n pairs, got '" + item + "'");
    LandmarkKind kind;
    try {
      kind = parse_landmark_kind(item.substr(0, eq));
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
    const std::string num = item.substr(eq + 1);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("--counts: bad count '" + num + "'");
    }
    c[static_cast<std::size_t>(index_of(kind))] = std::stoul(num);
  }
  return c;
}

void cmd_decode(const DecodeArgs& a, std::uint64_t seed) {
  if (a.counts.empty() == a.counts_from.empty()) {
    throw UsageError("decode needs exactly one of --counts or --counts-from");
  }
  if (!(a.threshold > 0.0 && a.threshold < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
  LandmarkCounts counts{};
  std::string id = a.tooth_id;
  if (!a.counts.empty()) {
    counts = parse_counts(a.counts);
  } else {
    const auto ann = load_annotation(a.counts_from);
    counts = counts_of(ann.landmarks);
    if (id.empty()) id = ann.tooth_id;
  }
  if (id.empty()) id = strip_suffix(fs::path(a.cloud).stem().string(), "_cloud");
  const auto cloud = load_cloud_csv(a.cloud);
  const auto distance = load_distance_csv(a.distance);
  const auto vectors = load_vector_csv(a.vectors);
  DecodeOptions opt;
  opt.threshold = a.threshold;
  const auto decoded = decode_tooth(id, cloud, distance, vectors, counts, seed, opt);
  for (const auto& w : decoded.warnings) std::cerr << "warning: " << w << '\n';
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  save_decoded(out, decoded);
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> decoded, annotations, transforms;
  std::string out;
  std::string axis_mode = "directed";
};

void cmd_eval(const EvalArgs& a) {
  const AxisMode mode = parse_axis_mode(a.axis_mode);
  std::map<std::string, ToothAnnotation> gt;
  for (const auto& p : a.annotations) {
    auto ann = load_annotation(p);
    gt[ann.tooth_id] = std::move(ann);
  }
  std::map<std::string, NormalizationTransform> tf;
  for (const auto& p : a.transforms) {
    auto t = load_transform(p);
    tf[t.tooth_id] = t.transform;
  }
  std::vector<ToothResult> results;
  for (const auto& p : a.decoded) {
    const auto d = load_decoded(p);
    auto g = gt.find(d.tooth_id);
    auto t = tf.find(d.tooth_id);
    if (g == gt.end()) throw InvalidArgument("no annotation for tooth '" + d.tooth_id + "'");
    if (t == tf.end()) throw InvalidArgument("no transform for tooth '" + d.tooth_id + "'");
    results.push_back(evaluate_tooth(d, g->second, t->second, mode));
  }
  std::sort(results.begin(), results.end(),
            [](const ToothResult& x, const ToothResult& y) { return x.tooth_id < y.tooth_id; });
  const auto report = build_report(results, mode);
  ensure_dir(a.out);
  const fs::path out(a.out);
  auto open = [](const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw IOError("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(out / "report.txt");
    write_report(f, report);
  }
  {
    auto f = open(out / "per_tooth.csv");
    write_per_tooth_csv(f, report);
  }
  {
    auto f = open(out / "landmark_histogram.csv");
    write_histogram_csv(f, report.landmark_histogram, "mm");
  }
  {
    auto f = open(out / "axis_histogram.csv");
    write_histogram_csv(f, report.axis_histogram, "deg");
  }
}

// ---- export-colored ------------------------------------------------------

struct ExportArgs {
  std::string cloud, field, column = "CO", out;
};

void cmd_export(const ExportArgs& a) {
  const auto cloud = load_cloud_csv(a.cloud);
  const auto table = load_csv(a.field);
  const auto it = std::find(table.header.begin(), table.header.end(), a.column);
  if (it == table.header.end()) throw UsageError("column '" + a.column + "' not in " + a.field);
  const auto col = static_cast<std::size_t>(it - table.header.begin());
  std::vector<double> values;
  for (const auto& r : table.rows) values.push_back(r[col]);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  std::ofstream f(out);
  if (!f) throw IOError("cannot write " + out.string());
  write_colored_ply(f, cloud, values);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-wise field coding of tooth landmarks and axes"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--seed", seed, "Seed threaded into every stochastic step");
  app.add_option("--jobs", jobs, "Worker threads across independent teeth")->check(CLI::Range(1, 64));

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic tooth corpus");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--count", sa.count, "Number of teeth (seeds seed..seed+count-1)");
  synth->add_option("--spec", sa.spec_file, "JSON file {\"teeth\": [{\"seed\": n, ...}]}");

  EncodeArgs ea;
  auto* encode = app.add_subcommand("encode", "Sample a mesh and encode its annotation as dense fields");
  encode->add_option("--mesh", ea.mesh, "OBJ or ASCII PLY mesh")->required();
  encode->add_option("--annotation", ea.annotation, "Annotation JSON")->required();
  encode->add_option("--out", ea.out, "Output directory")->required();
  encode->add_option("--sigma", ea.sigma, "Gaussian width in normalized units");
  encode->add_option("--points", ea.points, "Surface samples");

  ForwardArgs fa;
  auto* forward = app.add_subcommand("forward", "Run the network on a cloud");
  forward->add_option("--cloud", fa.cloud, "Cloud CSV")->required();
  forward->add_option("--out", fa.out, "Output directory")->required();
  forward->add_option("--weights", fa.weights, "Weights JSON (seeded random when absent)");
  forward->add_option("--config", fa.config, "Network config file");
  forward->add_option("--dump-weights", fa.dump_weights, "Write the weights in use to this file");
  forward->add_option("--tooth-id", fa.tooth_id, "Output file prefix");

  DecodeArgs da;
  auto* decode = app.add_subcommand("decode", "Recover landmarks and axes from fields");
  decode->add_option("--cloud", da.cloud, "Cloud CSV")->required();
  decode->add_option("--distance", da.distance, "Distance-field CSV")->required();
  decode->add_option("--vectors", da.vectors, "Vector-field CSV")->required();
  decode->add_option("--out", da.out, "Decoded JSON path")->required();
  decode->add_option("--counts", da.counts, "Landmark counts, e.g. CO=2,CU=4,FA=1,OC=1");
  decode->add_option("--counts-from", da.counts_from, "Take counts from an annotation JSON");
  decode->add_option("--threshold", da.threshold, "Field threshold before clustering");
  decode->add_option("--tooth-id", da.tooth_id, "Tooth id recorded in the output");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Score decoded results against annotations");
  eval->add_option("--decoded", va.decoded, "Decoded JSON (repeatable)")->required();
  eval->add_option("--annotation", va.annotations, "Annotation JSON (repeatable)")->required();
  eval->add_option("--transform", va.transforms, "Transform JSON (repeatable)")->required();
  eval->add_option("--out", va.out, "Output directory")->required();
  eval->add_option("--axis-mode", va.axis_mode, "directed or undirected")
      ->check(CLI::IsMember({"directed", "undirected"}));

  ExportArgs xa;
  auto* exp = app.add_subcommand("export-colored", "Write a field column as a colored PLY");
  exp->add_option("--cloud", xa.cloud, "Cloud CSV")->required();
  exp->add_option("--field", xa.field, "Field CSV")->required();
  exp->add_option("--column", xa.column, "Column name");
  exp->add_option("--out", xa.out, "PLY path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) cmd_synth(sa, seed, jobs);
    else if (*encode) cmd_encode(ea, seed);
    else if (*forward) cmd_forward(fa, seed);
    else if (*decode) cmd_decode(da, seed);
    else if (*eval) cmd_eval(va);
    else if (*exp) cmd_export(xa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
