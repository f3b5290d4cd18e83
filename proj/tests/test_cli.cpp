#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path r = [] {
    auto p = fs::temp_directory_path() / "densefield_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return r;
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args) {
  const auto err = root() / "stderr.txt";
  const std::string cmd = std::string(DENSEFIELD_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

std::string p(const fs::path& x) { return x.string(); }

// synth -> encode for tooth_000, shared by the later cases.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(cli("synth --count 2 --out " + p(corpus())).code, 0);
    ASSERT_EQ(cli("encode --mesh " + p(corpus() / "tooth_000.obj") + " --annotation " +
                  p(corpus() / "tooth_000.json") + " --out " + p(fields()))
                  .code,
              0);
  }
  static fs::path corpus() { return root() / "corpus"; }
  static fs::path fields() { return root() / "fields"; }
  static fs::path f(const std::string& name) { return fields() / ("tooth_000_" + name); }
};

}  // namespace

TEST(Cli, DefaultCorpusContract) {
  const auto out = root() / "default_corpus";
  ASSERT_EQ(cli("synth --jobs 2 --out " + p(out)).code, 0);
  std::size_t obj = 0, json = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.path().extension() == ".obj") ++obj;
    if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") ++json;
  }
  EXPECT_EQ(obj, 40u);
  EXPECT_EQ(json, 40u);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["teeth"].size(), 40u);
}

TEST(Cli, SynthIsByteIdenticalAndSeeded) {
  ASSERT_EQ(cli("--seed 5 synth --count 2 --out " + p(root() / "s1")).code, 0);
  ASSERT_EQ(cli("--seed 5 synth --count 2 --out " + p(root() / "s2")).code, 0);
  EXPECT_EQ(slurp(root() / "s1" / "tooth_005.obj"), slurp(root() / "s2" / "tooth_005.obj"));
  EXPECT_EQ(slurp(root() / "s1" / "tooth_006.json"), slurp(root() / "s2" / "tooth_006.json"));
  EXPECT_EQ(slurp(root() / "s1" / "manifest.json"), slurp(root() / "s2" / "manifest.json"));
}

TEST(Cli, UsageAndDataErrors) {
  std::ofstream(root() / "plain_file") << "x";
  const auto r = cli("synth --count 1 --out " + p(root() / "plain_file" / "sub"));
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("teleport").code, 1);
  EXPECT_EQ(cli("--jobs 0 synth --out " + p(root() / "x")).code, 1);
  EXPECT_EQ(cli("synth --count 1").code, 1);
}

TEST_F(Pipeline, EncodeWritesFieldsWithSigmaHeader) {
  EXPECT_EQ(line_count(f("cloud.csv")), 2049u);
  EXPECT_EQ(line_count(f("distance.csv")), 2050u);
  EXPECT_EQ(line_count(f("vectors.csv")), 2049u);
  // Seed 30 is the first molar, which carries all four landmark kinds.
  const auto molar = root() / "molar";
  ASSERT_EQ(cli("--seed 30 synth --count 1 --out " + p(molar)).code, 0);
  ASSERT_EQ(cli("--seed 30 encode --mesh " + p(molar / "tooth_030.obj") + " --annotation " + p(molar / "tooth_030.json") +
                " --out " + p(molar))
                .code,
            0);
  std::ifstream in(molar / "tooth_030_distance.csv");
  std::string first, header;
  std::getline(in, first);
  std::getline(in, header);
  EXPECT_EQ(first, "# sigma=0.3");
  EXPECT_EQ(header, "CO,CU,FA,OC");
  // Every kind has a sampled point inside its Gaussian peak.
  std::array<double, 4> max{};
  for (std::string line; std::getline(in, line);) {
    std::stringstream ss(line);
    std::string cell;
    for (int k = 0; k < 4 && std::getline(ss, cell, ','); ++k) max[static_cast<std::size_t>(k)] = std::max(max[static_cast<std::size_t>(k)], std::stod(cell));
  }
  for (double m : max) EXPECT_GE(m, 0.99);
  const auto r = cli("encode --mesh " + p(corpus() / "tooth_000.obj") + " --annotation " + p(root() / "missing.json") +
                     " --out " + p(root() / "nowhere"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing.json"), std::string::npos);
}

TEST_F(Pipeline, ForwardShapesDeterminismAndWeights) {
  const auto out1 = root() / "fwd1", out2 = root() / "fwd2";
  ASSERT_EQ(cli("--seed 3 forward --cloud " + p(f("cloud.csv")) + " --out " + p(out1) + " --dump-weights " +
                p(root() / "w.json"))
                .code,
            0);
  ASSERT_EQ(cli("--seed 3 forward --cloud " + p(f("cloud.csv")) + " --out " + p(out2)).code, 0);
  EXPECT_EQ(line_count(out1 / "tooth_000_pred_distance.csv"), 2050u);
  EXPECT_EQ(line_count(out1 / "tooth_000_pred_vectors.csv"), 2049u);
  EXPECT_EQ(slurp(out1 / "tooth_000_pred_vectors.csv"), slurp(out2 / "tooth_000_pred_vectors.csv"));
  const auto meta = nlohmann::json::parse(slurp(out1 / "tooth_000_forward.json"));
  EXPECT_EQ(meta["seed"], 3);
  EXPECT_EQ(meta["norm_mode"], "instance");

  // Loading the dumped weights reproduces the random-weight outputs.
  const auto out3 = root() / "fwd3";
  ASSERT_EQ(cli("--seed 3 forward --cloud " + p(f("cloud.csv")) + " --weights " + p(root() / "w.json") +
                " --out " + p(out3))
                .code,
            0);
  EXPECT_EQ(slurp(out1 / "tooth_000_pred_distance.csv"), slurp(out3 / "tooth_000_pred_distance.csv"));

  auto w = nlohmann::json::parse(slurp(root() / "w.json"));
  for (auto& t : w["tensors"])
    if (t["name"] == "head.axis.out.weight") {
      t["shape"] = {2, 2};
      t["data"] = {0, 0, 0, 0};
    }
  std::ofstream(root() / "bad_w.json") << w.dump();
  const auto r = cli("forward --cloud " + p(f("cloud.csv")) + " --weights " + p(root() / "bad_w.json") + " --out " +
                     p(root() / "fwd_bad"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("head.axis.out.weight"), std::string::npos);
  std::ofstream(root() / "bad.cfg") << "neighbours = 3\n";
  EXPECT_NE(cli("forward --cloud " + p(f("cloud.csv")) + " --config " + p(root() / "bad.cfg") + " --out " +
                p(root() / "fwd_cfg"))
                .code,
            0);
}

TEST_F(Pipeline, DecodeEvalRoundTrip) {
  const auto dec = root() / "dec" / "tooth_000.json";
  ASSERT_EQ(cli("decode --cloud " + p(f("cloud.csv")) + " --distance " + p(f("distance.csv")) + " --vectors " +
                p(f("vectors.csv")) + " --counts-from " + p(corpus() / "tooth_000.json") + " --out " + p(dec))
                .code,
            0);
  const auto d = nlohmann::json::parse(slurp(dec));
  EXPECT_EQ(d["tooth_id"], "tooth_000");
  EXPECT_EQ(d["axes"].size(), 4u);
  const auto ev = root() / "eval";
  ASSERT_EQ(cli("eval --decoded " + p(dec) + " --annotation " + p(corpus() / "tooth_000.json") + " --transform " +
                p(f("transform.json")) + " --axis-mode undirected --out " + p(ev))
                .code,
            0);
  const auto report = slurp(ev / "report.txt");
  EXPECT_NE(report.find("axis_mode = undirected"), std::string::npos);
  EXPECT_NE(report.find("SR@0.2mm,SR@0.4mm,SR@0.6mm,SR@0.8mm,SR@1.0mm"), std::string::npos);
  EXPECT_NE(report.find("SR@2deg,SR@4deg,SR@6deg,SR@8deg,SR@10deg"), std::string::npos);
  EXPECT_NE(report.find("\nall,"), std::string::npos) << report;
  EXPECT_TRUE(fs::exists(ev / "per_tooth.csv"));
  EXPECT_TRUE(fs::exists(ev / "landmark_histogram.csv"));
  EXPECT_TRUE(fs::exists(ev / "axis_histogram.csv"));

  // Decoded annotation of another tooth id is a data error.
  const auto r = cli("eval --decoded " + p(dec) + " --annotation " + p(corpus() / "tooth_001.json") + " --transform " +
                     p(f("transform.json")) + " --out " + p(root() / "eval_bad"));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Pipeline, EvalOfGroundTruthIsExact) {
  // Decoded file holding the annotation itself, mapped into the normalized frame.
  const auto ann = nlohmann::json::parse(slurp(corpus() / "tooth_000.json"));
  const auto tf = nlohmann::json::parse(slurp(f("transform.json")));
  const double scale = tf["scale"];
  nlohmann::json d = {{"tooth_id", "tooth_000"}, {"frame", "normalized"}, {"landmarks", nlohmann::json::array()},
                      {"axes", nlohmann::json::array()}};
  for (const auto& l : ann["landmarks"]) {
    nlohmann::json q = l;
    for (int i = 0; i < 3; ++i) q["position"][i] = (l["position"][i].get<double>() - tf["center"][i].get<double>()) * scale;
    d["landmarks"].push_back(q);
  }
  for (const auto& a : ann["axes"]) d["axes"].push_back(a);
  std::ofstream(root() / "exact.json") << d.dump();
  const auto ev = root() / "eval_exact";
  ASSERT_EQ(cli("eval --decoded " + p(root() / "exact.json") + " --annotation " + p(corpus() / "tooth_000.json") +
                " --transform " + p(f("transform.json")) + " --out " + p(ev))
                .code,
            0);
  const auto report = slurp(ev / "report.txt");
  EXPECT_NE(report.find("axis_mode = directed"), std::string::npos);
  const auto lm = report.find("[landmarks]"), ax = report.find("[axes]");
  ASSERT_NE(ax, std::string::npos);
  const auto all_lm = report.find("\nall,", lm);
  ASSERT_LT(all_lm, ax);
  const auto row = report.substr(all_lm + 1, report.find('\n', all_lm + 1) - all_lm - 1);
  EXPECT_NE(row.find(",0.000000,100.00,100.00,100.00,100.00,100.00"), std::string::npos) << row;
  const auto all_ax = report.find("\nall,", ax);
  const auto axrow = report.substr(all_ax + 1, report.find('\n', all_ax + 1) - all_ax - 1);
  EXPECT_NE(axrow.find(",100.00,100.00,100.00,100.00,100.00"), std::string::npos) << axrow;
}

TEST_F(Pipeline, DecodeFlagsAndCounts) {
  const std::string base = "decode --cloud " + p(f("cloud.csv")) + " --distance " + p(f("distance.csv")) +
                           " --vectors " + p(f("vectors.csv"));
  EXPECT_EQ(cli(base + " --out " + p(root() / "d_none.json")).code, 1);
  EXPECT_EQ(cli(base + " --counts CO=1 --threshold 1.5 --out " + p(root() / "d_thr.json")).code, 1);
  EXPECT_EQ(cli(base + " --counts XX=1 --out " + p(root() / "d_kind.json")).code, 1);
  ASSERT_EQ(cli(base + " --counts CO=3,CU=2 --threshold 0.7 --out " + p(root() / "d_three.json")).code, 0);
  const auto d = nlohmann::json::parse(slurp(root() / "d_three.json"));
  int co = 0, cu = 0;
  for (const auto& l : d["landmarks"]) {
    co += l["kind"] == "CO";
    cu += l["kind"] == "CU";
  }
  EXPECT_EQ(co, 3);
  EXPECT_EQ(cu, 2);
  EXPECT_EQ(d["tooth_id"], "tooth_000");
}

TEST_F(Pipeline, ExportColoredPly) {
  const auto ply = root() / "colored.ply";
  ASSERT_EQ(cli("export-colored --cloud " + p(f("cloud.csv")) + " --field " + p(f("distance.csv")) +
                " --column FA --out " + p(ply))
                .code,
            0);
  std::ifstream in(ply);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "ply");
  std::size_t vertices = 0;
  while (std::getline(in, line) && line != "end_header")
    if (line.rfind("element vertex ", 0) == 0) vertices = std::stoul(line.substr(15));
  EXPECT_EQ(vertices, 2048u);
  std::size_t body = 0;
  bool saw_red_end = false;
  while (std::getline(in, line)) {
    ++body;
    std::istringstream ss(line);
    double v[6];
    int r, g, b;
    for (double& x : v) ss >> x;
    ss >> r >> g >> b;
    EXPECT_EQ(g, 0);
    EXPECT_NEAR(r + b, 255, 1);
    saw_red_end |= r >= 250;
  }
  EXPECT_EQ(body, vertices);
  EXPECT_TRUE(saw_red_end);
  EXPECT_EQ(cli("export-colored --cloud " + p(f("cloud.csv")) + " --field " + p(f("distance.csv")) +
                " --column ZZ --out " + p(ply))
                .code,
            1);
}
