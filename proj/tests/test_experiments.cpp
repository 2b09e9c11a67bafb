#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmb/exact.hpp"
#include "bmb/experiments.hpp"
#include "bmb/model.hpp"
#include "bmb/semisup.hpp"

using namespace bmb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Relative path -> bytes for every regular file under root.
std::map<std::string, std::string> dir_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
  }
  return out;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bmb_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const ExperimentConfig config = config_from_json(R"({"experiment": "heart"})");
  CHECK(config.kind == ExperimentKind::Heart);
  CHECK(config.method == "metropolis");
  CHECK(config.approximator == "exact");
  CHECK(config.iterations == 100000);
  CHECK(config.thinning == 1);
  CHECK(config.proposal_std == doctest::Approx(0.1));
  CHECK(config.epsilon == doctest::Approx(0.01));
  CHECK(config.bins == 50);

  const std::string serialized = config_to_json(config);
  const ExperimentConfig back = config_from_json(serialized);
  CHECK(config_to_json(back) == serialized);
  CHECK(config_hash(back) == config_hash(config));
}

TEST_CASE("config hash is sixteen hex chars and tracks content") {
  ExperimentConfig a = config_from_json(R"({"experiment": "synthetic"})");
  const std::string ha = config_hash(a);
  CHECK(ha.size() == 16);
  CHECK(ha.find_first_not_of("0123456789abcdef") == std::string::npos);
  ExperimentConfig b = a;
  b.seed = 1;
  CHECK(config_hash(b) != ha);
  CHECK(config_hash(a) == ha);
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("[1,2]"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "hearts"})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "mystery": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "iterations": "many"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "iterations": 0})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(R"({"experiment": "heart", "iterations": 10, "thinning": 11})"),
      std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "method": "gibbs"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "approximator": "kikuchi"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "bins": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "bp_flag_fraction": 1.5})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"experiment": "heart", "proposal_std": 0})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(R"({"experiment": "synthetic", "synthetic": {"k": 4, "n_edges": 7}})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(R"({"experiment": "semisup", "semisup": {"sweeps": 3}})"),
      std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(
                      R"({"experiment": "flawed-joint-demo",
                          "flawed": {"grid_lo": 2, "grid_hi": -2}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(
                      R"({"experiment": "flawed-joint-demo", "flawed": {"n_values": []}})"),
                  std::invalid_argument);
}

TEST_CASE("contingency loader merges, skips headers, and validates") {
  const std::string text =
      "# comment line\n"
      "v0,v1,v2,v3,v4,v5,count\n"
      "0,0,0,0,0,0,10\r\n"
      "\n"
      "1,0,1,0,1,0,3\n"
      "0,0,0,0,0,0,5\n"
      "1,1,1,1,1,1,0\n";
  const DataSet data = load_contingency(text);
  CHECK(data.k() == 6);
  CHECK(data.n_distinct() == 2);
  CHECK(data.total_count() == 18);

  bool found_merged = false;
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    bool all_zero = true;
    for (std::int8_t v : data.row(r)) all_zero = all_zero && v == 0;
    if (all_zero) {
      CHECK(data.count(r) == 15);
      found_merged = true;
    }
  }
  CHECK(found_merged);

  CHECK_THROWS_AS(load_contingency("0,0,0,0,0,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_contingency("0,0,0,0,0,0,0,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_contingency("0,0,2,0,0,0,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_contingency("0,0,0,0,0,0,3.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_contingency("0,0,0,0,0,0,-2\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_contingency("0,0,0,0,0,0,5\nx,y,z,w,u,v,count\n"),
                  std::invalid_argument);
}

TEST_CASE("contingency loader caps distinct rows at the six-variable state count") {
  std::string text;
  for (int v = 0; v < 64; ++v) {
    for (int b = 5; b >= 0; --b) text += std::to_string((v >> b) & 1) + ",";
    text += "1\n";
  }
  CHECK(load_contingency(text).n_distinct() == 64);
}

TEST_CASE("heart stand-in survives a csv round trip") {
  const DataSet data = heart_standin();
  CHECK(data.k() == 6);
  CHECK(data.total_count() == 1841);
  CHECK(data.fully_observed());

  const DataSet back = load_contingency(contingency_csv(data));
  REQUIRE(back.n_distinct() == data.n_distinct());
  CHECK(back.total_count() == 1841);
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    CHECK(back.count(r) == data.count(r));
    for (int i = 0; i < 6; ++i) CHECK(back.row(r)[i] == data.row(r)[i]);
  }

  const DataSet again = heart_standin();
  CHECK(contingency_csv(again) == contingency_csv(data));
}

TEST_CASE("synthetic generator respects the requested shape") {
  const SyntheticSystem sys = gen_synthetic(100, 204, 5);
  CHECK(sys.truth.k() == 100);
  CHECK(sys.truth.edges().size() == 204);
  CHECK(vectorize(sys.truth).layout.size() == 304);
  CHECK(sys.data.k() == 100);
  CHECK(sys.data.total_count() == 100);
  CHECK(sys.data.fully_observed());
  CHECK_FALSE(sys.exact_sampled);

  for (std::size_t e = 1; e < sys.truth.edges().size(); ++e) {
    const Edge& prev = sys.truth.edges()[e - 1];
    const Edge& cur = sys.truth.edges()[e];
    CHECK(std::pair(prev.i, prev.j) < std::pair(cur.i, cur.j));
  }

  CHECK(vectorize(gen_synthetic(100, 500, 5).truth).layout.size() == 600);
}

TEST_CASE("synthetic generator is a pure function of its seed") {
  const SyntheticSystem a = gen_synthetic(30, 60, 11);
  const SyntheticSystem b = gen_synthetic(30, 60, 11);
  CHECK(a.truth.to_json() == b.truth.to_json());
  REQUIRE(a.data.n_distinct() == b.data.n_distinct());
  for (std::size_t r = 0; r < a.data.n_distinct(); ++r)
    for (int i = 0; i < 30; ++i) CHECK(a.data.row(r)[i] == b.data.row(r)[i]);

  const SyntheticSystem c = gen_synthetic(30, 60, 12);
  CHECK(a.truth.to_json() != c.truth.to_json());
}

TEST_CASE("synthetic generator uses exact draws for small models") {
  const SyntheticSystem sys = gen_synthetic(8, 10, 3);
  CHECK(sys.exact_sampled);
  CHECK(sys.data.total_count() == 100);

  CHECK_THROWS_AS(gen_synthetic(4, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_synthetic(0, 0, 0), std::invalid_argument);
}

TEST_CASE("full layout enumerates every pair then every bias") {
  const ParamLayout layout = full_layout(6);
  CHECK(layout.size() == 21);
  CHECK(layout.n_edges() == 15);
  CHECK(layout.coord_name(0) == "w_0_1");
  CHECK(layout.coord_name(15) == "b_0");
  CHECK(layout.coord_name(20) == "b_5");
  CHECK_THROWS_AS(full_layout(0), std::invalid_argument);
}

TEST_CASE("builtin point layouts have the advertised label structure") {
  const PointSet twelve = semisup_toy(12);
  REQUIRE(twelve.size() == 12);
  int zeros = 0, ones = 0, hidden = 0;
  for (std::int8_t l : twelve.labels) {
    if (l == 0) ++zeros;
    if (l == 1) ++ones;
    if (l == kHidden) ++hidden;
  }
  CHECK(zeros == 2);
  CHECK(ones == 2);
  CHECK(hidden == 8);

  // Swapping the axes maps the layout onto itself with flipped classes, so
  // the two sigma posterior arms carry exactly equal mass.
  for (std::size_t i = 0; i < twelve.size(); ++i) {
    bool matched = false;
    for (std::size_t j = 0; j < twelve.size(); ++j) {
      if (twelve.xs[j] == twelve.ys[i] && twelve.ys[j] == twelve.xs[i]) {
        const std::int8_t want =
            twelve.labels[i] == kHidden ? kHidden : std::int8_t(1 - twelve.labels[i]);
        if (twelve.labels[j] == want) matched = true;
      }
    }
    CHECK(matched);
  }

  const PointSet eighty = semisup_toy(80);
  REQUIRE(eighty.size() == 80);
  zeros = ones = hidden = 0;
  for (std::int8_t l : eighty.labels) {
    if (l == 0) ++zeros;
    if (l == 1) ++ones;
    if (l == kHidden) ++hidden;
  }
  CHECK(zeros == 20);
  CHECK(ones == 20);
  CHECK(hidden == 40);

  CHECK_THROWS_AS(semisup_toy(7), std::invalid_argument);
}

TEST_CASE("histogram svg outlines keep one vertex pair per bin edge") {
  HistogramCurve curve;
  curve.label = "chain";
  curve.bin_edges = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  curve.masses = {0.1, 0.3, 0.2, 0.25, 0.15};

  const std::string svg = emit_histogram_svg(std::vector{curve});
  CHECK(count_occurrences(svg, "<polyline") == 1);

  const std::size_t start = svg.find("points=\"") + 8;
  const std::size_t end = svg.find('"', start);
  const std::string points = svg.substr(start, end - start);
  CHECK(count_occurrences(points, ",") == 2 * 5 + 2);

  CHECK(emit_histogram_svg(std::vector{curve}) == svg);

  HistogramCurve second = curve;
  second.label = "other";
  const std::string two = emit_histogram_svg(std::vector{curve, second});
  CHECK(count_occurrences(two, "<polyline") == 2);

  const double marker = 0.5;
  const std::string marked =
      emit_histogram_svg(std::vector{curve}, std::span<const double>(&marker, 1));
  CHECK(count_occurrences(marked, "stroke-dasharray") == 1);

  CHECK_THROWS_AS(emit_histogram_svg({}), std::invalid_argument);
  HistogramCurve broken = curve;
  broken.masses.pop_back();
  CHECK_THROWS_AS(emit_histogram_svg(std::vector{broken}), std::invalid_argument);
}

TEST_CASE("flawed joint demo reduces to the prior at zero data") {
  ExperimentConfig config;
  config.kind = ExperimentKind::FlawedJointDemo;
  config.out_dir = fresh_dir("flawed").string();

  const FlawedDemoResult result = run_flawed_joint_demo(config);
  REQUIRE(result.grid.size() == 181);
  REQUIRE(result.densities.size() == 4);

  // With no data the weight posterior is the Gaussian prior restricted to
  // the grid; renormalize the same way and compare pointwise.
  const double dw = result.grid[1] - result.grid[0];
  double total = 0.0;
  for (double w : result.grid) total += std::exp(-0.5 * w * w);
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    const double expected = std::exp(-0.5 * result.grid[i] * result.grid[i]) / (total * dw);
    CHECK(result.densities[0][i] == doctest::Approx(expected).epsilon(1e-9));
  }

  for (std::size_t j = 1; j < result.argmax.size(); ++j)
    CHECK(result.argmax[j] >= result.argmax[j - 1]);
  CHECK(result.argmax[0] == doctest::Approx(0.0).epsilon(1e-12));

  const std::string csv = slurp(fs::path(config.out_dir) / "flawed_prior.csv");
  CHECK(csv.rfind("# config=" + result.hash, 0) == 0);
  CHECK(count_occurrences(csv, "\n") == 181 + 2);

  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(fs::path(config.out_dir) / "run.json"));
  CHECK(manifest.at("config_hash") == result.hash);
  CHECK(manifest.at("argmax_monotone_nondecreasing") == true);
}

TEST_CASE("flawed joint demo reruns byte identically") {
  ExperimentConfig config;
  config.kind = ExperimentKind::FlawedJointDemo;
  config.out_dir = fresh_dir("flawed_a").string();
  run_flawed_joint_demo(config);
  const auto first = dir_bytes(config.out_dir);

  ExperimentConfig again = config;
  run_flawed_joint_demo(again);
  CHECK(dir_bytes(config.out_dir) == first);
}

TEST_CASE("heart suite writes the full artifact set") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Heart;
  config.iterations = 300;
  config.out_dir = fresh_dir("heart").string();

  const HeartResult result = run_heart_suite(config);
  REQUIRE(result.reports.size() == 5);
  CHECK(result.reports[0].name == "exact");
  CHECK(result.reports[4].name == "brief");
  REQUIRE(result.overlap_vs_exact.size() == 5);
  for (double o : result.overlap_vs_exact[0]) CHECK(o == 1.0);
  for (std::size_t i = 1; i < 5; ++i)
    for (double o : result.overlap_vs_exact[i]) {
      CHECK(o >= 0.0);
      CHECK(o <= 1.0);
    }
  for (const ChainReport& report : result.reports) {
    CHECK(report.accept_rate >= 0.0);
    CHECK(report.accept_rate <= 1.0);
  }

  const fs::path out = config.out_dir;
  for (const char* name : {"exact", "mean_field", "tree", "loopy", "brief"}) {
    CHECK(fs::exists(out / "chains" / (std::string(name) + ".jsonl")));
    CHECK(fs::exists(out / "histograms" / (std::string(name) + ".csv")));
  }
  CHECK(fs::exists(out / "overlap.csv"));
  int n_plots = 0;
  for (const auto& entry : fs::directory_iterator(out / "plots"))
    if (entry.path().extension() == ".svg") ++n_plots;
  CHECK(n_plots == 21);

  const std::string jsonl = slurp(out / "chains" / "exact.jsonl");
  const nlohmann::json meta = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(meta.at("config") == result.hash);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(manifest.at("suite") == "heart");
  CHECK(manifest.at("n") == 1841);
  CHECK(manifest.at("chains").size() == 5);
  CHECK(manifest.at("seed") == 0);
}

TEST_CASE("heart suite reruns byte identically") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Heart;
  config.iterations = 200;
  config.seed = 42;
  config.out_dir = fresh_dir("heart_a").string();
  run_heart_suite(config);
  const auto first = dir_bytes(config.out_dir);
  CHECK(first.size() > 12);

  run_heart_suite(config);
  CHECK(dir_bytes(config.out_dir) == first);
}

TEST_CASE("heart suite accepts external contingency data and rejects bad paths") {
  const fs::path dir = fresh_dir("heart_data");
  const fs::path csv = dir / "counts.csv";
  spit(csv,
       "0,0,0,0,0,0,7\n"
       "1,0,1,0,1,0,4\n"
       "1,1,1,1,1,1,2\n");

  ExperimentConfig config;
  config.kind = ExperimentKind::Heart;
  config.iterations = 100;
  config.data_path = csv.string();
  config.out_dir = (dir / "out").string();
  const HeartResult result = run_heart_suite(config);
  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(fs::path(result.out_dir) / "run.json"));
  CHECK(manifest.at("n") == 13);
  CHECK(manifest.at("data_source") == csv.string());
  CHECK(manifest.at("substitutions").empty());

  config.data_path = (dir / "missing.csv").string();
  CHECK_THROWS_AS(run_heart_suite(config), std::runtime_error);
}

TEST_CASE("synthetic suite produces sorted error curves and a prior baseline") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Synthetic;
  config.iterations = 300;
  config.thinning = 3;
  config.synthetic.k = 12;
  config.synthetic.n_edges = 20;
  config.out_dir = fresh_dir("synth").string();

  const SyntheticResult result = run_synthetic_suite(config);
  REQUIRE(result.reports.size() == 2);
  CHECK(result.reports[0].name == "loopy");
  CHECK(result.reports[1].name == "brief");
  REQUIRE(result.f_curves.size() == 2);
  const std::size_t n_coords = 20 + 12;
  for (const auto& curve : result.f_curves) {
    REQUIRE(curve.size() == n_coords);
    CHECK(std::is_sorted(curve.begin(), curve.end()));
  }
  REQUIRE(result.prior_f_curve.size() == n_coords);
  CHECK(std::is_sorted(result.prior_f_curve.begin(), result.prior_f_curve.end()));

  const fs::path out = config.out_dir;
  const std::string fcurves = slurp(out / "fcurves.csv");
  CHECK(count_occurrences(fcurves, "\n") == int(n_coords) + 2);
  CHECK(fcurves.find("rank,loopy,brief,prior") != std::string::npos);

  const Model truth = Model::from_json(slurp(out / "truth.json"));
  CHECK(truth.to_json() == result.truth.to_json());
  CHECK(result.exact_sampled);

  int n_plots = 0;
  for (const auto& entry : fs::directory_iterator(out / "plots"))
    if (entry.path().extension() == ".svg") ++n_plots;
  CHECK(n_plots == 6);

  const auto first = dir_bytes(out);
  run_synthetic_suite(config);
  CHECK(dir_bytes(out) == first);
}

TEST_CASE("semisup suite records both chains and exact anchors") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Semisup;
  config.iterations = 200;
  config.thinning = 10;
  config.semisup.toy_points = 12;
  config.semisup.predict_sweeps = 50;
  config.semisup.predict_burn_in = 10;
  config.out_dir = fresh_dir("semisup").string();

  const SemisupResult result = run_semisup_suite(config);
  CHECK(result.langevin.samples.size() == 200);
  CHECK(result.loopy.samples.size() == 200);
  REQUIRE(result.predictions.size() == 12);

  const PointSet points = semisup_toy(12);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points.labels[i] == 0) CHECK(result.predictions[i] == 0.0);
    if (points.labels[i] == 1) CHECK(result.predictions[i] == 1.0);
    if (points.labels[i] == kHidden) {
      CHECK(result.predictions[i] > 0.0);
      CHECK(result.predictions[i] < 1.0);
    }
  }

  const fs::path out = config.out_dir;
  const std::string scatter = slurp(out / "sigma_scatter.csv");
  CHECK(scatter.find("step,sigma_x,sigma_y") != std::string::npos);
  CHECK(count_occurrences(scatter, "\n") == 20 + 2);
  CHECK(fs::exists(out / "sigma_scatter_loopy.csv"));
  CHECK(count_occurrences(slurp(out / "predictions.csv"), "\n") == 12 + 2);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(manifest.at("langevin").at("regions").contains("corner_both_large"));
  CHECK(manifest.at("loopy").at("regions").contains("arm_x_large"));

  const auto first = dir_bytes(out);
  run_semisup_suite(config);
  CHECK(dir_bytes(out) == first);
}

TEST_CASE("semisup suite requires at least one labelled point") {
  const fs::path dir = fresh_dir("semisup_unlabelled");
  const fs::path csv = dir / "points.csv";
  spit(csv, "0.0,0.0,?\n1.0,1.0,?\n");

  ExperimentConfig config;
  config.kind = ExperimentKind::Semisup;
  config.iterations = 50;
  config.data_path = csv.string();
  config.out_dir = (dir / "out").string();
  CHECK_THROWS_AS(run_semisup_suite(config), std::invalid_argument);
}

TEST_CASE("custom suite dispatches on method and writes one chain") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Custom;
  config.method = "langevin";
  config.iterations = 150;
  config.out_dir = fresh_dir("custom").string();

  const CustomResult result = run_custom_suite(config);
  CHECK(result.report.method == "langevin:brief");

  const fs::path out = config.out_dir;
  CHECK(fs::exists(out / "chains" / "chain.jsonl"));
  CHECK(fs::exists(out / "histograms" / "chain.csv"));
  const nlohmann::json manifest = nlohmann::json::parse(slurp(out / "run.json"));
  CHECK(manifest.at("suite") == "custom");

  ExperimentConfig ratio = config;
  ratio.method = "ratio";
  ratio.iterations = 60;
  ratio.out_dir = fresh_dir("custom_ratio").string();
  CHECK(run_custom_suite(ratio).report.method == "ratio-metropolis:gibbs");
}

TEST_CASE("run_experiment dispatches on the configured kind") {
  ExperimentConfig config;
  config.kind = ExperimentKind::FlawedJointDemo;
  config.out_dir = fresh_dir("dispatch").string();
  const fs::path out = run_experiment(config);
  CHECK(out == fs::path(config.out_dir));
  CHECK(fs::exists(out / "flawed_prior.csv"));
}

TEST_CASE("suite runners validate their config") {
  ExperimentConfig config;
  config.kind = ExperimentKind::Heart;
  config.iterations = 10;
  config.thinning = 20;
  config.out_dir = fresh_dir("invalid").string();
  CHECK_THROWS_AS(run_heart_suite(config), std::invalid_argument);
}
