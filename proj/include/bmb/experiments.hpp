#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bmb/model.hpp"
#include "bmb/param_samplers.hpp"
#include "bmb/semisup.hpp"

// Experiment front end: dataset ingestion, synthetic system generation, the
// comparison suites, the flawed-joint-model demonstration, and all result
// emission (chain files, CSV tables, SVG plots, run manifest).

namespace bmb {

enum class ExperimentKind { Heart, Synthetic, Semisup, FlawedJointDemo, Custom };

struct SyntheticSpec {
  int k = 100;
  int n_edges = 204;
};

struct SemisupSpec {
  double epsilon = 0.2;      // Langevin step in (log sigma_x, log sigma_y)
  int n_sweeps = 5;          // cluster sweeps per gradient estimate
  int toy_points = 80;       // built-in layout used when no points CSV is given
  int predict_sweeps = 200;  // label-marginal sweeps per sigma draw
  int predict_burn_in = 50;
  int predict_sigmas = 50;   // evenly spaced posterior draws used for prediction
};

struct FlawedDemoSpec {
  std::vector<std::int64_t> n_values{0, 1, 10, 100};
  double grid_lo = -3.0;
  double grid_hi = 6.0;
  int grid_points = 181;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Custom;
  std::string method = "metropolis";   // metropolis | ratio | langevin
  std::string approximator = "exact";  // exact | mean-field | tree | bethe
  std::int64_t iterations = 100000;
  std::int64_t thinning = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string data_path;          // contingency CSV, or points CSV for semisup
  double proposal_std = 0.1;      // single-coordinate Metropolis proposal
  double epsilon = 0.01;          // Langevin step over model parameters
  int bins = 50;                  // histogram resolution
  double bp_flag_fraction = 0.1;  // flag chains whose non-convergence rate exceeds this
  SyntheticSpec synthetic;
  SemisupSpec semisup;
  FlawedDemoSpec flawed;
};

// Strict schema: unknown keys, unknown enum strings, and out-of-range values
// are rejected before any compute.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
// FNV-1a over the canonical serialization, as 16 hex digits; recorded in
// every output file so artifacts can be traced to their configuration.
std::string config_hash(const ExperimentConfig& config);

// Contingency-table CSV: 6 binary columns plus a count column, at most 64
// distinct rows. Lines starting with '#' and an optional header row are
// skipped; duplicate patterns merge their counts.
DataSet load_contingency(const std::string& text);
DataSet load_contingency_file(const std::filesystem::path& path);
std::string contingency_csv(const DataSet& data);

// Deterministic synthetic stand-in for the 6-variable risk-factor table:
// 1841 draws from a fixed hand-picked model, tabulated. Not real data.
Model heart_standin_model();
DataSet heart_standin();

struct SyntheticSystem {
  Model truth;
  DataSet data;
  bool exact_sampled = false;  // false: long-run Gibbs substitution was used
};

// Uniform-random distinct edges, N(0,1) weights and biases, 100 data rows.
// Rows come from exact sampling when k fits under the enumeration cap and
// from long-run Gibbs (burn-in 10^4 sweeps, thinning 10) otherwise.
SyntheticSystem gen_synthetic(int k, int n_edges, std::uint64_t seed);

// Fully connected parameter layout: all k(k-1)/2 weights plus k biases.
ParamLayout full_layout(int k);

// Built-in point layouts: 80 points (two labelled clusters plus an
// unlabelled cluster between them) and the 12-point reduction of the same
// shape, small enough for exact enumeration oracles.
PointSet semisup_toy(int n_points);

// One normalized histogram outline for an overlay plot.
struct HistogramCurve {
  std::string label;
  std::vector<double> bin_edges;  // bins + 1 ascending edges
  std::vector<double> masses;     // one normalized mass per bin
};

// Deterministic step-outline overlay plot (no timestamps); markers draw
// vertical reference lines such as true parameter values. Each curve
// contributes one polyline with exactly 2*bins + 2 vertices.
std::string emit_histogram_svg(std::span<const HistogramCurve> curves,
                               std::span<const double> markers = {},
                               const std::string& title = {});

struct ChainReport {
  std::string name;    // suite-local chain name, e.g. "exact" or "brief"
  std::string method;  // Chain::method tag
  double accept_rate = 0.0;
  double nonconverged_fraction = 0.0;
  bool flagged = false;  // non-convergence above config.bp_flag_fraction
};

struct HeartResult {
  std::filesystem::path out_dir;
  std::string hash;
  ParamLayout layout;
  std::vector<ChainReport> reports;  // exact, mean_field, tree, loopy, brief
  // Indexed [report][coordinate]; the exact row is identically 1.
  std::vector<std::vector<double>> overlap_vs_exact;
  std::vector<std::vector<double>> sample_variance;
};

struct SyntheticResult {
  std::filesystem::path out_dir;
  std::string hash;
  Model truth;
  bool exact_sampled = false;
  std::vector<ChainReport> reports;           // loopy, brief
  std::vector<std::vector<double>> f_curves;  // per report, ascending
  std::vector<double> prior_f_curve;          // matched-size prior baseline
};

struct SemisupResult {
  std::filesystem::path out_dir;
  std::string hash;
  SigmaChain langevin;
  SigmaChain loopy;  // plug-in Metropolis comparison chain
  double loopy_accept_rate = 0.0;
  double loopy_nonconverged_fraction = 0.0;
  bool loopy_flagged = false;
  std::vector<double> predictions;  // class-1 marginal per point
};

struct FlawedDemoResult {
  std::filesystem::path out_dir;
  std::string hash;
  std::vector<double> grid;                    // weight grid
  std::vector<std::vector<double>> densities;  // per N, normalized on the grid
  std::vector<double> argmax;                  // per N
};

struct CustomResult {
  std::filesystem::path out_dir;
  std::string hash;
  ChainReport report;
};

// Each suite writes chain files, CSV tables, SVG plots and a run.json
// manifest under config.out_dir, then returns the headline numbers. Reruns
// with an identical config produce byte-identical files.
HeartResult run_heart_suite(const ExperimentConfig& config);
SyntheticResult run_synthetic_suite(const ExperimentConfig& config);
SemisupResult run_semisup_suite(const ExperimentConfig& config);
FlawedDemoResult run_flawed_joint_demo(const ExperimentConfig& config);
CustomResult run_custom_suite(const ExperimentConfig& config);

// Dispatch on config.kind; returns the output directory.
std::filesystem::path run_experiment(const ExperimentConfig& config);

}  // namespace bmb
