#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmb/exact.hpp"
#include "bmb/model.hpp"
#include "bmb/rng.hpp"
#include "bmb/state_samplers.hpp"

// Hidden-variable likelihoods via per-datapoint partition functions, and the
// two-parameter semi-supervised label model: pairwise agreement couplings
// that decay with point distance, scaled per axis by (sigma_x, sigma_y).

namespace bmb {

// log sum_h exp(log_unnorm(observed, h)): the partition function of the
// model with the row's observed entries clamped (folded into biases and a
// constant) and the hidden entries summed out by enumeration. A row without
// hidden entries reduces to log_unnorm.
double clamped_logZx(const Model& model, std::span<const std::int8_t> row,
                     int cap = kDefaultEnumCap);

// The clamping itself: the reduced model over the hidden entries (kept in
// original index order) plus the folded-away additive constant, so that
// logZx = constant + log Z(reduced). Requires at least one hidden entry;
// callers can then run any normalizer approximation on the reduced model.
std::pair<Model, double> fold_observed(const Model& model,
                                       std::span<const std::int8_t> row);

// log p(observed part of row) = clamped_logZx - log Z. Always <= 0; exactly
// 0 for a fully hidden row.
double hidden_loglik(const Model& model, std::span<const std::int8_t> row,
                     int cap = kDefaultEnumCap);

// 2-d points with labels 0, 1 or kHidden (unlabelled).
struct PointSet {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::int8_t> labels;

  std::size_t size() const { return xs.size(); }
};

// Parses "x,y,label" CSV content; label is 0, 1 or ?. A leading header row
// is accepted and skipped.
PointSet load_pointset_csv(const std::string& text);

// Axis length-scales, carried in log space so they stay positive.
struct SigmaParams {
  double log_sigma_x = 0.0;
  double log_sigma_y = 0.0;
};

// W_ij = exp(-[(x_i-x_j)^2/sigma_x^2 + (y_i-y_j)^2/sigma_y^2] / 2), row-major
// n x n with zero diagonal.
std::vector<double> build_weights(const PointSet& points, const SigmaParams& sigma);

// The agreement model p(s) ~ exp(sum_{i<j} W_ij [s_i == s_j]) rewritten as a
// pairwise model: W_ij [s_i == s_j] = 2 W_ij s_i s_j - W_ij s_i - W_ij s_j
// + W_ij, giving edge weights 2 W_ij, biases -sum_j W_ij, and an additive
// constant sum_{i<j} W_ij that still depends on sigma, so it is carried
// explicitly: log Z_agreement = log Z_model + constant.
struct SemisupBm {
  Model model;
  double constant = 0.0;
  std::vector<std::int8_t> designation;  // labels as a data row: 0/1/kHidden
};

SemisupBm semisup_to_bm(const PointSet& points, const SigmaParams& sigma);

// log p(observed labels | points, sigma) by enumeration over the unlabelled
// points.
double semisup_loglik(const PointSet& points, const SigmaParams& sigma,
                      int cap = kDefaultEnumCap);

// d log p / d log sigma_a = sum_{i<j} (<[s_i==s_j]>_clamped -
// <[s_i==s_j]>_unclamped) * W_ij * (a_i - a_j)^2 / sigma_a^2, with exact
// (enumerated) expectations. The test and small-problem reference for the
// sampled estimator below.
std::array<double, 2> semisup_grad_logsigma_exact(const PointSet& points,
                                                  const SigmaParams& sigma,
                                                  int cap = kDefaultEnumCap);

// Stochastic version of the same gradient: agreement expectations estimated
// by Swendsen-Wang, the clamped chain with labelled nodes frozen. Both
// chains persist between evaluations (brief-chain style).
class SemisupGradient {
 public:
  explicit SemisupGradient(PointSet points, int n_sweeps = 5);

  std::array<double, 2> evaluate(const SigmaParams& sigma, Rng& rng);
  void reset();

 private:
  PointSet points_;
  int n_sweeps_;
  State clamped_;
  State unclamped_;
};

// Per-point class-1 marginals p(s_i = 1 | observed labels, sigma), averaged
// over the given sigma samples; conditional Swendsen-Wang with burn_in
// discarded sweeps and n_sweeps kept per sample.
std::vector<double> predict_labels(const PointSet& points,
                                   std::span<const SigmaParams> sigma_samples,
                                   int n_sweeps, int burn_in, Rng& rng);

// Enumerated conditional marginals for one sigma; the oracle for
// predict_labels on small point sets.
std::vector<double> predict_labels_exact(const PointSet& points,
                                         const SigmaParams& sigma,
                                         int cap = kDefaultEnumCap);

// Uncorrected Langevin over (log sigma_x, log sigma_y) under a flat prior on
// a box, reflecting at the walls; the gradient comes from SemisupGradient.
struct SigmaChainConfig {
  double epsilon = 0.2;
  std::int64_t iterations = 10000;
  int n_sweeps = 5;  // Swendsen-Wang sweeps per gradient evaluation
  std::uint64_t seed = 0;
  double box_lo = -4.0;
  double box_hi = 4.0;
  SigmaParams init{};
};

struct SigmaChain {
  std::vector<SigmaParams> samples;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
};

SigmaChain run_sigma_chain(const PointSet& points, const SigmaChainConfig& config);

}  // namespace bmb
