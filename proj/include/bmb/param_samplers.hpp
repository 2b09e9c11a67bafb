#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bmb/approx.hpp"
#include "bmb/exact.hpp"
#include "bmb/model.hpp"
#include "bmb/rng.hpp"
#include "bmb/state_samplers.hpp"

// Outer-loop MCMC over model parameters: Metropolis with a plug-in log Z
// approximation, Metropolis with a sampled partition ratio, and uncorrected
// Langevin driven by a pluggable moment estimator.

namespace bmb {

enum class ProposalKind { SingleCoordinateGaussian, FullGaussian };
enum class CoordinateSchedule { Cyclic, Random };

struct ProposalConfig {
  ProposalKind kind = ProposalKind::SingleCoordinateGaussian;
  double std_dev = 0.1;  // per-coordinate Gaussian, variance 0.01
  CoordinateSchedule schedule = CoordinateSchedule::Cyclic;
};

// What to do with a Metropolis step when the approximator reports
// non-convergence: keep the returned value (and flag the step), or reject
// the proposal outright. Rejecting always can freeze a chain in frustrated
// regions, so UseValue is the default and the flag preserves auditability.
enum class NonConvergencePolicy { UseValue, AutoReject };

// Plug-in replacement for log Z in the acceptance ratio. Implementations
// are deterministic functions of the model (plus any warm-start state they
// carry); reset() drops that state.
class LogZApproximator {
 public:
  struct Value {
    double log_z = 0.0;
    bool converged = true;
  };

  virtual ~LogZApproximator() = default;
  virtual Value evaluate(const Model& model) = 0;
  virtual std::string tag() const = 0;
  virtual void reset() {}
};

std::unique_ptr<LogZApproximator> make_exact_logz(int cap = kDefaultEnumCap);
std::unique_ptr<LogZApproximator> make_mean_field_logz(MeanFieldOptions opts = {});
// Re-selects the max-|w| tree per call; warm-starts while the selected tree
// is stable and falls back to a cold start when a proposal reorders it.
std::unique_ptr<LogZApproximator> make_tree_logz(TreeBoundOptions opts = {});
std::unique_ptr<LogZApproximator> make_bethe_logz(BpOptions opts = {},
                                                  bool warm_start = true);

// Pluggable <s_i>, <s_i s_j> source for the Langevin gradient.
class MomentEstimator {
 public:
  virtual ~MomentEstimator() = default;
  virtual MomentEstimate estimate(const Model& model, Rng& rng) = 0;
  virtual std::string tag() const = 0;
  virtual void reset() {}
};

std::unique_ptr<MomentEstimator> make_exact_moment_estimator(int cap = kDefaultEnumCap);
// Brief chains restarted at the data every call (contrastive-divergence
// style); the data set is copied in.
std::unique_ptr<MomentEstimator> make_brief_moment_estimator(DataSet data,
                                                             int n_sweeps = 1);
// One persistent Gibbs chain: burn-in happens on the first call only, later
// calls continue from the previous final state.
std::unique_ptr<MomentEstimator> make_long_run_moment_estimator(StateChainConfig config);
std::unique_ptr<MomentEstimator> make_bp_moment_estimator(BpOptions opts = {},
                                                          bool warm_start = true);
std::unique_ptr<MomentEstimator> make_mean_field_moment_estimator(MeanFieldOptions opts = {});

struct StepDiagnostics {
  double log_z_current = 0.0;
  double log_z_proposed = 0.0;
  bool approx_converged = true;  // both endpoint evaluations converged
  bool auto_rejected = false;    // rejected by policy or inner-sampler failure
};

struct MetropolisResult {
  ParamVector params;
  bool accepted = false;
  double log_z_next = 0.0;  // cached approximator value at the returned params
  StepDiagnostics diag;
};

// log [ p(proposed|S) / p(current|S) ] with plug-in log Z values:
//   Delta log prior + Delta theta . suff  -  N (logZ' - logZ).
double metropolis_log_accept(const ParamVector& current, const ParamVector& proposed,
                             double log_z_current, double log_z_proposed,
                             const SuffStats& suff, const GaussianPrior& prior);

// One Metropolis step. log_z_current must be the approximator's value at
// params (the cached value from the previous step); step_index drives the
// cyclic coordinate schedule. free_coords restricts which coordinates the
// proposal may move (empty = all). Exactly one uniform accept draw is
// consumed per non-auto-rejected step.
MetropolisResult metropolis_step(const ParamVector& params, double log_z_current,
                                 const SuffStats& suff, const GaussianPrior& prior,
                                 const ProposalConfig& proposal, std::uint64_t step_index,
                                 LogZApproximator& logz, Rng& rng,
                                 NonConvergencePolicy policy = NonConvergencePolicy::UseValue,
                                 std::span<const std::size_t> free_coords = {});

enum class RatioInner { Exhaustive, Gibbs };

struct RatioConfig {
  RatioInner inner = RatioInner::Gibbs;
  int n_inner_samples = 100;  // states kept from the p(s | proposed) chain
  int inner_burn_in = 100;    // sweeps before the first kept state
  int cap = kDefaultEnumCap;  // Exhaustive enumeration cap
};

// Metropolis step whose acceptance uses (Z(current)/Z(proposed))^N from the
// importance-weight ratio estimator under p(s | proposed), instead of
// plug-in log Z values. Exhaustive enumerates that expectation; Gibbs
// estimates it from a fresh inner chain. A non-finite estimate rejects the
// step and flags the diagnostic.
MetropolisResult ratio_metropolis_step(const ParamVector& params, const SuffStats& suff,
                                       const GaussianPrior& prior,
                                       const ProposalConfig& proposal,
                                       std::uint64_t step_index, const RatioConfig& ratio,
                                       Rng& rng,
                                       std::span<const std::size_t> free_coords = {});

// theta' = theta + (eps^2 / 2) grad log p(S, theta) + eps * N(0, I), no
// accept/reject. The estimator is evaluated at the current model; throws
// std::runtime_error on a non-finite gradient. With free_coords, drift and
// noise apply to the listed coordinates only.
ParamVector langevin_step(const ParamVector& params, const SuffStats& suff,
                          const GaussianPrior& prior, MomentEstimator& moments,
                          double epsilon, Rng& rng,
                          std::span<const std::size_t> free_coords = {});

enum class ChainMethod { Metropolis, RatioMetropolis, Langevin };

struct ChainConfig {
  ChainMethod method = ChainMethod::Metropolis;
  ProposalConfig proposal;  // Metropolis and RatioMetropolis
  RatioConfig ratio;        // RatioMetropolis only
  double epsilon = 0.01;    // Langevin only
  std::int64_t iterations = 100000;
  std::int64_t thinning = 1;  // store every thinning-th step
  std::uint64_t seed = 0;
  std::vector<double> init;  // empty = all zeros
  // Coordinates the sampler may move; empty = all. Clamped coordinates stay
  // at their init values, which is how low-dimensional oracle comparisons
  // pin the remaining parameters.
  std::vector<std::size_t> free_coords;
  NonConvergencePolicy policy = NonConvergencePolicy::UseValue;
};

struct Chain {
  ParamLayout layout;
  std::vector<std::vector<double>> samples;  // layout order, post-thinning
  std::vector<std::int64_t> steps;           // 1-based iteration of each sample
  std::vector<std::uint8_t> accepted_flags;  // step outcome (Langevin: always 1)
  std::vector<double> log_z_values;          // cached approximator value (NaN if n/a)
  std::int64_t accept_count = 0;
  std::int64_t propose_count = 0;
  std::int64_t nonconverged_steps = 0;
  std::int64_t auto_rejected_steps = 0;
  double step_size = 0.0;  // proposal std-dev or epsilon
  std::uint64_t seed = 0;
  std::string method;
};

Chain run_metropolis_chain(const ChainConfig& config, const DataSet& data,
                           const GaussianPrior& prior, const ParamLayout& layout,
                           LogZApproximator& logz);
Chain run_ratio_chain(const ChainConfig& config, const DataSet& data,
                      const GaussianPrior& prior, const ParamLayout& layout);
Chain run_langevin_chain(const ChainConfig& config, const DataSet& data,
                         const GaussianPrior& prior, const ParamLayout& layout,
                         MomentEstimator& moments);

// i.i.d. prior draws packaged as a Chain; the chance baseline the samplers
// are scored against.
Chain sample_prior_chain(const GaussianPrior& prior, const ParamLayout& layout,
                         std::int64_t n, std::uint64_t seed);

// One JSON object per stored sample: {step, params, accepted, diagnostics}.
std::string chain_to_jsonl(const Chain& chain);

struct HistogramTable {
  ParamLayout layout;
  std::vector<std::vector<double>> bin_edges;      // per coordinate, bins+1 edges
  std::vector<std::vector<std::int64_t>> counts;   // per coordinate, bins counts
};

// Per-coordinate histograms over each coordinate's sample range (range
// widened by 1/2 on each side when a coordinate is constant); the top edge
// is inclusive so every sample lands in a bin.
HistogramTable chain_histograms(const Chain& chain, int bins);

// Histogram overlap sum_b min(p_a, p_b) over `bins` shared equal-width bins
// spanning both sample sets; 1 means indistinguishable.
double overlap_coefficient(const std::vector<double>& a, const std::vector<double>& b,
                           int bins = 50);

// Fraction of samples within +-tol of the true value, per coordinate,
// sorted ascending.
std::vector<double> f_curve(const Chain& chain, const ParamVector& true_params,
                            double tol = 0.1);

}  // namespace bmb
