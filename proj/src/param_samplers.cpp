#include "bmb/param_samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "bmb/exact.hpp"

namespace bmb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class ExactLogZ final : public LogZApproximator {
 public:
  explicit ExactLogZ(int cap) : cap_(cap) {}
  Value evaluate(const Model& model) override { return {exact_logZ(model, cap_), true}; }
  std::string tag() const override { return "exact"; }

 private:
  int cap_;
};

class MeanFieldLogZ final : public LogZApproximator {
 public:
  explicit MeanFieldLogZ(MeanFieldOptions opts) : opts_(opts) {}
  Value evaluate(const Model& model) override {
    const InferenceResult r = mean_field(model, {}, opts_);
    return {r.log_z_estimate, r.converged};
  }
  std::string tag() const override { return "mean_field"; }

 private:
  MeanFieldOptions opts_;
};

class TreeLogZ final : public LogZApproximator {
 public:
  explicit TreeLogZ(TreeBoundOptions opts) : opts_(opts) {}
  Value evaluate(const Model& model) override {
    TreeStructure tree = select_tree(model);
    if (tree.edges != prev_tree_) {
      state_.lambda.clear();
      prev_tree_ = tree.edges;
    }
    const InferenceResult r = tree_bound(model, tree, opts_, &state_);
    return {r.log_z_estimate, r.converged};
  }
  std::string tag() const override { return "tree"; }
  void reset() override {
    state_.lambda.clear();
    prev_tree_.clear();
  }

 private:
  TreeBoundOptions opts_;
  std::vector<int> prev_tree_;
  TreeBoundState state_;
};

class BetheLogZ final : public LogZApproximator {
 public:
  BetheLogZ(BpOptions opts, bool warm_start) : opts_(opts), warm_start_(warm_start) {}
  Value evaluate(const Model& model) override {
    BpState cold;
    const InferenceResult r = loopy_bp(model, opts_, warm_start_ ? &state_ : &cold);
    return {r.log_z_estimate, r.converged};
  }
  std::string tag() const override { return "bethe"; }
  void reset() override { state_.messages.clear(); }

 private:
  BpOptions opts_;
  bool warm_start_;
  BpState state_;
};

class ExactMomentEstimator final : public MomentEstimator {
 public:
  explicit ExactMomentEstimator(int cap) : cap_(cap) {}
  MomentEstimate estimate(const Model& model, Rng&) override {
    const ExactMoments m = exact_moments(model, cap_);
    return {m.node_marginals, m.edge_moments, 0, "exact"};
  }
  std::string tag() const override { return "exact"; }

 private:
  int cap_;
};

class BriefMomentEstimator final : public MomentEstimator {
 public:
  BriefMomentEstimator(DataSet data, int n_sweeps)
      : data_(std::move(data)), n_sweeps_(n_sweeps) {}
  MomentEstimate estimate(const Model& model, Rng& rng) override {
    return brief_moments(model, data_, n_sweeps_, rng);
  }
  std::string tag() const override { return "brief"; }

 private:
  DataSet data_;
  int n_sweeps_;
};

class LongRunMomentEstimator final : public MomentEstimator {
 public:
  explicit LongRunMomentEstimator(StateChainConfig config) : config_(config) {
    if (config_.n_sweeps < 1)
      throw std::invalid_argument("long_run estimator: n_sweeps must be positive");
    if (config_.burn_in < 0)
      throw std::invalid_argument("long_run estimator: burn_in must be non-negative");
  }

  MomentEstimate estimate(const Model& model, Rng& rng) override {
    if (state_.empty()) {
      state_ = random_state(model.k(), rng);
      for (int s = 0; s < config_.burn_in; ++s)
        gibbs_sweep(model, state_, rng, config_.order);
    }
    MomentEstimate est;
    est.node_moments.assign(static_cast<std::size_t>(model.k()), 0.0);
    est.edge_moments.assign(model.edges().size(), 0.0);
    for (int s = 0; s < config_.n_sweeps; ++s) {
      gibbs_sweep(model, state_, rng, config_.order);
      for (int i = 0; i < model.k(); ++i)
        if (state_[i]) est.node_moments[i] += 1.0;
      const auto& edges = model.edges();
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (state_[edges[e].i] && state_[edges[e].j]) est.edge_moments[e] += 1.0;
    }
    for (double& v : est.node_moments) v /= config_.n_sweeps;
    for (double& v : est.edge_moments) v /= config_.n_sweeps;
    est.n_samples = config_.n_sweeps;
    est.source = "long_run";
    return est;
  }
  std::string tag() const override { return "long_run"; }
  void reset() override { state_.clear(); }

 private:
  StateChainConfig config_;
  State state_;
};

class BpMomentEstimator final : public MomentEstimator {
 public:
  BpMomentEstimator(BpOptions opts, bool warm_start)
      : opts_(opts), warm_start_(warm_start) {}
  MomentEstimate estimate(const Model& model, Rng&) override {
    BpState cold;
    const InferenceResult r = loopy_bp(model, opts_, warm_start_ ? &state_ : &cold);
    return {r.node_marginals, r.edge_moments, 0, "bp"};
  }
  std::string tag() const override { return "bp"; }
  void reset() override { state_.messages.clear(); }

 private:
  BpOptions opts_;
  bool warm_start_;
  BpState state_;
};

class MeanFieldMomentEstimator final : public MomentEstimator {
 public:
  explicit MeanFieldMomentEstimator(MeanFieldOptions opts) : opts_(opts) {}
  MomentEstimate estimate(const Model& model, Rng&) override {
    const InferenceResult r = mean_field(model, {}, opts_);
    return {r.node_marginals, r.edge_moments, 0, "mean_field"};
  }
  std::string tag() const override { return "mean_field"; }

 private:
  MeanFieldOptions opts_;
};

void validate_proposal(const ProposalConfig& proposal) {
  if (!(proposal.std_dev > 0.0) || !std::isfinite(proposal.std_dev))
    throw std::invalid_argument("ProposalConfig: std_dev must be positive");
}

void validate_free_coords(std::span<const std::size_t> free_coords,
                          const ParamLayout& layout) {
  for (std::size_t c : free_coords)
    if (c >= layout.size())
      throw std::invalid_argument("free_coords: coordinate index out of range");
}

ParamVector propose(const ParamVector& params, const ProposalConfig& proposal,
                    std::uint64_t step_index, Rng& rng,
                    std::span<const std::size_t> free_coords) {
  validate_free_coords(free_coords, params.layout);
  const std::size_t n_free =
      free_coords.empty() ? params.layout.size() : free_coords.size();
  const auto nth_free = [&](std::size_t n) {
    return free_coords.empty() ? n : free_coords[n];
  };

  ParamVector proposed = params;
  if (proposal.kind == ProposalKind::SingleCoordinateGaussian) {
    const std::size_t slot = proposal.schedule == CoordinateSchedule::Cyclic
                                 ? static_cast<std::size_t>(step_index % n_free)
                                 : static_cast<std::size_t>(uniform_below(rng, n_free));
    proposed.values[nth_free(slot)] += proposal.std_dev * normal01(rng);
  } else {
    for (std::size_t n = 0; n < n_free; ++n)
      proposed.values[nth_free(n)] += proposal.std_dev * normal01(rng);
  }
  return proposed;
}

double theta_dot_suff(const ParamVector& params, const SuffStats& suff) {
  const std::size_t n_edges = params.layout.n_edges();
  if (suff.edge_sums.size() != n_edges ||
      suff.node_sums.size() != static_cast<std::size_t>(params.layout.k))
    throw std::invalid_argument("theta_dot_suff: sufficient statistics do not match layout");
  double acc = 0.0;
  for (std::size_t e = 0; e < n_edges; ++e)
    acc += params.values[e] * static_cast<double>(suff.edge_sums[e]);
  for (std::size_t i = 0; i < suff.node_sums.size(); ++i)
    acc += params.values[n_edges + i] * static_cast<double>(suff.node_sums[i]);
  return acc;
}

// Accept-test helper; u = 0 accepts unconditionally so the zero-probability
// edge of the uniform draw cannot reject a certain acceptance.
bool accept_draw(double log_a, Rng& rng) {
  const double u = uniform01(rng);
  return u <= 0.0 || std::log(u) < log_a;
}

void validate_chain_config(const ChainConfig& config, const ParamLayout& layout) {
  if (config.iterations < 1)
    throw std::invalid_argument("ChainConfig: iterations must be positive");
  if (config.thinning < 1)
    throw std::invalid_argument("ChainConfig: thinning must be positive");
  if (config.iterations < config.thinning)
    throw std::invalid_argument("ChainConfig: iterations must cover one thinning stride");
  if (!config.init.empty() && config.init.size() != layout.size())
    throw std::invalid_argument("ChainConfig: init length does not match layout");
  validate_free_coords(config.free_coords, layout);
}

ParamVector initial_params(const ChainConfig& config, const ParamLayout& layout) {
  ParamVector params{layout, config.init};
  if (params.values.empty()) params.values.assign(layout.size(), 0.0);
  return params;
}

void store_sample(Chain& chain, std::int64_t step, const ParamVector& params,
                  bool accepted, double log_z) {
  chain.samples.push_back(params.values);
  chain.steps.push_back(step);
  chain.accepted_flags.push_back(accepted ? 1 : 0);
  chain.log_z_values.push_back(log_z);
}

}  // namespace

std::unique_ptr<LogZApproximator> make_exact_logz(int cap) {
  return std::make_unique<ExactLogZ>(cap);
}
std::unique_ptr<LogZApproximator> make_mean_field_logz(MeanFieldOptions opts) {
  return std::make_unique<MeanFieldLogZ>(opts);
}
std::unique_ptr<LogZApproximator> make_tree_logz(TreeBoundOptions opts) {
  return std::make_unique<TreeLogZ>(opts);
}
std::unique_ptr<LogZApproximator> make_bethe_logz(BpOptions opts, bool warm_start) {
  return std::make_unique<BetheLogZ>(opts, warm_start);
}

std::unique_ptr<MomentEstimator> make_exact_moment_estimator(int cap) {
  return std::make_unique<ExactMomentEstimator>(cap);
}
std::unique_ptr<MomentEstimator> make_brief_moment_estimator(DataSet data, int n_sweeps) {
  return std::make_unique<BriefMomentEstimator>(std::move(data), n_sweeps);
}
std::unique_ptr<MomentEstimator> make_long_run_moment_estimator(StateChainConfig config) {
  return std::make_unique<LongRunMomentEstimator>(config);
}
std::unique_ptr<MomentEstimator> make_bp_moment_estimator(BpOptions opts, bool warm_start) {
  return std::make_unique<BpMomentEstimator>(opts, warm_start);
}
std::unique_ptr<MomentEstimator> make_mean_field_moment_estimator(MeanFieldOptions opts) {
  return std::make_unique<MeanFieldMomentEstimator>(opts);
}

double metropolis_log_accept(const ParamVector& current, const ParamVector& proposed,
                             double log_z_current, double log_z_proposed,
                             const SuffStats& suff, const GaussianPrior& prior) {
  if (current.layout != proposed.layout)
    throw std::invalid_argument("metropolis_log_accept: layouts differ");
  const double delta_prior = log_prior(prior, proposed) - log_prior(prior, current);
  const double delta_dot = theta_dot_suff(proposed, suff) - theta_dot_suff(current, suff);
  const double n = static_cast<double>(suff.n_rows);
  return delta_prior + delta_dot - n * (log_z_proposed - log_z_current);
}

MetropolisResult metropolis_step(const ParamVector& params, double log_z_current,
                                 const SuffStats& suff, const GaussianPrior& prior,
                                 const ProposalConfig& proposal, std::uint64_t step_index,
                                 LogZApproximator& logz, Rng& rng,
                                 NonConvergencePolicy policy,
                                 std::span<const std::size_t> free_coords) {
  validate_proposal(proposal);
  ParamVector proposed = propose(params, proposal, step_index, rng, free_coords);
  const LogZApproximator::Value value =
      logz.evaluate(devectorize(proposed.layout, proposed.values));

  MetropolisResult out;
  out.diag.log_z_current = log_z_current;
  out.diag.log_z_proposed = value.log_z;
  out.diag.approx_converged = value.converged;
  if (!value.converged && policy == NonConvergencePolicy::AutoReject) {
    out.params = params;
    out.log_z_next = log_z_current;
    out.diag.auto_rejected = true;
    return out;
  }

  const double log_a = metropolis_log_accept(params, proposed, log_z_current,
                                             value.log_z, suff, prior);
  if (std::isnan(log_a)) {
    out.params = params;
    out.log_z_next = log_z_current;
    out.diag.auto_rejected = true;
    return out;
  }
  if (accept_draw(log_a, rng)) {
    out.params = std::move(proposed);
    out.accepted = true;
    out.log_z_next = value.log_z;
  } else {
    out.params = params;
    out.log_z_next = log_z_current;
  }
  return out;
}

MetropolisResult ratio_metropolis_step(const ParamVector& params, const SuffStats& suff,
                                       const GaussianPrior& prior,
                                       const ProposalConfig& proposal,
                                       std::uint64_t step_index, const RatioConfig& ratio,
                                       Rng& rng,
                                       std::span<const std::size_t> free_coords) {
  validate_proposal(proposal);
  if (ratio.n_inner_samples < 1)
    throw std::invalid_argument("RatioConfig: n_inner_samples must be positive");
  if (ratio.inner_burn_in < 0)
    throw std::invalid_argument("RatioConfig: inner_burn_in must be non-negative");

  ParamVector proposed = propose(params, proposal, step_index, rng, free_coords);
  const Model current_model = devectorize(params.layout, params.values);
  const Model proposed_model = devectorize(proposed.layout, proposed.values);

  // log of the Z(current)/Z(proposed) estimate, expectations under
  // p(s | proposed).
  double log_r;
  if (ratio.inner == RatioInner::Exhaustive) {
    // The importance weight times the integrand collapses to
    // exp(log_unnorm(current, s) - log Z(proposed)); summing it over all
    // states gives the expectation exactly.
    const double log_zp = exact_logZ(proposed_model, ratio.cap);
    double mean = 0.0;
    State s(static_cast<std::size_t>(params.layout.k));
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << params.layout.k); ++bits) {
      for (int i = 0; i < params.layout.k; ++i) s[i] = (bits >> i) & 1u;
      mean += std::exp(log_unnorm(current_model, s) - log_zp);
    }
    log_r = std::log(mean);
  } else {
    State s = random_state(params.layout.k, rng);
    for (int sweep = 0; sweep < ratio.inner_burn_in; ++sweep)
      gibbs_sweep(proposed_model, s, rng);
    std::vector<State> states;
    states.reserve(static_cast<std::size_t>(ratio.n_inner_samples));
    for (int n = 0; n < ratio.n_inner_samples; ++n) {
      gibbs_sweep(proposed_model, s, rng);
      states.push_back(s);
    }
    log_r = std::log(ratio_estimate(current_model, proposed_model, states));
  }

  MetropolisResult out;
  out.diag.log_z_current = kNaN;
  out.diag.log_z_proposed = kNaN;
  if (!std::isfinite(log_r)) {
    out.params = params;
    out.diag.auto_rejected = true;
    return out;
  }

  const double delta_prior = log_prior(prior, proposed) - log_prior(prior, params);
  const double delta_dot = theta_dot_suff(proposed, suff) - theta_dot_suff(params, suff);
  const double log_a =
      delta_prior + delta_dot + static_cast<double>(suff.n_rows) * log_r;
  if (accept_draw(log_a, rng)) {
    out.params = std::move(proposed);
    out.accepted = true;
  } else {
    out.params = params;
  }
  return out;
}

ParamVector langevin_step(const ParamVector& params, const SuffStats& suff,
                          const GaussianPrior& prior, MomentEstimator& moments,
                          double epsilon, Rng& rng,
                          std::span<const std::size_t> free_coords) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("langevin_step: epsilon must be positive");
  validate_free_coords(free_coords, params.layout);
  const Model model = devectorize(params.layout, params.values);
  const MomentEstimate est = moments.estimate(model, rng);
  const std::vector<double> grad =
      grad_log_joint(suff, prior, params, est.edge_moments, est.node_moments);
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("langevin_step: non-finite gradient");

  ParamVector next = params;
  const double half_eps2 = 0.5 * epsilon * epsilon;
  const auto update = [&](std::size_t c) {
    next.values[c] += half_eps2 * grad[c] + epsilon * normal01(rng);
  };
  if (free_coords.empty()) {
    for (std::size_t c = 0; c < next.values.size(); ++c) update(c);
  } else {
    for (std::size_t c : free_coords) update(c);
  }
  return next;
}

Chain run_metropolis_chain(const ChainConfig& config, const DataSet& data,
                           const GaussianPrior& prior, const ParamLayout& layout,
                           LogZApproximator& logz) {
  validate_chain_config(config, layout);
  validate_proposal(config.proposal);
  validate_prior(prior);
  const SuffStats suff = suff_stats(data, layout);

  Chain chain;
  chain.layout = layout;
  chain.step_size = config.proposal.std_dev;
  chain.seed = config.seed;
  chain.method = "metropolis:" + logz.tag();

  Rng rng = make_rng(config.seed);
  ParamVector params = initial_params(config, layout);
  logz.reset();
  LogZApproximator::Value v = logz.evaluate(devectorize(layout, params.values));
  if (!v.converged) ++chain.nonconverged_steps;
  double log_z = v.log_z;

  for (std::int64_t step = 1; step <= config.iterations; ++step) {
    MetropolisResult r =
        metropolis_step(params, log_z, suff, prior, config.proposal,
                        static_cast<std::uint64_t>(step - 1), logz, rng, config.policy,
                        config.free_coords);
    params = std::move(r.params);
    log_z = r.log_z_next;
    ++chain.propose_count;
    if (r.accepted) ++chain.accept_count;
    if (!r.diag.approx_converged) ++chain.nonconverged_steps;
    if (r.diag.auto_rejected) ++chain.auto_rejected_steps;
    if (step % config.thinning == 0) store_sample(chain, step, params, r.accepted, log_z);
  }
  return chain;
}

Chain run_ratio_chain(const ChainConfig& config, const DataSet& data,
                      const GaussianPrior& prior, const ParamLayout& layout) {
  validate_chain_config(config, layout);
  validate_proposal(config.proposal);
  validate_prior(prior);
  const SuffStats suff = suff_stats(data, layout);

  Chain chain;
  chain.layout = layout;
  chain.step_size = config.proposal.std_dev;
  chain.seed = config.seed;
  chain.method = config.ratio.inner == RatioInner::Exhaustive
                     ? "ratio-metropolis:exhaustive"
                     : "ratio-metropolis:gibbs";

  Rng rng = make_rng(config.seed);
  ParamVector params = initial_params(config, layout);
  for (std::int64_t step = 1; step <= config.iterations; ++step) {
    MetropolisResult r =
        ratio_metropolis_step(params, suff, prior, config.proposal,
                              static_cast<std::uint64_t>(step - 1), config.ratio, rng,
                              config.free_coords);
    params = std::move(r.params);
    ++chain.propose_count;
    if (r.accepted) ++chain.accept_count;
    if (r.diag.auto_rejected) ++chain.auto_rejected_steps;
    if (step % config.thinning == 0) store_sample(chain, step, params, r.accepted, kNaN);
  }
  return chain;
}

Chain run_langevin_chain(const ChainConfig& config, const DataSet& data,
                         const GaussianPrior& prior, const ParamLayout& layout,
                         MomentEstimator& moments) {
  validate_chain_config(config, layout);
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon))
    throw std::invalid_argument("ChainConfig: epsilon must be positive");
  validate_prior(prior);
  const SuffStats suff = suff_stats(data, layout);

  Chain chain;
  chain.layout = layout;
  chain.step_size = config.epsilon;
  chain.seed = config.seed;
  chain.method = "langevin:" + moments.tag();

  Rng rng = make_rng(config.seed);
  ParamVector params = initial_params(config, layout);
  moments.reset();
  for (std::int64_t step = 1; step <= config.iterations; ++step) {
    params = langevin_step(params, suff, prior, moments, config.epsilon, rng,
                           config.free_coords);
    ++chain.propose_count;
    ++chain.accept_count;
    if (step % config.thinning == 0) store_sample(chain, step, params, true, kNaN);
  }
  return chain;
}

Chain sample_prior_chain(const GaussianPrior& prior, const ParamLayout& layout,
                         std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_prior_chain: n must be positive");
  validate_prior(prior);

  Chain chain;
  chain.layout = layout;
  chain.seed = seed;
  chain.method = "prior";

  Rng rng = make_rng(seed);
  const double w_std = std::sqrt(prior.weight_variance);
  const double b_std = std::sqrt(prior.bias_variance);
  for (std::int64_t i = 1; i <= n; ++i) {
    std::vector<double> values(layout.size());
    for (std::size_t c = 0; c < values.size(); ++c)
      values[c] = (c < layout.n_edges() ? w_std : b_std) * normal01(rng);
    chain.samples.push_back(std::move(values));
    chain.steps.push_back(i);
    chain.accepted_flags.push_back(1);
    chain.log_z_values.push_back(kNaN);
  }
  chain.accept_count = n;
  chain.propose_count = n;
  return chain;
}

std::string chain_to_jsonl(const Chain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    nlohmann::json diag = nlohmann::json::object();
    if (std::isfinite(chain.log_z_values[i])) diag["log_z"] = chain.log_z_values[i];
    const nlohmann::json record = {
        {"step", chain.steps[i]},
        {"params", chain.samples[i]},
        {"accepted", chain.accepted_flags[i] != 0},
        {"diagnostics", diag},
    };
    out += record.dump();
    out += '\n';
  }
  return out;
}

HistogramTable chain_histograms(const Chain& chain, int bins) {
  if (bins < 2) throw std::invalid_argument("chain_histograms: bins must be at least 2");
  if (chain.samples.empty())
    throw std::invalid_argument("chain_histograms: chain has no samples");

  const std::size_t size = chain.layout.size();
  HistogramTable table;
  table.layout = chain.layout;
  table.bin_edges.resize(size);
  table.counts.resize(size);

  for (std::size_t c = 0; c < size; ++c) {
    double lo = chain.samples[0][c], hi = lo;
    for (const auto& s : chain.samples) {
      lo = std::min(lo, s[c]);
      hi = std::max(hi, s[c]);
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto& edges = table.bin_edges[c];
    edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b)
      edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    auto& counts = table.counts[c];
    counts.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& s : chain.samples) {
      const double t = (s[c] - lo) / (hi - lo) * bins;
      const int b = std::clamp(static_cast<int>(t), 0, bins - 1);
      ++counts[b];
    }
  }
  return table;
}

double overlap_coefficient(const std::vector<double>& a, const std::vector<double>& b,
                           int bins) {
  if (bins < 2) throw std::invalid_argument("overlap_coefficient: bins must be at least 2");
  if (a.empty() || b.empty())
    throw std::invalid_argument("overlap_coefficient: sample sets must be non-empty");

  double lo = a[0], hi = a[0];
  for (double v : a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : b) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) return 1.0;

  std::vector<double> pa(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> pb(static_cast<std::size_t>(bins), 0.0);
  const auto add = [&](std::vector<double>& p, const std::vector<double>& s) {
    for (double v : s) {
      const double t = (v - lo) / (hi - lo) * bins;
      ++p[static_cast<std::size_t>(std::clamp(static_cast<int>(t), 0, bins - 1))];
    }
    for (double& m : p) m /= static_cast<double>(s.size());
  };
  add(pa, a);
  add(pb, b);

  double overlap = 0.0;
  for (int bin = 0; bin < bins; ++bin) overlap += std::min(pa[bin], pb[bin]);
  return overlap;
}

std::vector<double> f_curve(const Chain& chain, const ParamVector& true_params,
                            double tol) {
  if (chain.layout != true_params.layout)
    throw std::invalid_argument("f_curve: layouts differ");
  if (!(tol > 0.0)) throw std::invalid_argument("f_curve: tol must be positive");
  if (chain.samples.empty()) throw std::invalid_argument("f_curve: chain has no samples");

  std::vector<double> fractions(chain.layout.size(), 0.0);
  for (const auto& s : chain.samples)
    for (std::size_t c = 0; c < fractions.size(); ++c)
      if (std::abs(s[c] - true_params.values[c]) <= tol) fractions[c] += 1.0;
  for (double& f : fractions) f /= static_cast<double>(chain.samples.size());
  std::sort(fractions.begin(), fractions.end());
  return fractions;
}

}  // namespace bmb
