#include "bmb/state_samplers.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bmb/util.hpp"

namespace bmb {

namespace {

void resample_node(const Model& model, State& state, Rng& rng, int node) {
  double field = model.biases()[node];
  for (const Model::Neighbor& nb : model.neighbors(node)) {
    if (state[nb.node]) field += nb.w;
  }
  state[node] = bernoulli(rng, sigmoid(field)) ? 1 : 0;
}

struct MomentAccumulator {
  std::vector<double> node_sums;
  std::vector<double> edge_sums;
  double total_weight = 0.0;

  explicit MomentAccumulator(const Model& model)
      : node_sums(model.k(), 0.0), edge_sums(model.edges().size(), 0.0) {}

  void add(const Model& model, const State& state, double weight) {
    for (int i = 0; i < model.k(); ++i) {
      if (state[i]) node_sums[i] += weight;
    }
    const auto& edges = model.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (state[edges[e].i] && state[edges[e].j]) edge_sums[e] += weight;
    }
    total_weight += weight;
  }

  MomentEstimate finish(std::int64_t n_samples, std::string source) const {
    MomentEstimate est;
    est.node_moments = node_sums;
    est.edge_moments = edge_sums;
    for (double& v : est.node_moments) v /= total_weight;
    for (double& v : est.edge_moments) v /= total_weight;
    est.n_samples = n_samples;
    est.source = std::move(source);
    return est;
  }
};

int uf_find(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

void gibbs_sweep(const Model& model, State& state, Rng& rng, ScanOrder order) {
  if (static_cast<int>(state.size()) != model.k())
    throw std::invalid_argument("gibbs_sweep: state length mismatch");
  if (order == ScanOrder::Systematic) {
    for (int i = 0; i < model.k(); ++i) resample_node(model, state, rng, i);
  } else {
    for (int n = 0; n < model.k(); ++n)
      resample_node(model, state, rng, static_cast<int>(uniform_below(rng, model.k())));
  }
}

State random_state(int k, Rng& rng) {
  if (k <= 0) throw std::invalid_argument("random_state: node count must be positive");
  State state(static_cast<std::size_t>(k));
  for (auto& s : state) s = bernoulli(rng, 0.5) ? 1 : 0;
  return state;
}

MomentEstimate brief_moments(const Model& model, const DataSet& data, int n_sweeps,
                             Rng& rng, ScanOrder order) {
  if (data.k() != model.k())
    throw std::invalid_argument("brief_moments: data width does not match model");
  if (!data.fully_observed())
    throw std::invalid_argument("brief_moments: hidden entries present");
  if (n_sweeps < 1)
    throw std::invalid_argument("brief_moments: n_sweeps must be positive");

  // One substream per chain, derived from a single master draw, so the
  // estimate is a pure function of (data, n_sweeps, rng state) regardless of
  // how rows are grouped.
  const std::uint64_t master = rng();
  MomentAccumulator acc(model);
  std::uint64_t unit = 0;
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    const auto& row = data.row(r);
    for (std::int64_t rep = 0; rep < data.count(r); ++rep, ++unit) {
      Rng chain_rng = make_rng(derive_seed(master, unit));
      State state(row.begin(), row.end());
      for (int s = 0; s < n_sweeps; ++s) gibbs_sweep(model, state, chain_rng, order);
      acc.add(model, state, 1.0);
    }
  }
  return acc.finish(data.total_count(), "brief");
}

MomentEstimate long_run_moments(const Model& model, const StateChainConfig& config,
                                Rng& rng) {
  if (config.n_sweeps < 1)
    throw std::invalid_argument("long_run_moments: n_sweeps must be positive");
  if (config.burn_in < 0)
    throw std::invalid_argument("long_run_moments: burn_in must be non-negative");

  State state = random_state(model.k(), rng);
  for (int s = 0; s < config.burn_in; ++s) gibbs_sweep(model, state, rng, config.order);
  MomentAccumulator acc(model);
  for (int s = 0; s < config.n_sweeps; ++s) {
    gibbs_sweep(model, state, rng, config.order);
    acc.add(model, state, 1.0);
  }
  return acc.finish(config.n_sweeps, "long_run");
}

CouplingGraph::CouplingGraph(int k, std::vector<Edge> couplings)
    : k_(k), couplings_(std::move(couplings)) {
  if (k_ <= 0) throw std::invalid_argument("CouplingGraph: node count must be positive");
  for (const Edge& e : couplings_) {
    if (e.i < 0 || e.j >= k_)
      throw std::invalid_argument("CouplingGraph: coupling index out of range");
    if (e.i >= e.j) throw std::invalid_argument("CouplingGraph: coupling must have i < j");
    if (!std::isfinite(e.w) || e.w < 0.0)
      throw std::invalid_argument("CouplingGraph: couplings must be finite and non-negative");
  }
}

void swendsen_wang_sweep(const CouplingGraph& graph, State& state, Rng& rng,
                         std::span<const std::uint8_t> frozen) {
  const int k = graph.k();
  if (static_cast<int>(state.size()) != k)
    throw std::invalid_argument("swendsen_wang_sweep: state length mismatch");
  if (!frozen.empty() && static_cast<int>(frozen.size()) != k)
    throw std::invalid_argument("swendsen_wang_sweep: frozen mask length mismatch");

  std::vector<int> parent(static_cast<std::size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  for (const Edge& e : graph.couplings()) {
    if (state[e.i] != state[e.j]) continue;
    if (!bernoulli(rng, -std::expm1(-e.w))) continue;
    int ra = uf_find(parent, e.i);
    int rb = uf_find(parent, e.j);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::vector<std::uint8_t> keep(static_cast<std::size_t>(k), 0);
  if (!frozen.empty()) {
    for (int i = 0; i < k; ++i)
      if (frozen[i]) keep[uf_find(parent, i)] = 1;
  }
  // A cluster only joins agreeing nodes, so state[root] is the label of the
  // whole cluster; frozen clusters keep it, free ones flip a fair coin.
  std::vector<std::uint8_t> label(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    if (uf_find(parent, i) != i) continue;
    label[i] = keep[i] ? state[i] : (bernoulli(rng, 0.5) ? 1 : 0);
  }
  for (int i = 0; i < k; ++i) state[i] = label[uf_find(parent, i)];
}

double ratio_estimate(const Model& model, const Model& model_prime,
                      const std::vector<State>& states) {
  if (states.empty())
    throw std::invalid_argument("ratio_estimate: state list must be non-empty");
  ParamVector theta = vectorize(model);
  const ParamVector theta_prime = vectorize(model_prime);
  if (theta.layout != theta_prime.layout)
    throw std::invalid_argument("ratio_estimate: models must share a parameter layout");
  for (std::size_t c = 0; c < theta.values.size(); ++c)
    theta.values[c] -= theta_prime.values[c];
  const Model delta = devectorize(theta.layout, theta.values);

  double sum = 0.0;
  for (const State& s : states) sum += std::exp(log_unnorm(delta, s));
  return sum / static_cast<double>(states.size());
}

}  // namespace bmb
