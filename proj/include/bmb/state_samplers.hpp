#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmb/model.hpp"
#include "bmb/rng.hpp"

// MCMC over variable states at fixed parameters: Gibbs sweeps, brief
// data-initialized chains, long-run moment estimation, Swendsen-Wang for
// non-negative agreement couplings, and the sample-mean partition ratio
// estimator.

namespace bmb {

enum class ScanOrder { Systematic, Random };

struct StateChainConfig {
  int n_sweeps = 1000;
  int burn_in = 100;
  std::uint64_t seed = 0;
  ScanOrder order = ScanOrder::Systematic;
};

struct MomentEstimate {
  std::vector<double> node_moments;  // <s_i>
  std::vector<double> edge_moments;  // <s_i s_j>, model edge order
  std::int64_t n_samples = 0;
  std::string source;
};

// One pass of single-site heat-bath updates, p(s_i=1 | rest) =
// sigmoid(sum_j W_ij s_j + b_i). Systematic order visits nodes 0..k-1;
// Random draws k node indices.
void gibbs_sweep(const Model& model, State& state, Rng& rng,
                 ScanOrder order = ScanOrder::Systematic);

// k fair coin flips; the standard chain initialization.
State random_state(int k, Rng& rng);

// One short chain per data point (row multiplicities expand to that many
// independent chains), each initialized at its row and advanced n_sweeps
// Gibbs sweeps; moments are averaged over the final states. Every chain runs
// on its own substream derived from one draw of rng, so the estimate does
// not depend on how duplicate rows were compacted into counts.
MomentEstimate brief_moments(const Model& model, const DataSet& data, int n_sweeps,
                             Rng& rng, ScanOrder order = ScanOrder::Systematic);

// Moments accumulated over config.n_sweeps sweeps of one persistent chain
// after config.burn_in discarded sweeps, starting from a random state.
MomentEstimate long_run_moments(const Model& model, const StateChainConfig& config,
                                Rng& rng);

// Agreement model over binary labels: p(s) proportional to
// exp(sum_{(i,j)} W_ij [s_i == s_j]) with every W_ij >= 0, the form
// Swendsen-Wang cluster updates are valid for.
class CouplingGraph {
 public:
  CouplingGraph(int k, std::vector<Edge> couplings);

  int k() const { return k_; }
  const std::vector<Edge>& couplings() const { return couplings_; }

 private:
  int k_;
  std::vector<Edge> couplings_;
};

// One cluster update: bonds drawn with probability 1 - exp(-W_ij) on
// currently agreeing pairs, bond clusters relabelled uniformly. A cluster is
// always monochromatic in the current state. Nodes flagged in frozen keep
// their labels, and so does any cluster containing one (the conditional
// update given those labels).
void swendsen_wang_sweep(const CouplingGraph& graph, State& state, Rng& rng,
                         std::span<const std::uint8_t> frozen = {});

// Sample mean of exp{sum (W_ij - W'_ij) s_i s_j + sum (b_i - b'_i) s_i} over
// states drawn from p(s | W'), estimating Z(W) / Z(W'). The two models must
// share a parameter layout.
double ratio_estimate(const Model& model, const Model& model_prime,
                      const std::vector<State>& states);

}  // namespace bmb
