#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "bmb/model.hpp"

// Deterministic approximations to log Z and moments: naive mean-field lower
// bound, tree-structured variational lower bound, loopy belief propagation
// with the Bethe free energy, and pseudo-log-likelihood.

namespace bmb {

struct InferenceResult {
  double log_z_estimate = 0.0;
  std::vector<double> node_marginals;  // <s_i>
  std::vector<double> edge_moments;    // <s_i s_j>, model edge order
  bool converged = false;
  int iterations = 0;
  std::string method;
  // Bound value after each sweep; filled by the two bound optimizers so
  // callers can check monotone ascent. Empty for BP.
  std::vector<double> bound_trace;

  std::string to_json() const;
};

struct MeanFieldOptions {
  double damping = 0.0;
  double tol = 1e-10;
  int max_iter = 1000;
};

// Fixed point of m_i <- sigmoid(sum_j W_ij m_j + b_i), swept sequentially in
// node order; the returned log_z_estimate is the variational lower bound
//   F = sum_{ij} W_ij m_i m_j + sum_i b_i m_i + sum_i H(m_i) <= log Z.
// init gives starting marginals in (0,1); empty means all 1/2.
InferenceResult mean_field(const Model& model, std::span<const double> init = {},
                           const MeanFieldOptions& opts = {});

// Spanning tree/forest of the model graph, as indices into model.edges().
struct TreeStructure {
  std::vector<int> edges;
};

// Maximum-|w| spanning forest by greedy insertion; ties broken toward
// lexicographically smaller (i, j), so equal-weight cycles drop their
// lexicographically largest edge.
TreeStructure select_tree(const Model& model);

struct TreeBoundOptions {
  double tol = 1e-7;
  int max_iter = 200;
  // Smallest coordinate-ascent step; the bound stays valid at any value, a
  // coarser floor just trades tightness for fewer objective evaluations.
  double step_floor = 1e-6;
  // Starting point: empty projects the model itself onto the tree (tree-edge
  // weights and all biases copied, exact whenever the model is the tree);
  // otherwise a length-k marginal vector selecting the factorized
  // distribution with those marginals.
  std::vector<double> init_marginals;
};

// Optimizer state: one coupling per tree edge followed by one field per
// node. Pass to warm-start from a previous solution and read back the
// optimum; contents override TreeBoundOptions::init_marginals when sized.
struct TreeBoundState {
  std::vector<double> lambda;
};

// Maximizes the same functional as mean_field over distributions that factor
// along the given tree, by monotone coordinate ascent on the tree's couplings
// and fields with exact sum-product inside. Returns a lower bound on log Z
// no matter when iteration stops.
InferenceResult tree_bound(const Model& model, const TreeStructure& tree,
                           const TreeBoundOptions& opts = {},
                           TreeBoundState* state = nullptr);

enum class BpSchedule { Parallel, Sequential };

struct BpOptions {
  BpSchedule schedule = BpSchedule::Parallel;
  double damping = 0.5;
  double tol = 1e-8;
  int max_iter = 500;
};

// Messages live on directed edges: index 2e is i->j of model edge e=(i,j),
// 2e+1 is j->i; the stored value is the message's probability of the target
// being 1. Pass to warm-start BP across calls and read back the final
// messages.
struct BpState {
  std::vector<double> messages;
};

// Sum-product message passing on the pairwise model. log_z_estimate is minus
// the Bethe free energy of the final beliefs; converged reports whether the
// message residual fell below tol. Non-convergence is in-band, never an
// exception: the estimate is still returned and callers decide policy.
InferenceResult loopy_bp(const Model& model, const BpOptions& opts = {},
                         BpState* state = nullptr);

// Pairwise-model Bethe free energy (an approximation to -log Z) of the given
// beliefs. edge_beliefs[e][2*si + sj] is the joint of model edge e's
// endpoints; each must marginalize to the corresponding node beliefs within
// consistency_tol.
double bethe_free_energy(const Model& model, std::span<const double> node_beliefs,
                         std::span<const std::array<double, 4>> edge_beliefs,
                         double consistency_tol = 1e-6);

// sum_n sum_i log p(s_i | s_-i, W): every conditional is logistic in the
// neighbors, so this needs no partition function at all.
double pseudo_log_likelihood(const Model& model, const DataSet& data);

}  // namespace bmb
