#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmb/model.hpp"
#include "bmb/rng.hpp"

// Brute-force enumeration over all 2^k states: exact partition functions,
// moments, i.i.d. samples and low-dimensional exact parameter posteriors.
// Feasible for k up to ~20; used as the exact Metropolis inner loop and as
// the oracle every approximation is tested against.

namespace bmb {

inline constexpr int kDefaultEnumCap = 20;

struct ExactMoments {
  double log_z = 0.0;
  std::vector<double> node_marginals;  // <s_i>
  std::vector<double> edge_moments;    // <s_i s_j> in model edge order
};

// log sum_s exp(log_unnorm(s)), running-max log-sum-exp. States are
// enumerated as bit patterns with node i stored in bit i.
double exact_logZ(const Model& model, int cap = kDefaultEnumCap);

ExactMoments exact_moments(const Model& model, int cap = kDefaultEnumCap);

// n i.i.d. draws by inverse CDF over the enumerated distribution.
std::vector<State> exact_sample(const Model& model, Rng& rng, int n,
                                int cap = kDefaultEnumCap);

// Regular grid over 1 or 2 free parameter coordinates; n evaluation points
// per axis including both endpoints.
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
};

// Exact posterior p(theta|S) over 1-2 free coordinates of the layout, all
// other coordinates clamped at model_template's values. values[] holds
// trapezoid-weighted masses (weight 1/2 at axis endpoints), normalized to
// sum to 1; entry (a, b) of a 2-d grid lives at values[a * n1 + b].
struct PosteriorGrid {
  std::vector<int> free_coords;
  std::vector<GridSpec> specs;
  std::vector<double> axis0;
  std::vector<double> axis1;  // empty for 1-d grids
  std::vector<double> values;
};

PosteriorGrid exact_posterior_grid(const Model& model_template,
                                   const std::vector<int>& free_coords,
                                   const DataSet& data, const GaussianPrior& prior,
                                   const std::vector<GridSpec>& specs,
                                   int cap = kDefaultEnumCap);

// CSV dump (theta1, theta2, density) for plotting; theta2 column omitted
// for 1-d grids.
std::string posterior_grid_csv(const PosteriorGrid& grid);

// Exact posterior mass per histogram bin for a single free coordinate,
// integrating exp(log posterior) over each [edges[b], edges[b+1]) with a
// composite trapezoid rule (`subdiv` panels per bin). Normalized over the
// binned range. Used to compare sampler histograms against the truth.
std::vector<double> posterior_bin_masses(const Model& model_template, int free_coord,
                                         const DataSet& data, const GaussianPrior& prior,
                                         const std::vector<double>& bin_edges,
                                         int subdiv = 8, int cap = kDefaultEnumCap);

}  // namespace bmb
