#pragma once

#include <functional>
#include <vector>

#include "bmb/model.hpp"
#include "bmb/rng.hpp"

// Independent reference implementations used only by tests. Deliberately
// naive: direct sums, dense matrices, O(4^k) loops. Never call these from
// library code.

namespace bmb::oracle {

// Partition function by direct summation of exp(energies), no log-sum-exp.
// Overflows for large weights; fine for the small models tests use.
double naive_logZ(const Model& model);

// (f(x+h) - f(x-h)) / (2h).
double central_difference(const std::function<double(double)>& f, double x, double h);

// log p(S, theta) up to a theta-independent constant, assembled from parts
// the library exposes separately.
double naive_log_joint(const Model& model, const DataSet& data,
                       const GaussianPrior& prior);

// 0.5 * sum |a_i - b_i|; inputs must have equal length.
double tv_distance(const std::vector<double>& a, const std::vector<double>& b);

// Histogram masses over [edges[b], edges[b+1]) bins, normalized by the total
// sample count, so mass falling outside the binned range is simply missing.
std::vector<double> histogram_masses(const std::vector<double>& samples,
                                     const std::vector<double>& bin_edges);

// n+1 equally spaced edges covering [lo, hi].
std::vector<double> linspace_edges(double lo, double hi, int n_bins);

// Dense 2^k x 2^k transition matrix of one systematic Gibbs sweep
// (nodes updated in index order 0..k-1). Entry [s][t] = P(sweep: s -> t).
std::vector<std::vector<double>> gibbs_sweep_matrix(const Model& model);

// Uniformly random model: each pair i<j is an edge with probability
// edge_prob, weights and biases ~ N(0, scale^2).
Model random_model(Rng& rng, int k, double edge_prob, double scale);

}  // namespace bmb::oracle
