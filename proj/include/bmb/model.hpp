#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Pairwise binary undirected models ("Boltzmann machines"): the model
// representation, parameter vectorization, data sets with sufficient
// statistics, the Gaussian prior, and the exact joint log-probability
// gradient that every parameter sampler consumes.

namespace bmb {

// One undirected edge i-j (i < j) with weight w.
struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

// Binary configuration of the variables; entries are 0 or 1.
using State = std::vector<std::uint8_t>;

// Marker for an unobserved entry in a data row.
inline constexpr std::int8_t kHidden = -1;

class Model {
 public:
  struct Neighbor {
    int node;
    double w;
    int edge;  // index into edges()
  };

  // Validates invariants: indices in range, i < j, no duplicate pairs,
  // finite weights/biases. Edges are stored sorted lexicographically, so
  // two models over the same graph share coordinate order.
  Model(int k, std::vector<Edge> edges, std::vector<double> biases);

  int k() const { return k_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& biases() const { return biases_; }
  const std::vector<Neighbor>& neighbors(int node) const { return adjacency_[node]; }

  std::string to_json() const;
  static Model from_json(const std::string& text);

 private:
  int k_;
  std::vector<Edge> edges_;
  std::vector<double> biases_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Coordinate order of a flattened parameter vector: edge weights in
// lexicographic (i, j) order, then biases by node index.
struct ParamLayout {
  int k = 0;
  std::vector<std::pair<int, int>> edge_order;

  bool operator==(const ParamLayout&) const = default;
  std::size_t n_edges() const { return edge_order.size(); }
  std::size_t size() const { return edge_order.size() + static_cast<std::size_t>(k); }
  std::string coord_name(std::size_t idx) const;
};

struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;  // edge weights, then biases
};

ParamVector vectorize(const Model& model);
Model devectorize(const ParamLayout& layout, const std::vector<double>& values);

// N rows of length k with entries in {0, 1, kHidden}; counts are per-row
// multiplicities so contingency tables stay compact.
class DataSet {
 public:
  DataSet(int k, std::vector<std::vector<std::int8_t>> rows,
          std::vector<std::int64_t> counts = {});

  int k() const { return k_; }
  std::size_t n_distinct() const { return rows_.size(); }
  std::int64_t total_count() const { return total_count_; }  // N
  const std::vector<std::int8_t>& row(std::size_t r) const { return rows_[r]; }
  std::int64_t count(std::size_t r) const { return counts_[r]; }
  bool row_fully_observed(std::size_t r) const;
  bool fully_observed() const;

 private:
  int k_;
  std::vector<std::vector<std::int8_t>> rows_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_count_;
};

struct GaussianPrior {
  double weight_variance = 1.0;
  double bias_variance = 1.0;
};

void validate_prior(const GaussianPrior& prior);

// Per-edge and per-node data sums; integer-exact.
struct SuffStats {
  std::vector<std::int64_t> edge_sums;  // sum_n s_i s_j, in layout edge order
  std::vector<std::int64_t> node_sums;  // sum_n s_i
  std::int64_t n_rows = 0;              // N
};

// Exponent of the pairwise model: sum_{i<j} W_ij s_i s_j + sum_i b_i s_i.
double log_unnorm(const Model& model, std::span<const std::uint8_t> state);

// Requires fully observed data; hidden entries must go through the
// hidden-variable module instead.
SuffStats suff_stats(const DataSet& data, const ParamLayout& layout);

// Log Gaussian prior density up to its normalizing constant.
double log_prior(const GaussianPrior& prior, const ParamVector& params);
std::vector<double> grad_log_prior(const GaussianPrior& prior, const ParamVector& params);

// Gradient of log p(S, theta): per edge  sum_n s_i s_j - N <s_i s_j> - w/var_w,
// per bias  sum_n s_i - N <s_i> - b/var_b. Expectations must lie in [0, 1].
std::vector<double> grad_log_joint(const SuffStats& suff, const GaussianPrior& prior,
                                   const ParamVector& params,
                                   std::span<const double> edge_expect,
                                   std::span<const double> node_expect);

}  // namespace bmb
