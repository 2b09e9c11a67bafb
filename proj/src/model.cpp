#include "bmb/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace bmb {

Model::Model(int k, std::vector<Edge> edges, std::vector<double> biases)
    : k_(k), edges_(std::move(edges)), biases_(std::move(biases)) {
  if (k_ <= 0) throw std::invalid_argument("Model: node count must be positive");
  if (static_cast<int>(biases_.size()) != k_)
    throw std::invalid_argument("Model: bias vector length must equal node count");
  for (double b : biases_)
    if (!std::isfinite(b)) throw std::invalid_argument("Model: non-finite bias");

  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= k_ || e.j >= k_)
      throw std::invalid_argument("Model: edge index out of range");
    if (e.i == e.j) throw std::invalid_argument("Model: self-edge");
    if (e.i > e.j) throw std::invalid_argument("Model: edge must have i < j");
    if (!std::isfinite(e.w)) throw std::invalid_argument("Model: non-finite weight");
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return std::pair(a.i, a.j) < std::pair(b.i, b.j);
  });
  for (std::size_t e = 1; e < edges_.size(); ++e)
    if (edges_[e - 1].i == edges_[e].i && edges_[e - 1].j == edges_[e].j)
      throw std::invalid_argument("Model: duplicate edge");

  adjacency_.resize(k_);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    adjacency_[edges_[e].i].push_back({edges_[e].j, edges_[e].w, static_cast<int>(e)});
    adjacency_[edges_[e].j].push_back({edges_[e].i, edges_[e].w, static_cast<int>(e)});
  }
}

std::string Model::to_json() const {
  nlohmann::json j;
  j["k"] = k_;
  auto edges = nlohmann::json::array();
  for (const Edge& e : edges_) edges.push_back({e.i, e.j, e.w});
  j["edges"] = edges;
  j["biases"] = biases_;
  return j.dump();
}

Model Model::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::vector<Edge> edges;
  for (const auto& t : j.at("edges"))
    edges.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>()});
  return Model(j.at("k").get<int>(), std::move(edges),
               j.at("biases").get<std::vector<double>>());
}

std::string ParamLayout::coord_name(std::size_t idx) const {
  if (idx < edge_order.size())
    return "w_" + std::to_string(edge_order[idx].first) + "_" +
           std::to_string(edge_order[idx].second);
  return "b_" + std::to_string(idx - edge_order.size());
}

ParamVector vectorize(const Model& model) {
  ParamVector p;
  p.layout.k = model.k();
  p.layout.edge_order.reserve(model.edges().size());
  p.values.reserve(model.edges().size() + model.k());
  for (const Edge& e : model.edges()) {
    p.layout.edge_order.emplace_back(e.i, e.j);
    p.values.push_back(e.w);
  }
  p.values.insert(p.values.end(), model.biases().begin(), model.biases().end());
  return p;
}

Model devectorize(const ParamLayout& layout, const std::vector<double>& values) {
  if (values.size() != layout.size())
    throw std::invalid_argument("devectorize: value count does not match layout");
  std::vector<Edge> edges(layout.edge_order.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    edges[e] = {layout.edge_order[e].first, layout.edge_order[e].second, values[e]};
  std::vector<double> biases(values.begin() + edges.size(), values.end());
  return Model(layout.k, std::move(edges), std::move(biases));
}

DataSet::DataSet(int k, std::vector<std::vector<std::int8_t>> rows,
                 std::vector<std::int64_t> counts)
    : k_(k), rows_(std::move(rows)), counts_(std::move(counts)) {
  if (k_ <= 0) throw std::invalid_argument("DataSet: row length must be positive");
  if (counts_.empty()) counts_.assign(rows_.size(), 1);
  if (counts_.size() != rows_.size())
    throw std::invalid_argument("DataSet: counts length must match rows");
  total_count_ = 0;
  for (std::int64_t c : counts_) {
    if (c <= 0) throw std::invalid_argument("DataSet: multiplicities must be positive");
    total_count_ += c;
  }
  for (const auto& row : rows_) {
    if (static_cast<int>(row.size()) != k_)
      throw std::invalid_argument("DataSet: row length mismatch");
    for (std::int8_t v : row)
      if (v != 0 && v != 1 && v != kHidden)
        throw std::invalid_argument("DataSet: entries must be 0, 1 or hidden");
  }
}

bool DataSet::row_fully_observed(std::size_t r) const {
  for (std::int8_t v : rows_[r])
    if (v == kHidden) return false;
  return true;
}

bool DataSet::fully_observed() const {
  for (std::size_t r = 0; r < rows_.size(); ++r)
    if (!row_fully_observed(r)) return false;
  return true;
}

void validate_prior(const GaussianPrior& prior) {
  if (!(prior.weight_variance > 0) || !std::isfinite(prior.weight_variance) ||
      !(prior.bias_variance > 0) || !std::isfinite(prior.bias_variance))
    throw std::invalid_argument("GaussianPrior: variances must be finite and positive");
}

double log_unnorm(const Model& model, std::span<const std::uint8_t> state) {
  if (static_cast<int>(state.size()) != model.k())
    throw std::invalid_argument("log_unnorm: state length mismatch");
  for (std::uint8_t s : state)
    if (s > 1) throw std::invalid_argument("log_unnorm: non-binary entry");
  double v = 0.0;
  for (const Edge& e : model.edges())
    if (state[e.i] && state[e.j]) v += e.w;
  for (int i = 0; i < model.k(); ++i)
    if (state[i]) v += model.biases()[i];
  return v;
}

SuffStats suff_stats(const DataSet& data, const ParamLayout& layout) {
  if (data.k() != layout.k)
    throw std::invalid_argument("suff_stats: data row length does not match layout");
  if (!data.fully_observed())
    throw std::invalid_argument("suff_stats: hidden entries present");
  SuffStats s;
  s.edge_sums.assign(layout.edge_order.size(), 0);
  s.node_sums.assign(layout.k, 0);
  s.n_rows = data.total_count();
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    const auto& row = data.row(r);
    const std::int64_t c = data.count(r);
    for (std::size_t e = 0; e < layout.edge_order.size(); ++e)
      if (row[layout.edge_order[e].first] && row[layout.edge_order[e].second])
        s.edge_sums[e] += c;
    for (int i = 0; i < layout.k; ++i)
      if (row[i]) s.node_sums[i] += c;
  }
  return s;
}

double log_prior(const GaussianPrior& prior, const ParamVector& params) {
  validate_prior(prior);
  const std::size_t ne = params.layout.n_edges();
  double lp = 0.0;
  for (std::size_t c = 0; c < params.values.size(); ++c) {
    const double var = c < ne ? prior.weight_variance : prior.bias_variance;
    lp -= params.values[c] * params.values[c] / (2.0 * var);
  }
  return lp;
}

std::vector<double> grad_log_prior(const GaussianPrior& prior, const ParamVector& params) {
  validate_prior(prior);
  const std::size_t ne = params.layout.n_edges();
  std::vector<double> g(params.values.size());
  for (std::size_t c = 0; c < params.values.size(); ++c) {
    const double var = c < ne ? prior.weight_variance : prior.bias_variance;
    g[c] = -params.values[c] / var;
  }
  return g;
}

std::vector<double> grad_log_joint(const SuffStats& suff, const GaussianPrior& prior,
                                   const ParamVector& params,
                                   std::span<const double> edge_expect,
                                   std::span<const double> node_expect) {
  const std::size_t ne = params.layout.n_edges();
  if (suff.edge_sums.size() != ne || edge_expect.size() != ne ||
      suff.node_sums.size() != static_cast<std::size_t>(params.layout.k) ||
      node_expect.size() != static_cast<std::size_t>(params.layout.k))
    throw std::invalid_argument("grad_log_joint: inconsistent layouts");
  for (double m : edge_expect)
    if (!(m >= 0.0 && m <= 1.0))
      throw std::invalid_argument("grad_log_joint: edge expectation outside [0,1]");
  for (double m : node_expect)
    if (!(m >= 0.0 && m <= 1.0))
      throw std::invalid_argument("grad_log_joint: node expectation outside [0,1]");

  const double n = static_cast<double>(suff.n_rows);
  std::vector<double> g = grad_log_prior(prior, params);
  for (std::size_t e = 0; e < ne; ++e)
    g[e] += static_cast<double>(suff.edge_sums[e]) - n * edge_expect[e];
  for (int i = 0; i < params.layout.k; ++i)
    g[ne + i] += static_cast<double>(suff.node_sums[i]) - n * node_expect[i];
  return g;
}

}  // namespace bmb
