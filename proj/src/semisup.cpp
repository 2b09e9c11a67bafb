#include "bmb/semisup.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bmb {

namespace {

void validate_row(const Model& model, std::span<const std::int8_t> row) {
  if (row.size() != static_cast<std::size_t>(model.k()))
    throw std::invalid_argument("clamped_logZx: row length mismatch");
  for (std::int8_t v : row)
    if (v != 0 && v != 1 && v != kHidden)
      throw std::invalid_argument("clamped_logZx: entries must be 0, 1 or hidden");
}

void validate_points(const PointSet& points) {
  if (points.xs.size() != points.ys.size() || points.xs.size() != points.labels.size())
    throw std::invalid_argument("PointSet: column lengths differ");
  if (points.xs.empty()) throw std::invalid_argument("PointSet: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points.xs[i]) || !std::isfinite(points.ys[i]))
      throw std::invalid_argument("PointSet: non-finite coordinate");
    if (points.labels[i] != 0 && points.labels[i] != 1 && points.labels[i] != kHidden)
      throw std::invalid_argument("PointSet: labels must be 0, 1 or unlabelled");
  }
}

void validate_sigma(const SigmaParams& sigma) {
  if (!std::isfinite(sigma.log_sigma_x) || !std::isfinite(sigma.log_sigma_y))
    throw std::invalid_argument("SigmaParams: log sigmas must be finite");
}

// Exact expectations under the agreement model, optionally with the labelled
// points clamped: per-pair agreement probabilities (i<j lexicographic) and
// per-point class-1 marginals.
struct AgreementStats {
  std::vector<double> pair_agree;
  std::vector<double> node_one;
};

AgreementStats enumerate_agreement(const PointSet& points, const std::vector<double>& weights,
                                   bool clamp_labels, int cap) {
  const int n = static_cast<int>(points.size());
  std::vector<int> free_idx;
  std::vector<std::uint8_t> state(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if (clamp_labels && points.labels[i] != kHidden) {
      state[i] = static_cast<std::uint8_t>(points.labels[i]);
    } else {
      free_idx.push_back(i);
    }
  }
  if (static_cast<int>(free_idx.size()) > cap)
    throw std::invalid_argument("semisup: enumeration cap exceeded");

  const auto energy = [&]() {
    double e = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (state[i] == state[j]) e += weights[static_cast<std::size_t>(i) * n + j];
    return e;
  };
  const auto fill = [&](std::uint64_t bits) {
    for (std::size_t f = 0; f < free_idx.size(); ++f)
      state[free_idx[f]] = (bits >> f) & 1u;
  };

  const std::uint64_t total = std::uint64_t{1} << free_idx.size();
  double max_e = -std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    fill(bits);
    max_e = std::max(max_e, energy());
  }

  AgreementStats stats;
  stats.pair_agree.assign(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0);
  stats.node_one.assign(static_cast<std::size_t>(n), 0.0);
  double z = 0.0;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    fill(bits);
    const double w = std::exp(energy() - max_e);
    z += w;
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) {
      if (state[i]) stats.node_one[i] += w;
      for (int j = i + 1; j < n; ++j, ++idx)
        if (state[i] == state[j]) stats.pair_agree[idx] += w;
    }
  }
  for (double& v : stats.pair_agree) v /= z;
  for (double& v : stats.node_one) v /= z;
  return stats;
}

CouplingGraph coupling_graph(const PointSet& points, const std::vector<double>& weights) {
  const int n = static_cast<int>(points.size());
  std::vector<Edge> couplings;
  couplings.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      couplings.push_back({i, j, weights[static_cast<std::size_t>(i) * n + j]});
  return CouplingGraph(n, std::move(couplings));
}

std::vector<std::uint8_t> frozen_mask(const PointSet& points) {
  std::vector<std::uint8_t> frozen(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points.labels[i] != kHidden) frozen[i] = 1;
  return frozen;
}

State labelled_init(const PointSet& points, Rng& rng) {
  State state(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    state[i] = points.labels[i] == kHidden ? (bernoulli(rng, 0.5) ? 1 : 0)
                                           : static_cast<std::uint8_t>(points.labels[i]);
  return state;
}

double reflect_into(double v, double lo, double hi) {
  while (v < lo || v > hi) {
    if (v > hi) v = 2.0 * hi - v;
    if (v < lo) v = 2.0 * lo - v;
  }
  return v;
}

}  // namespace

namespace {

struct FoldedRow {
  int n_hidden = 0;
  std::vector<Edge> edges;
  std::vector<double> biases;
  double constant = 0.0;
};

FoldedRow fold_core(const Model& model, std::span<const std::int8_t> row) {
  validate_row(model, row);
  const int k = model.k();
  std::vector<int> pos(static_cast<std::size_t>(k), -1);
  FoldedRow folded;
  for (int i = 0; i < k; ++i) {
    if (row[i] == kHidden) {
      pos[i] = folded.n_hidden++;
      folded.biases.push_back(model.biases()[i]);
    }
  }

  for (const Edge& e : model.edges()) {
    const bool hi = pos[e.i] >= 0;
    const bool hj = pos[e.j] >= 0;
    if (hi && hj) {
      folded.edges.push_back({pos[e.i], pos[e.j], e.w});
    } else if (hi) {
      if (row[e.j]) folded.biases[pos[e.i]] += e.w;
    } else if (hj) {
      if (row[e.i]) folded.biases[pos[e.j]] += e.w;
    } else if (row[e.i] && row[e.j]) {
      folded.constant += e.w;
    }
  }
  for (int i = 0; i < k; ++i)
    if (row[i] == 1) folded.constant += model.biases()[i];
  return folded;
}

}  // namespace

double clamped_logZx(const Model& model, std::span<const std::int8_t> row, int cap) {
  FoldedRow folded = fold_core(model, row);
  if (folded.n_hidden == 0) return folded.constant;
  const Model reduced(folded.n_hidden, std::move(folded.edges), std::move(folded.biases));
  return folded.constant + exact_logZ(reduced, cap);
}

std::pair<Model, double> fold_observed(const Model& model, std::span<const std::int8_t> row) {
  FoldedRow folded = fold_core(model, row);
  if (folded.n_hidden == 0)
    throw std::invalid_argument("fold_observed: row has no hidden entries");
  return {Model(folded.n_hidden, std::move(folded.edges), std::move(folded.biases)),
          folded.constant};
}

double hidden_loglik(const Model& model, std::span<const std::int8_t> row, int cap) {
  return clamped_logZx(model, row, cap) - exact_logZ(model, cap);
}

PointSet load_pointset_csv(const std::string& text) {
  PointSet points;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 3)
      throw std::invalid_argument("PointSet CSV: expected 3 columns (x, y, label)");

    const auto parse_double = [&](const std::string& s, double& out) {
      std::size_t used = 0;
      try {
        out = std::stod(s, &used);
      } catch (const std::exception&) {
        return false;
      }
      while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
      return used == s.size();
    };

    double x, y;
    if (!parse_double(fields[0], x)) {
      if (first) {
        first = false;  // header row
        continue;
      }
      throw std::invalid_argument("PointSet CSV: malformed coordinate");
    }
    if (!parse_double(fields[1], y))
      throw std::invalid_argument("PointSet CSV: malformed coordinate");

    std::string label = fields[2];
    label.erase(std::remove_if(label.begin(), label.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                label.end());
    std::int8_t l;
    if (label == "0")
      l = 0;
    else if (label == "1")
      l = 1;
    else if (label == "?")
      l = kHidden;
    else
      throw std::invalid_argument("PointSet CSV: label must be 0, 1 or ?");

    points.xs.push_back(x);
    points.ys.push_back(y);
    points.labels.push_back(l);
    first = false;
  }
  validate_points(points);
  return points;
}

std::vector<double> build_weights(const PointSet& points, const SigmaParams& sigma) {
  validate_points(points);
  validate_sigma(sigma);
  const std::size_t n = points.size();
  const double inv2x = 0.5 / std::exp(2.0 * sigma.log_sigma_x);
  const double inv2y = 0.5 / std::exp(2.0 * sigma.log_sigma_y);

  std::vector<double> weights(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = points.xs[i] - points.xs[j];
      const double dy = points.ys[i] - points.ys[j];
      const double w = std::exp(-(dx * dx * inv2x + dy * dy * inv2y));
      weights[i * n + j] = w;
      weights[j * n + i] = w;
    }
  }
  return weights;
}

SemisupBm semisup_to_bm(const PointSet& points, const SigmaParams& sigma) {
  const std::vector<double> weights = build_weights(points, sigma);
  const int n = static_cast<int>(points.size());

  std::vector<Edge> edges;
  std::vector<double> biases(static_cast<std::size_t>(n), 0.0);
  double constant = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = weights[static_cast<std::size_t>(i) * n + j];
      edges.push_back({i, j, 2.0 * w});
      biases[i] -= w;
      biases[j] -= w;
      constant += w;
    }
  }
  return SemisupBm{Model(n, std::move(edges), std::move(biases)), constant,
                   std::vector<std::int8_t>(points.labels)};
}

double semisup_loglik(const PointSet& points, const SigmaParams& sigma, int cap) {
  const SemisupBm bm = semisup_to_bm(points, sigma);
  // The carried constant appears in both terms and cancels.
  return clamped_logZx(bm.model, bm.designation, cap) - exact_logZ(bm.model, cap);
}

std::array<double, 2> semisup_grad_logsigma_exact(const PointSet& points,
                                                  const SigmaParams& sigma, int cap) {
  const std::vector<double> weights = build_weights(points, sigma);
  const AgreementStats clamped = enumerate_agreement(points, weights, true, cap);
  const AgreementStats unclamped = enumerate_agreement(points, weights, false, cap);

  const int n = static_cast<int>(points.size());
  const double sx2 = std::exp(2.0 * sigma.log_sigma_x);
  const double sy2 = std::exp(2.0 * sigma.log_sigma_y);
  std::array<double, 2> grad{0.0, 0.0};
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++idx) {
      const double diff = clamped.pair_agree[idx] - unclamped.pair_agree[idx];
      const double w = weights[static_cast<std::size_t>(i) * n + j];
      const double dx = points.xs[i] - points.xs[j];
      const double dy = points.ys[i] - points.ys[j];
      grad[0] += diff * w * dx * dx / sx2;
      grad[1] += diff * w * dy * dy / sy2;
    }
  }
  return grad;
}

SemisupGradient::SemisupGradient(PointSet points, int n_sweeps)
    : points_(std::move(points)), n_sweeps_(n_sweeps) {
  validate_points(points_);
  if (n_sweeps_ < 1)
    throw std::invalid_argument("SemisupGradient: n_sweeps must be positive");
}

std::array<double, 2> SemisupGradient::evaluate(const SigmaParams& sigma, Rng& rng) {
  const std::vector<double> weights = build_weights(points_, sigma);
  const CouplingGraph graph = coupling_graph(points_, weights);
  const std::vector<std::uint8_t> frozen = frozen_mask(points_);
  if (clamped_.empty()) {
    clamped_ = labelled_init(points_, rng);
    unclamped_ = random_state(graph.k(), rng);
  }

  const int n = static_cast<int>(points_.size());
  const std::size_t n_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  std::vector<double> agree_c(n_pairs, 0.0), agree_u(n_pairs, 0.0);
  const auto accumulate = [&](const State& state, std::vector<double>& agree) {
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++idx)
        if (state[i] == state[j]) agree[idx] += 1.0;
  };
  for (int s = 0; s < n_sweeps_; ++s) {
    swendsen_wang_sweep(graph, clamped_, rng, frozen);
    accumulate(clamped_, agree_c);
  }
  for (int s = 0; s < n_sweeps_; ++s) {
    swendsen_wang_sweep(graph, unclamped_, rng);
    accumulate(unclamped_, agree_u);
  }

  const double sx2 = std::exp(2.0 * sigma.log_sigma_x);
  const double sy2 = std::exp(2.0 * sigma.log_sigma_y);
  std::array<double, 2> grad{0.0, 0.0};
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++idx) {
      const double diff = (agree_c[idx] - agree_u[idx]) / n_sweeps_;
      const double w = weights[static_cast<std::size_t>(i) * n + j];
      const double dx = points_.xs[i] - points_.xs[j];
      const double dy = points_.ys[i] - points_.ys[j];
      grad[0] += diff * w * dx * dx / sx2;
      grad[1] += diff * w * dy * dy / sy2;
    }
  }
  return grad;
}

void SemisupGradient::reset() {
  clamped_.clear();
  unclamped_.clear();
}

std::vector<double> predict_labels(const PointSet& points,
                                   std::span<const SigmaParams> sigma_samples,
                                   int n_sweeps, int burn_in, Rng& rng) {
  validate_points(points);
  if (sigma_samples.empty())
    throw std::invalid_argument("predict_labels: need at least one sigma sample");
  if (n_sweeps < 1) throw std::invalid_argument("predict_labels: n_sweeps must be positive");
  if (burn_in < 0) throw std::invalid_argument("predict_labels: burn_in must be non-negative");

  const std::vector<std::uint8_t> frozen = frozen_mask(points);
  std::vector<double> marginals(points.size(), 0.0);
  for (const SigmaParams& sigma : sigma_samples) {
    const std::vector<double> weights = build_weights(points, sigma);
    const CouplingGraph graph = coupling_graph(points, weights);
    State state = labelled_init(points, rng);
    for (int s = 0; s < burn_in; ++s) swendsen_wang_sweep(graph, state, rng, frozen);
    std::vector<double> ones(points.size(), 0.0);
    for (int s = 0; s < n_sweeps; ++s) {
      swendsen_wang_sweep(graph, state, rng, frozen);
      for (std::size_t i = 0; i < points.size(); ++i) ones[i] += state[i];
    }
    for (std::size_t i = 0; i < points.size(); ++i)
      marginals[i] += ones[i] / n_sweeps;
  }
  for (double& m : marginals) m /= static_cast<double>(sigma_samples.size());
  return marginals;
}

std::vector<double> predict_labels_exact(const PointSet& points, const SigmaParams& sigma,
                                         int cap) {
  const std::vector<double> weights = build_weights(points, sigma);
  return enumerate_agreement(points, weights, true, cap).node_one;
}

SigmaChain run_sigma_chain(const PointSet& points, const SigmaChainConfig& config) {
  validate_points(points);
  if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon))
    throw std::invalid_argument("SigmaChainConfig: epsilon must be positive");
  if (config.iterations < 1)
    throw std::invalid_argument("SigmaChainConfig: iterations must be positive");
  if (!(config.box_lo < config.box_hi))
    throw std::invalid_argument("SigmaChainConfig: box_lo must be below box_hi");
  if (config.init.log_sigma_x < config.box_lo || config.init.log_sigma_x > config.box_hi ||
      config.init.log_sigma_y < config.box_lo || config.init.log_sigma_y > config.box_hi)
    throw std::invalid_argument("SigmaChainConfig: init outside the box");

  SemisupGradient gradient(points, config.n_sweeps);
  Rng rng = make_rng(config.seed);
  SigmaParams sigma = config.init;

  SigmaChain chain;
  chain.seed = config.seed;
  chain.epsilon = config.epsilon;
  chain.samples.reserve(static_cast<std::size_t>(config.iterations));
  const double half_eps2 = 0.5 * config.epsilon * config.epsilon;
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const std::array<double, 2> grad = gradient.evaluate(sigma, rng);
    if (!std::isfinite(grad[0]) || !std::isfinite(grad[1]))
      throw std::runtime_error("run_sigma_chain: non-finite gradient");
    sigma.log_sigma_x =
        reflect_into(sigma.log_sigma_x + half_eps2 * grad[0] + config.epsilon * normal01(rng),
                     config.box_lo, config.box_hi);
    sigma.log_sigma_y =
        reflect_into(sigma.log_sigma_y + half_eps2 * grad[1] + config.epsilon * normal01(rng),
                     config.box_lo, config.box_hi);
    chain.samples.push_back(sigma);
  }
  return chain;
}

}  // namespace bmb
