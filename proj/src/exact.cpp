#include "bmb/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace bmb {
namespace {

void check_cap(const Model& model, int cap) {
  if (model.k() > cap) {
    throw std::invalid_argument("exact enumeration needs k <= " + std::to_string(cap) +
                                ", got k = " + std::to_string(model.k()));
  }
  if (model.k() > 62) {
    throw std::invalid_argument("exact enumeration cap above 62 is not representable");
  }
}

double log_unnorm_bits(const Model& model, std::uint64_t bits) {
  double e = 0.0;
  for (const Edge& ed : model.edges()) {
    if (((bits >> ed.i) & 1u) && ((bits >> ed.j) & 1u)) e += ed.w;
  }
  const std::vector<double>& b = model.biases();
  for (int i = 0; i < model.k(); ++i) {
    if ((bits >> i) & 1u) e += b[i];
  }
  return e;
}

State bits_to_state(std::uint64_t bits, int k) {
  State s(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = (bits >> i) & 1u;
  return s;
}

}  // namespace

double exact_logZ(const Model& model, int cap) {
  check_cap(model, cap);
  const std::uint64_t n_states = std::uint64_t{1} << model.k();
  // Running-max log-sum-exp: acc holds sum of exp(e - max_e) so far.
  double max_e = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::uint64_t bits = 0; bits < n_states; ++bits) {
    const double e = log_unnorm_bits(model, bits);
    if (e <= max_e) {
      acc += std::exp(e - max_e);
    } else {
      acc = acc * std::exp(max_e - e) + 1.0;
      max_e = e;
    }
  }
  return max_e + std::log(acc);
}

ExactMoments exact_moments(const Model& model, int cap) {
  check_cap(model, cap);
  ExactMoments out;
  out.log_z = exact_logZ(model, cap);
  out.node_marginals.assign(static_cast<std::size_t>(model.k()), 0.0);
  out.edge_moments.assign(model.edges().size(), 0.0);
  // Second pass accumulates probabilities directly; exp(e - log_z) is safe
  // because log_z majorizes every state's energy up to log(2^k).
  const std::uint64_t n_states = std::uint64_t{1} << model.k();
  for (std::uint64_t bits = 0; bits < n_states; ++bits) {
    const double p = std::exp(log_unnorm_bits(model, bits) - out.log_z);
    for (int i = 0; i < model.k(); ++i) {
      if ((bits >> i) & 1u) out.node_marginals[static_cast<std::size_t>(i)] += p;
    }
    for (std::size_t e = 0; e < model.edges().size(); ++e) {
      const Edge& ed = model.edges()[e];
      if (((bits >> ed.i) & 1u) && ((bits >> ed.j) & 1u)) out.edge_moments[e] += p;
    }
  }
  return out;
}

std::vector<State> exact_sample(const Model& model, Rng& rng, int n, int cap) {
  check_cap(model, cap);
  if (n < 0) throw std::invalid_argument("exact_sample: n must be >= 0");
  const double log_z = exact_logZ(model, cap);
  const std::uint64_t n_states = std::uint64_t{1} << model.k();
  std::vector<double> cdf(n_states);
  double acc = 0.0;
  for (std::uint64_t bits = 0; bits < n_states; ++bits) {
    acc += std::exp(log_unnorm_bits(model, bits) - log_z);
    cdf[bits] = acc;
  }
  cdf.back() = 1.0;  // guard against accumulated rounding at the top end
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int draw = 0; draw < n; ++draw) {
    const double u = uniform01(rng);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const std::uint64_t bits = static_cast<std::uint64_t>(it - cdf.begin());
    out.push_back(bits_to_state(bits, model.k()));
  }
  return out;
}

namespace {

// log p(S, theta) up to a theta-independent constant.
double log_joint(const Model& model, const SuffStats& suff, const GaussianPrior& prior,
                 int cap) {
  const ParamVector params = vectorize(model);
  double lp = log_prior(prior, params);
  const std::vector<Edge>& edges = model.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    lp += edges[e].w * static_cast<double>(suff.edge_sums[e]);
  }
  for (int i = 0; i < model.k(); ++i) {
    lp += model.biases()[static_cast<std::size_t>(i)] *
          static_cast<double>(suff.node_sums[static_cast<std::size_t>(i)]);
  }
  lp -= static_cast<double>(suff.n_rows) * exact_logZ(model, cap);
  return lp;
}

Model with_coords(const Model& model_template, const std::vector<int>& coords,
                  const std::vector<double>& vals) {
  ParamVector p = vectorize(model_template);
  for (std::size_t a = 0; a < coords.size(); ++a) {
    p.values[static_cast<std::size_t>(coords[a])] = vals[a];
  }
  return devectorize(p.layout, p.values);
}

std::vector<double> grid_axis(const GridSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("grid axis needs at least 2 points");
  if (!(spec.lo < spec.hi)) throw std::invalid_argument("grid axis needs lo < hi");
  std::vector<double> axis(static_cast<std::size_t>(spec.n));
  const double step = (spec.hi - spec.lo) / static_cast<double>(spec.n - 1);
  for (int a = 0; a < spec.n; ++a) {
    axis[static_cast<std::size_t>(a)] = spec.lo + step * static_cast<double>(a);
  }
  axis.back() = spec.hi;
  return axis;
}

}  // namespace

PosteriorGrid exact_posterior_grid(const Model& model_template,
                                   const std::vector<int>& free_coords,
                                   const DataSet& data, const GaussianPrior& prior,
                                   const std::vector<GridSpec>& specs, int cap) {
  if (free_coords.empty() || free_coords.size() > 2) {
    throw std::invalid_argument("posterior grid supports 1 or 2 free coordinates");
  }
  if (specs.size() != free_coords.size()) {
    throw std::invalid_argument("posterior grid needs one spec per free coordinate");
  }
  const ParamLayout layout = vectorize(model_template).layout;
  for (int c : free_coords) {
    if (c < 0 || c >= layout.size()) {
      throw std::invalid_argument("posterior grid: free coordinate out of range");
    }
  }
  const SuffStats suff = suff_stats(data, layout);

  PosteriorGrid grid;
  grid.free_coords = free_coords;
  grid.specs = specs;
  grid.axis0 = grid_axis(specs[0]);
  if (specs.size() == 2) grid.axis1 = grid_axis(specs[1]);

  const std::size_t n0 = grid.axis0.size();
  const std::size_t n1 = grid.axis1.empty() ? 1 : grid.axis1.size();
  std::vector<double> log_post(n0 * n1);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n0; ++a) {
    for (std::size_t b = 0; b < n1; ++b) {
      std::vector<double> vals{grid.axis0[a]};
      if (!grid.axis1.empty()) vals.push_back(grid.axis1[b]);
      const Model m = with_coords(model_template, free_coords, vals);
      const double lp = log_joint(m, suff, prior, cap);
      log_post[a * n1 + b] = lp;
      max_lp = std::max(max_lp, lp);
    }
  }

  // Trapezoid quadrature weights: 1/2 at each axis endpoint (1/4 at the four
  // corners of a 2-d grid), then normalize the weighted masses to sum to 1.
  grid.values.resize(log_post.size());
  double total = 0.0;
  for (std::size_t a = 0; a < n0; ++a) {
    const double wa = (a == 0 || a + 1 == n0) ? 0.5 : 1.0;
    for (std::size_t b = 0; b < n1; ++b) {
      const double wb =
          grid.axis1.empty() ? 1.0 : ((b == 0 || b + 1 == n1) ? 0.5 : 1.0);
      const double mass = wa * wb * std::exp(log_post[a * n1 + b] - max_lp);
      grid.values[a * n1 + b] = mass;
      total += mass;
    }
  }
  for (double& v : grid.values) v /= total;
  return grid;
}

std::string posterior_grid_csv(const PosteriorGrid& grid) {
  std::ostringstream os;
  os.precision(17);
  const std::size_t n0 = grid.axis0.size();
  if (grid.axis1.empty()) {
    os << "theta,density\n";
    for (std::size_t a = 0; a < n0; ++a) {
      os << grid.axis0[a] << ',' << grid.values[a] << '\n';
    }
    return os.str();
  }
  const std::size_t n1 = grid.axis1.size();
  os << "theta1,theta2,density\n";
  for (std::size_t a = 0; a < n0; ++a) {
    for (std::size_t b = 0; b < n1; ++b) {
      os << grid.axis0[a] << ',' << grid.axis1[b] << ',' << grid.values[a * n1 + b]
         << '\n';
    }
  }
  return os.str();
}

std::vector<double> posterior_bin_masses(const Model& model_template, int free_coord,
                                         const DataSet& data, const GaussianPrior& prior,
                                         const std::vector<double>& bin_edges, int subdiv,
                                         int cap) {
  if (bin_edges.size() < 2) {
    throw std::invalid_argument("posterior_bin_masses needs at least one bin");
  }
  if (subdiv < 1) throw std::invalid_argument("posterior_bin_masses: subdiv must be >= 1");
  for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
    if (!(bin_edges[b] < bin_edges[b + 1])) {
      throw std::invalid_argument("posterior_bin_masses: bin edges must increase");
    }
  }
  const ParamLayout layout = vectorize(model_template).layout;
  if (free_coord < 0 || free_coord >= layout.size()) {
    throw std::invalid_argument("posterior_bin_masses: free coordinate out of range");
  }
  const SuffStats suff = suff_stats(data, layout);

  const std::size_t n_bins = bin_edges.size() - 1;
  // One evaluation per panel edge, shared between neighbours.
  std::vector<double> log_post;
  log_post.reserve(n_bins * static_cast<std::size_t>(subdiv) + 1);
  std::vector<double> points;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double lo = bin_edges[b];
    const double step = (bin_edges[b + 1] - lo) / static_cast<double>(subdiv);
    for (int p = 0; p < subdiv; ++p) {
      points.push_back(lo + step * static_cast<double>(p));
    }
  }
  points.push_back(bin_edges.back());
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double x : points) {
    const Model m = with_coords(model_template, {free_coord}, {x});
    const double lp = log_joint(m, suff, prior, cap);
    log_post.push_back(lp);
    max_lp = std::max(max_lp, lp);
  }

  std::vector<double> masses(n_bins, 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double width = (bin_edges[b + 1] - bin_edges[b]) / static_cast<double>(subdiv);
    double m = 0.0;
    const std::size_t base = b * static_cast<std::size_t>(subdiv);
    for (int p = 0; p < subdiv; ++p) {
      const double f0 = std::exp(log_post[base + static_cast<std::size_t>(p)] - max_lp);
      const double f1 = std::exp(log_post[base + static_cast<std::size_t>(p) + 1] - max_lp);
      m += 0.5 * (f0 + f1) * width;
    }
    masses[b] = m;
    total += m;
  }
  for (double& m : masses) m /= total;
  return masses;
}

}  // namespace bmb
