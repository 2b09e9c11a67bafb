#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bmb/exact.hpp"
#include "bmb/model.hpp"
#include "bmb/rng.hpp"
#include "bmb/state_samplers.hpp"
#include "bmb/util.hpp"
#include "support/oracles.hpp"

using namespace bmb;

namespace {

State state_from_bits(int k, std::uint64_t bits) {
  State s(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) s[i] = (bits >> i) & 1u;
  return s;
}

std::size_t bits_from_state(const State& s) {
  std::size_t bits = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) bits |= std::size_t{1} << i;
  return bits;
}

// Exact distribution over bit-pattern indices (node i in bit i).
std::vector<double> exact_distribution(const Model& model) {
  const double log_z = exact_logZ(model);
  std::vector<double> p(std::size_t{1} << model.k());
  for (std::size_t bits = 0; bits < p.size(); ++bits)
    p[bits] = std::exp(log_unnorm(model, state_from_bits(model.k(), bits)) - log_z);
  return p;
}

// Exact distribution of the agreement model p(s) ~ exp(sum w [s_i == s_j]).
std::vector<double> agreement_distribution(const CouplingGraph& graph) {
  const std::size_t n = std::size_t{1} << graph.k();
  std::vector<double> p(n);
  double z = 0.0;
  for (std::size_t bits = 0; bits < n; ++bits) {
    double e = 0.0;
    for (const Edge& c : graph.couplings())
      if (((bits >> c.i) & 1u) == ((bits >> c.j) & 1u)) e += c.w;
    p[bits] = std::exp(e);
    z += p[bits];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> occupancy(const std::vector<std::size_t>& counts, double total) {
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    p[i] = static_cast<double>(counts[i]) / total;
  return p;
}

}  // namespace

TEST_CASE("exact distribution is invariant under the analytic sweep transition") {
  Rng rng = make_rng(901);
  for (int rep = 0; rep < 6; ++rep) {
    const Model model = oracle::random_model(rng, 5, 0.5, 0.8);
    const auto T = oracle::gibbs_sweep_matrix(model);
    const auto p = exact_distribution(model);
    for (std::size_t t = 0; t < p.size(); ++t) {
      double pushed = 0.0;
      for (std::size_t s = 0; s < p.size(); ++s) pushed += p[s] * T[s][t];
      CHECK(std::abs(pushed - p[t]) < 1e-9);
    }
  }
}

TEST_CASE("sampled sweeps reproduce the analytic one-sweep transition row") {
  Rng rng = make_rng(902);
  const Model model = oracle::random_model(rng, 4, 0.6, 0.9);
  const auto T = oracle::gibbs_sweep_matrix(model);
  const State start = state_from_bits(4, 0b0101);

  const int n = 200000;
  std::vector<std::size_t> counts(16, 0);
  for (int it = 0; it < n; ++it) {
    State s = start;
    gibbs_sweep(model, s, rng);
    ++counts[bits_from_state(s)];
  }
  CHECK(oracle::tv_distance(occupancy(counts, n), T[bits_from_state(start)]) < 0.01);
}

TEST_CASE("systematic chain equilibrates on a k=8 model") {
  Rng rng = make_rng(903);
  const Model model = oracle::random_model(rng, 8, 0.3, 0.7);
  State s = random_state(8, rng);
  for (int it = 0; it < 1000; ++it) gibbs_sweep(model, s, rng);

  const int n = 1000000;
  std::vector<std::size_t> counts(256, 0);
  for (int it = 0; it < n; ++it) {
    gibbs_sweep(model, s, rng);
    ++counts[bits_from_state(s)];
  }
  CHECK(oracle::tv_distance(occupancy(counts, n), exact_distribution(model)) < 0.02);
}

TEST_CASE("random-scan chain equilibrates too") {
  Rng rng = make_rng(904);
  const Model model = oracle::random_model(rng, 4, 0.6, 0.8);
  State s = random_state(4, rng);
  for (int it = 0; it < 1000; ++it) gibbs_sweep(model, s, rng, ScanOrder::Random);

  const int n = 200000;
  std::vector<std::size_t> counts(16, 0);
  for (int it = 0; it < n; ++it) {
    gibbs_sweep(model, s, rng, ScanOrder::Random);
    ++counts[bits_from_state(s)];
  }
  CHECK(oracle::tv_distance(occupancy(counts, n), exact_distribution(model)) < 0.02);
}

TEST_CASE("single-node sweep matches the conditional closed form") {
  const Model model(1, {}, {1.2});
  Rng rng = make_rng(905);
  State s{0};
  const int n = 100000;
  double ones = 0.0;
  for (int it = 0; it < n; ++it) {
    gibbs_sweep(model, s, rng);
    ones += s[0];
  }
  CHECK(std::abs(ones / n - sigmoid(1.2)) < 0.008);
}

TEST_CASE("gibbs_sweep rejects a state of the wrong length") {
  const Model model(3, {{0, 1, 0.5}}, {0.0, 0.0, 0.0});
  Rng rng = make_rng(1);
  State s{0, 1};
  CHECK_THROWS_AS(gibbs_sweep(model, s, rng), std::invalid_argument);
}

TEST_CASE("brief chains pull the data moment toward the model") {
  // Strong edge, data pinned at the modal state (1,1). One sweep of CD moves
  // the empirical moment 1.0 part of the way toward the exact 0.9802, so the
  // brief estimate must land strictly between, closer to the data than the
  // model is.
  const Model model(2, {{0, 1, 5.0}}, {0.0, 0.0});
  const DataSet data(2, {{1, 1}}, {5000});
  const double exact = exact_moments(model).edge_moments[0];

  Rng rng = make_rng(906);
  const MomentEstimate est = brief_moments(model, data, 1, rng);
  CHECK(est.n_samples == 5000);
  CHECK(est.source == "brief");
  CHECK(std::abs(est.edge_moments[0] - 1.0) < std::abs(exact - 1.0));
  CHECK(est.edge_moments[0] > exact);
}

TEST_CASE("brief chains converge to exact moments as sweeps grow") {
  Rng rng = make_rng(907);
  const Model model = oracle::random_model(rng, 6, 0.4, 0.7);
  const ExactMoments exact = exact_moments(model);

  const int n_rows = 800;
  const DataSet data(6, {{0, 0, 0, 0, 0, 0}}, {n_rows});
  const MomentEstimate est = brief_moments(model, data, 200, rng);

  for (int i = 0; i < 6; ++i) {
    const double m = exact.node_marginals[i];
    const double se = std::sqrt(m * (1.0 - m) / n_rows);
    CHECK(std::abs(est.node_moments[i] - m) < 3.0 * se + 1e-3);
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const double m = exact.edge_moments[e];
    const double se = std::sqrt(m * (1.0 - m) / n_rows);
    CHECK(std::abs(est.edge_moments[e] - m) < 3.0 * se + 1e-3);
  }
}

TEST_CASE("brief estimate does not depend on how rows are compacted") {
  Rng rng = make_rng(908);
  const Model model = oracle::random_model(rng, 4, 0.5, 0.8);
  const DataSet grouped(4, {{1, 0, 1, 0}, {0, 1, 1, 1}}, {3, 2});
  const DataSet expanded(4, {{1, 0, 1, 0}, {1, 0, 1, 0}, {1, 0, 1, 0},
                             {0, 1, 1, 1}, {0, 1, 1, 1}});

  Rng a = make_rng(42);
  Rng b = make_rng(42);
  const MomentEstimate ga = brief_moments(model, grouped, 3, a);
  const MomentEstimate gb = brief_moments(model, expanded, 3, b);
  CHECK(ga.node_moments == gb.node_moments);
  CHECK(ga.edge_moments == gb.edge_moments);
  CHECK(ga.n_samples == gb.n_samples);
}

TEST_CASE("brief_moments input validation") {
  const Model model(2, {{0, 1, 1.0}}, {0.0, 0.0});
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(brief_moments(model, DataSet(2, {{1, kHidden}}), 1, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(brief_moments(model, DataSet(2, {{1, 1}}), 0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(brief_moments(model, DataSet(3, {{1, 1, 0}}), 1, rng),
                  std::invalid_argument);
}

TEST_CASE("long-run chain matches exact moments within Monte Carlo error") {
  Rng rng = make_rng(909);
  const Model model = oracle::random_model(rng, 5, 0.5, 0.6);
  const ExactMoments exact = exact_moments(model);

  StateChainConfig config;
  config.n_sweeps = 40000;
  config.burn_in = 500;
  const MomentEstimate est = long_run_moments(model, config, rng);

  CHECK(est.n_samples == 40000);
  CHECK(est.source == "long_run");
  for (int i = 0; i < 5; ++i)
    CHECK(std::abs(est.node_moments[i] - exact.node_marginals[i]) < 0.02);
  for (std::size_t e = 0; e < model.edges().size(); ++e)
    CHECK(std::abs(est.edge_moments[e] - exact.edge_moments[e]) < 0.02);
}

TEST_CASE("long_run_moments input validation") {
  const Model model(2, {{0, 1, 1.0}}, {0.0, 0.0});
  Rng rng = make_rng(1);
  StateChainConfig config;
  config.n_sweeps = 0;
  CHECK_THROWS_AS(long_run_moments(model, config, rng), std::invalid_argument);
  config.n_sweeps = 10;
  config.burn_in = -1;
  CHECK_THROWS_AS(long_run_moments(model, config, rng), std::invalid_argument);
}

TEST_CASE("zero couplings give independent fair relabels") {
  const CouplingGraph graph(4, {{0, 1, 0.0}, {2, 3, 0.0}});
  Rng rng = make_rng(910);
  State s{1, 1, 1, 1};
  const int n = 50000;
  std::vector<double> ones(4, 0.0);
  double pair01 = 0.0;
  for (int it = 0; it < n; ++it) {
    swendsen_wang_sweep(graph, s, rng);
    for (int i = 0; i < 4; ++i) ones[i] += s[i];
    pair01 += s[0] * s[1];
  }
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(ones[i] / n - 0.5) < 0.01);
  CHECK(std::abs(pair01 / n - 0.25) < 0.01);
}

TEST_CASE("a near-infinite coupling locks the pair to one label") {
  const CouplingGraph graph(2, {{0, 1, 30.0}});
  Rng rng = make_rng(911);
  State s{1, 1};
  const int n = 10000;
  double ones = 0.0;
  for (int it = 0; it < n; ++it) {
    swendsen_wang_sweep(graph, s, rng);
    CHECK(s[0] == s[1]);
    ones += s[0];
  }
  CHECK(std::abs(ones / n - 0.5) < 0.06);
}

TEST_CASE("cluster updates sample the agreement model") {
  const CouplingGraph graph(5, {{0, 1, 0.8}, {1, 2, 1.2}, {2, 3, 0.5},
                                {3, 4, 1.0}, {0, 4, 0.7}, {1, 3, 0.4}});
  Rng rng = make_rng(912);
  State s{0, 0, 0, 0, 0};
  for (int it = 0; it < 1000; ++it) swendsen_wang_sweep(graph, s, rng);

  const int n = 200000;
  std::vector<std::size_t> counts(32, 0);
  for (int it = 0; it < n; ++it) {
    swendsen_wang_sweep(graph, s, rng);
    ++counts[bits_from_state(s)];
  }
  CHECK(oracle::tv_distance(occupancy(counts, n), agreement_distribution(graph)) < 0.02);
}

TEST_CASE("frozen nodes condition the cluster update") {
  const CouplingGraph graph(3, {{0, 1, 2.0}, {1, 2, 2.0}});
  const std::vector<std::uint8_t> frozen{1, 0, 0};
  Rng rng = make_rng(913);
  State s{1, 0, 1};

  // p(s1, s2 | s0 = 1) by enumeration of exp(2 [s1 == 1] + 2 [s2 == s1]).
  const double e2 = std::exp(2.0), e4 = std::exp(4.0);
  const double z = 2.0 * e2 + 1.0 + e4;
  const std::vector<double> cond{e2 / z, e2 / z, 1.0 / z, e4 / z};  // (s1, s2) bits

  const int n = 100000;
  std::vector<std::size_t> counts(4, 0);
  for (int it = 0; it < n; ++it) {
    swendsen_wang_sweep(graph, s, rng, frozen);
    REQUIRE(s[0] == 1);
    ++counts[s[1] + 2 * s[2]];
  }
  CHECK(oracle::tv_distance(occupancy(counts, n), cond) < 0.02);
}

TEST_CASE("coupling graph and sweep input validation") {
  CHECK_THROWS_AS(CouplingGraph(2, {{0, 1, -0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(CouplingGraph(2, {{1, 0, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(CouplingGraph(2, {{0, 2, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(CouplingGraph(0, {}), std::invalid_argument);

  const CouplingGraph graph(2, {{0, 1, 0.5}});
  Rng rng = make_rng(1);
  State bad{1};
  CHECK_THROWS_AS(swendsen_wang_sweep(graph, bad, rng), std::invalid_argument);
  State ok{1, 0};
  const std::vector<std::uint8_t> bad_mask{1};
  CHECK_THROWS_AS(swendsen_wang_sweep(graph, ok, rng, bad_mask), std::invalid_argument);
}

TEST_CASE("ratio of a model with itself is exactly one") {
  Rng rng = make_rng(914);
  const Model model = oracle::random_model(rng, 5, 0.5, 0.8);
  const std::vector<State> states = exact_sample(model, rng, 100);
  CHECK(ratio_estimate(model, model, states) == 1.0);
}

TEST_CASE("single-state ratio reproduces the unnormalized density ratio") {
  Rng rng = make_rng(915);
  const Model a = oracle::random_model(rng, 4, 0.7, 0.8);
  ParamVector theta = vectorize(a);
  for (double& v : theta.values) v += 0.3 * normal01(rng);
  const Model b = devectorize(theta.layout, theta.values);

  for (std::uint64_t bits : {0b0000u, 0b1011u, 0b1111u, 0b0110u}) {
    const State s = state_from_bits(4, bits);
    const double expected = std::exp(log_unnorm(a, s) - log_unnorm(b, s));
    CHECK(ratio_estimate(a, b, {s}) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive importance weights recover the partition ratio") {
  // The estimator's defining identity, checked by full enumeration: the
  // p(s|W')-weighted average of exp(delta . u(s)) equals Z(W)/Z(W').
  Rng rng = make_rng(916);
  for (int rep = 0; rep < 10; ++rep) {
    const Model w_prime = oracle::random_model(rng, 6, 0.4, 0.8);
    ParamVector theta = vectorize(w_prime);
    for (double& v : theta.values) v += 0.4 * normal01(rng);
    const Model w = devectorize(theta.layout, theta.values);

    const double log_zp = exact_logZ(w_prime);
    double mean = 0.0;
    for (std::size_t bits = 0; bits < 64; ++bits) {
      const State s = state_from_bits(6, bits);
      mean += std::exp(log_unnorm(w_prime, s) - log_zp) *
              std::exp(log_unnorm(w, s) - log_unnorm(w_prime, s));
    }
    const double truth = std::exp(exact_logZ(w) - log_zp);
    CHECK(mean == doctest::Approx(truth).epsilon(1e-10));
  }
}

TEST_CASE("sampled ratio estimate is consistent") {
  Rng rng = make_rng(917);
  const Model w_prime = oracle::random_model(rng, 6, 0.4, 0.6);
  ParamVector theta = vectorize(w_prime);
  for (double& v : theta.values) v += 0.2 * normal01(rng);
  const Model w = devectorize(theta.layout, theta.values);
  const double truth = std::exp(exact_logZ(w) - exact_logZ(w_prime));

  const int n = 20000;
  const std::vector<State> states = exact_sample(w_prime, rng, n);
  const double est = ratio_estimate(w, w_prime, states);

  // Monte Carlo standard error from the per-state terms themselves.
  ParamVector delta = vectorize(w);
  const ParamVector tp = vectorize(w_prime);
  for (std::size_t c = 0; c < delta.values.size(); ++c) delta.values[c] -= tp.values[c];
  const Model dm = devectorize(delta.layout, delta.values);
  double var = 0.0;
  for (const State& s : states) {
    const double term = std::exp(log_unnorm(dm, s));
    var += (term - est) * (term - est);
  }
  const double se = std::sqrt(var / (n - 1.0) / n);
  CHECK(std::abs(est - truth) < 3.5 * se + 1e-12);
}

TEST_CASE("ratio_estimate input validation") {
  const Model a(2, {{0, 1, 1.0}}, {0.0, 0.0});
  const Model b(2, {}, {0.0, 0.0});
  CHECK_THROWS_AS(ratio_estimate(a, a, {}), std::invalid_argument);
  CHECK_THROWS_AS(ratio_estimate(a, b, {State{1, 1}}), std::invalid_argument);
}

TEST_CASE("state sampling is reproducible from the seed") {
  Rng rng = make_rng(918);
  const Model model = oracle::random_model(rng, 6, 0.4, 0.7);
  const DataSet data(6, {{1, 0, 1, 0, 1, 0}, {0, 0, 1, 1, 0, 0}}, {4, 3});

  Rng a = make_rng(7), b = make_rng(7);
  const MomentEstimate ba = brief_moments(model, data, 5, a);
  const MomentEstimate bb = brief_moments(model, data, 5, b);
  CHECK(ba.node_moments == bb.node_moments);
  CHECK(ba.edge_moments == bb.edge_moments);

  StateChainConfig config;
  config.n_sweeps = 200;
  config.burn_in = 50;
  Rng c = make_rng(9), d = make_rng(9);
  const MomentEstimate la = long_run_moments(model, config, c);
  const MomentEstimate lb = long_run_moments(model, config, d);
  CHECK(la.node_moments == lb.node_moments);
  CHECK(la.edge_moments == lb.edge_moments);

  const CouplingGraph graph(4, {{0, 1, 0.9}, {1, 2, 0.4}, {2, 3, 1.1}});
  Rng e = make_rng(11), f = make_rng(11);
  State se{1, 0, 0, 1}, sf{1, 0, 0, 1};
  for (int it = 0; it < 200; ++it) {
    swendsen_wang_sweep(graph, se, e);
    swendsen_wang_sweep(graph, sf, f);
    REQUIRE(se == sf);
  }
}
