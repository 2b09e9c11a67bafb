#include "bmb/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "bmb/util.hpp"

namespace bmb {

std::string InferenceResult::to_json() const {
  nlohmann::json j;
  j["log_z_estimate"] = log_z_estimate;
  j["node_marginals"] = node_marginals;
  j["edge_moments"] = edge_moments;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["method"] = method;
  return j.dump();
}

namespace {

// F(W, q) for factorized q: energy under q plus entropy of q.
double factorized_bound(const Model& model, const std::vector<double>& m) {
  double f = 0.0;
  for (const Edge& e : model.edges()) f += e.w * m[e.i] * m[e.j];
  for (int i = 0; i < model.k(); ++i) {
    f += model.biases()[i] * m[i] + binary_entropy(m[i]);
  }
  return f;
}

}  // namespace

InferenceResult mean_field(const Model& model, std::span<const double> init,
                           const MeanFieldOptions& opts) {
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) {
    throw std::invalid_argument("mean_field: damping must be in [0,1)");
  }
  if (!(opts.tol > 0.0)) throw std::invalid_argument("mean_field: tol must be positive");
  std::vector<double> m(model.k(), 0.5);
  if (!init.empty()) {
    if (static_cast<int>(init.size()) != model.k()) {
      throw std::invalid_argument("mean_field: init length mismatch");
    }
    for (double v : init) {
      if (!(v > 0.0 && v < 1.0)) {
        throw std::invalid_argument("mean_field: init marginals must be in (0,1)");
      }
    }
    m.assign(init.begin(), init.end());
  }

  InferenceResult out;
  out.method = "mean_field";
  out.bound_trace.push_back(factorized_bound(model, m));
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    double max_change = 0.0;
    for (int i = 0; i < model.k(); ++i) {
      double field = model.biases()[i];
      for (const Model::Neighbor& nb : model.neighbors(i)) field += nb.w * m[nb.node];
      const double next = sigmoid(field);
      const double updated = opts.damping * m[i] + (1.0 - opts.damping) * next;
      max_change = std::max(max_change, std::abs(updated - m[i]));
      m[i] = updated;
    }
    const double f = factorized_bound(model, m);
    if (!std::isfinite(f)) throw std::runtime_error("mean_field: non-finite bound");
    if (opts.damping == 0.0 &&
        f < out.bound_trace.back() - 1e-9 * (1.0 + std::abs(f))) {
      throw std::logic_error("mean_field: bound decreased under sequential sweeps");
    }
    out.bound_trace.push_back(f);
    out.iterations = iter;
    if (max_change < opts.tol) {
      out.converged = true;
      break;
    }
  }

  out.log_z_estimate = out.bound_trace.back();
  out.node_marginals = m;
  out.edge_moments.reserve(model.edges().size());
  for (const Edge& e : model.edges()) out.edge_moments.push_back(m[e.i] * m[e.j]);
  return out;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

TreeStructure select_tree(const Model& model) {
  std::vector<int> order(model.edges().size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(model.edges()[a].w) > std::abs(model.edges()[b].w);
  });  // stable keeps the lexicographic storage order among equal |w|

  TreeStructure tree;
  UnionFind uf(model.k());
  for (int e : order) {
    if (uf.unite(model.edges()[e].i, model.edges()[e].j)) tree.edges.push_back(e);
  }
  std::sort(tree.edges.begin(), tree.edges.end());
  return tree;
}

namespace {

// Exact sum-product machinery for a distribution that factors along a fixed
// tree: q(s) ∝ exp(sum_t lambda_t s_u s_v + sum_i lambda_i s_i). Topology and
// the path of every non-tree model edge are precomputed once; evaluate() is
// then called many times with different lambda during coordinate ascent.
class TreeEngine {
 public:
  TreeEngine(const Model& model, const TreeStructure& tree)
      : model_(&model), slots_(tree.edges) {
    const int k = model.k();
    const auto& edges = model.edges();
    const std::size_t n_slots = slots_.size();

    std::vector<bool> used(edges.size(), false);
    UnionFind uf(k);
    for (int s : slots_) {
      if (s < 0 || s >= static_cast<int>(edges.size())) {
        throw std::invalid_argument("tree_bound: tree edge index out of range");
      }
      if (used[s]) throw std::invalid_argument("tree_bound: duplicate tree edge");
      used[s] = true;
      if (!uf.unite(edges[s].i, edges[s].j)) {
        throw std::invalid_argument("tree_bound: tree contains a cycle");
      }
    }
    for (const Edge& e : edges) {
      if (uf.find(e.i) != uf.find(e.j)) {
        throw std::invalid_argument("tree_bound: tree does not span the model graph");
      }
    }

    adj_.resize(k);
    for (std::size_t t = 0; t < n_slots; ++t) {
      const Edge& e = edges[slots_[t]];
      adj_[e.i].push_back({e.j, static_cast<int>(t)});
      adj_[e.j].push_back({e.i, static_cast<int>(t)});
    }

    parent_.assign(k, -1);
    parent_slot_.assign(k, -1);
    depth_.assign(k, 0);
    order_.reserve(k);
    std::vector<bool> seen(k, false);
    for (int root = 0; root < k; ++root) {
      if (seen[root]) continue;
      seen[root] = true;
      order_.push_back(root);
      for (std::size_t head = order_.size() - 1; head < order_.size(); ++head) {
        const int u = order_[head];
        for (const auto& [v, t] : adj_[u]) {
          if (seen[v]) continue;
          seen[v] = true;
          parent_[v] = u;
          parent_slot_[v] = t;
          depth_[v] = depth_[u] + 1;
          order_.push_back(v);
        }
      }
    }

    // Tree path (as a node sequence) for every model edge outside the tree.
    edge_slot_.assign(edges.size(), -1);
    for (std::size_t t = 0; t < n_slots; ++t) edge_slot_[slots_[t]] = static_cast<int>(t);
    edge_path_.resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edge_slot_[e] >= 0) continue;
      int a = edges[e].i, b = edges[e].j;
      std::vector<int> up_a{a}, up_b{b};
      while (a != b) {
        if (depth_[a] >= depth_[b]) {
          a = parent_[a];
          up_a.push_back(a);
        } else {
          b = parent_[b];
          up_b.push_back(b);
        }
      }
      up_b.pop_back();  // drop the shared ancestor; up_a already has it
      up_a.insert(up_a.end(), up_b.rbegin(), up_b.rend());
      edge_path_[e] = std::move(up_a);
    }

    to_parent_.resize(n_slots);
    to_child_.resize(n_slots);
    joint_.resize(n_slots);
    marg_.resize(k);
    moments_.resize(edges.size());
  }

  std::size_t n_slots() const { return slots_.size(); }
  std::size_t n_lambda() const { return slots_.size() + model_->k(); }
  int slot_of(int model_edge) const { return edge_slot_[model_edge]; }
  int model_edge_of(std::size_t slot) const { return slots_[slot]; }

  struct Eval {
    double f = 0.0;
    std::vector<double> node_marginals;
    std::vector<double> edge_moments;  // per model edge
  };

  // lambda holds one coupling per tree slot, then one field per node. The
  // coordinate ascent calls this thousands of times, so everything lands in
  // preallocated scratch; evaluate() copies the buffers out for callers that
  // need the marginals and moments as well as the value.
  double evaluate_f(const std::vector<double>& lambda) const {
    const int k = model_->k();
    const std::size_t n_slots = slots_.size();
    // Messages per slot, toward the parent endpoint and toward the child.
    std::vector<std::array<double, 2>>& to_parent = to_parent_;
    std::vector<std::array<double, 2>>& to_child = to_child_;

    auto coupling = [&](std::size_t t) { return lambda[t]; };
    auto field = [&](int i) { return lambda[n_slots + i]; };
    // Product of the node factor and every incoming message except the one
    // across skip_slot.
    auto gather = [&](int u, int skip_slot) {
      std::array<double, 2> g{1.0, std::exp(field(u))};
      for (const auto& [v, t] : adj_[u]) {
        if (t == skip_slot) continue;
        const auto& msg = (u == child_end(t)) ? to_child[t] : to_parent[t];
        g[0] *= msg[0];
        g[1] *= msg[1];
      }
      return g;
    };

    // Leaves to roots.
    for (std::size_t idx = order_.size(); idx-- > 0;) {
      const int v = order_[idx];
      const int t = parent_slot_[v];
      if (t < 0) continue;
      const std::array<double, 2> g = gather(v, t);
      const double ew = std::exp(coupling(t));
      std::array<double, 2> msg{g[0] + g[1], g[0] + ew * g[1]};
      normalize2(msg);
      to_parent[t] = msg;
    }
    // Roots to leaves.
    for (int u : order_) {
      for (const auto& [v, t] : adj_[u]) {
        if (parent_[v] != u || parent_slot_[v] != t) continue;
        const std::array<double, 2> g = gather(u, t);
        const double ew = std::exp(coupling(t));
        std::array<double, 2> msg{g[0] + g[1], g[0] + ew * g[1]};
        normalize2(msg);
        to_child[t] = msg;
      }
    }

    std::vector<double>& node_marginals = marg_;
    for (int u = 0; u < k; ++u) {
      std::array<double, 2> b = gather(u, -1);
      normalize2(b);
      node_marginals[u] = b[1];
    }

    // Joint of each tree edge's endpoints, stored [2*s_small + s_large].
    std::vector<std::array<double, 4>>& joint = joint_;
    for (std::size_t t = 0; t < n_slots; ++t) {
      const Edge& e = model_->edges()[slots_[t]];
      const std::array<double, 2> gi = gather(e.i, static_cast<int>(t));
      const std::array<double, 2> gj = gather(e.j, static_cast<int>(t));
      const double ew = std::exp(coupling(t));
      std::array<double, 4>& b = joint[t];
      b[0] = gi[0] * gj[0];
      b[1] = gi[0] * gj[1];
      b[2] = gi[1] * gj[0];
      b[3] = ew * gi[1] * gj[1];
      const double z = b[0] + b[1] + b[2] + b[3];
      for (double& x : b) x /= z;
    }

    // Entropy: node terms minus mutual information on tree edges.
    double h = 0.0;
    for (int u = 0; u < k; ++u) h += binary_entropy(node_marginals[u]);
    for (std::size_t t = 0; t < n_slots; ++t) {
      const Edge& e = model_->edges()[slots_[t]];
      const double mi = node_marginals[e.i];
      const double mj = node_marginals[e.j];
      const double marg[2] = {1.0 - mi, mi};
      const double margj[2] = {1.0 - mj, mj};
      for (int a = 0; a < 2; ++a) {
        for (int bb = 0; bb < 2; ++bb) {
          const double p = joint[t][2 * a + bb];
          if (p > 0.0) h -= p * std::log(p / (marg[a] * margj[bb]));
        }
      }
    }

    // <s_i s_j> for every model edge: direct for tree edges, chained along
    // the tree path otherwise (tree distributions are Markov on the tree).
    std::vector<double>& edge_moments = moments_;
    for (std::size_t e = 0; e < model_->edges().size(); ++e) {
      const int t = edge_slot_[e];
      if (t >= 0) {
        edge_moments[e] = joint[t][3];
        continue;
      }
      const std::vector<int>& path = edge_path_[e];
      // m[a][b] = q(s_start = a, s_cur = b), extended one hop at a time.
      const double m0 = node_marginals[path[0]];
      double m[2][2] = {{1.0 - m0, 0.0}, {0.0, m0}};
      for (std::size_t step = 0; step + 1 < path.size(); ++step) {
        const int cur = path[step], next = path[step + 1];
        const int ts = (parent_[next] == cur) ? parent_slot_[next] : parent_slot_[cur];
        const Edge& te = model_->edges()[slots_[ts]];
        // cond[b][c] = q(s_next = c | s_cur = b)
        double cond[2][2];
        const double mc = node_marginals[cur];
        const double mcur[2] = {1.0 - mc, mc};
        for (int b = 0; b < 2; ++b) {
          for (int c = 0; c < 2; ++c) {
            const double j =
                (te.i == cur) ? joint[ts][2 * b + c] : joint[ts][2 * c + b];
            cond[b][c] = mcur[b] > 0.0 ? j / mcur[b] : 0.5;
          }
        }
        double nm[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        for (int a = 0; a < 2; ++a) {
          for (int c = 0; c < 2; ++c) {
            nm[a][c] = m[a][0] * cond[0][c] + m[a][1] * cond[1][c];
          }
        }
        std::copy(&nm[0][0], &nm[0][0] + 4, &m[0][0]);
      }
      edge_moments[e] = m[1][1];
    }

    double f = h;
    for (std::size_t e = 0; e < model_->edges().size(); ++e) {
      f += model_->edges()[e].w * edge_moments[e];
    }
    for (int u = 0; u < k; ++u) f += model_->biases()[u] * node_marginals[u];
    if (!std::isfinite(f)) throw std::runtime_error("tree_bound: non-finite bound");
    return f;
  }

  Eval evaluate(const std::vector<double>& lambda) const {
    Eval out;
    out.f = evaluate_f(lambda);
    out.node_marginals = marg_;
    out.edge_moments = moments_;
    return out;
  }

 private:
  static void normalize2(std::array<double, 2>& v) {
    const double z = v[0] + v[1];
    v[0] /= z;
    v[1] /= z;
  }

  // The endpoint of slot t that is the child in the rooted forest.
  int child_end(int t) const {
    const Edge& e = model_->edges()[slots_[t]];
    return parent_[e.i] == e.j ? e.i : e.j;
  }

  const Model* model_;
  std::vector<int> slots_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::vector<int> order_, parent_, parent_slot_, depth_;
  std::vector<int> edge_slot_;
  std::vector<std::vector<int>> edge_path_;
  // Scratch for evaluate_f; every entry is overwritten before it is read.
  mutable std::vector<std::array<double, 2>> to_parent_, to_child_;
  mutable std::vector<std::array<double, 4>> joint_;
  mutable std::vector<double> marg_, moments_;
};

}  // namespace

InferenceResult tree_bound(const Model& model, const TreeStructure& tree,
                           const TreeBoundOptions& opts, TreeBoundState* state) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tree_bound: tol must be positive");
  if (!(opts.step_floor > 0.0))
    throw std::invalid_argument("tree_bound: step_floor must be positive");
  const TreeEngine engine(model, tree);
  const std::size_t n = engine.n_lambda();

  std::vector<double> lambda(n, 0.0);
  if (state != nullptr && state->lambda.size() == n) {
    lambda = state->lambda;
    for (double v : lambda) {
      if (!std::isfinite(v)) throw std::invalid_argument("tree_bound: non-finite state");
    }
  } else if (!opts.init_marginals.empty()) {
    if (static_cast<int>(opts.init_marginals.size()) != model.k()) {
      throw std::invalid_argument("tree_bound: init marginal length mismatch");
    }
    for (int i = 0; i < model.k(); ++i) lambda[engine.n_slots() + i] =
        logit(opts.init_marginals[i]);
  } else {
    for (std::size_t t = 0; t < engine.n_slots(); ++t) {
      lambda[t] = model.edges()[engine.model_edge_of(t)].w;
    }
    for (int i = 0; i < model.k(); ++i) lambda[engine.n_slots() + i] = model.biases()[i];
  }

  double cur_f = engine.evaluate_f(lambda);
  InferenceResult out;
  out.method = "tree_bound";
  out.bound_trace.push_back(cur_f);

  for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
    const double f_before = cur_f;
    for (std::size_t c = 0; c < n; ++c) {
      double h = 0.5;
      int evals = 0;
      while (h > opts.step_floor && evals < 40) {
        lambda[c] += h;
        const double plus = engine.evaluate_f(lambda);
        ++evals;
        if (plus > cur_f) {
          cur_f = plus;
          continue;
        }
        lambda[c] -= 2.0 * h;
        const double minus = engine.evaluate_f(lambda);
        ++evals;
        if (minus > cur_f) {
          cur_f = minus;
          continue;
        }
        lambda[c] += h;
        h *= 0.5;
      }
    }
    out.bound_trace.push_back(cur_f);
    out.iterations = sweep;
    if (cur_f - f_before < opts.tol) {
      out.converged = true;
      break;
    }
  }

  if (state != nullptr) state->lambda = lambda;
  TreeEngine::Eval final_eval = engine.evaluate(lambda);
  out.log_z_estimate = final_eval.f;
  out.node_marginals = std::move(final_eval.node_marginals);
  out.edge_moments = std::move(final_eval.edge_moments);
  return out;
}

namespace {

// Bethe functional without the consistency precondition; loopy_bp calls this
// on possibly non-converged beliefs where strictness would turn the
// documented in-band failure mode into an exception.
double bethe_value(const Model& model, std::span<const double> node_beliefs,
                   std::span<const std::array<double, 4>> edge_beliefs) {
  double u = 0.0, h = 0.0;
  for (int i = 0; i < model.k(); ++i) {
    u -= model.biases()[i] * node_beliefs[i];
    const int degree = static_cast<int>(model.neighbors(i).size());
    h -= (degree - 1) * binary_entropy(node_beliefs[i]);
  }
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    u -= model.edges()[e].w * edge_beliefs[e][3];
    for (double p : edge_beliefs[e]) {
      if (p > 0.0) h -= p * std::log(p);
    }
  }
  return u - h;
}

}  // namespace

double bethe_free_energy(const Model& model, std::span<const double> node_beliefs,
                         std::span<const std::array<double, 4>> edge_beliefs,
                         double consistency_tol) {
  if (static_cast<int>(node_beliefs.size()) != model.k() ||
      edge_beliefs.size() != model.edges().size()) {
    throw std::invalid_argument("bethe_free_energy: belief shapes do not match model");
  }
  for (double m : node_beliefs) {
    if (!(m >= 0.0 && m <= 1.0)) {
      throw std::invalid_argument("bethe_free_energy: node belief outside [0,1]");
    }
  }
  for (std::size_t e = 0; e < edge_beliefs.size(); ++e) {
    const std::array<double, 4>& b = edge_beliefs[e];
    double total = 0.0;
    for (double p : b) {
      if (!(p >= 0.0)) throw std::invalid_argument("bethe_free_energy: negative belief");
      total += p;
    }
    const Edge& ed = model.edges()[e];
    const double mi = b[2] + b[3];  // marginal of the smaller-index endpoint
    const double mj = b[1] + b[3];
    if (std::abs(total - 1.0) > consistency_tol ||
        std::abs(mi - node_beliefs[ed.i]) > consistency_tol ||
        std::abs(mj - node_beliefs[ed.j]) > consistency_tol) {
      throw std::invalid_argument("bethe_free_energy: beliefs inconsistent on edge " +
                                  std::to_string(ed.i) + "-" + std::to_string(ed.j));
    }
  }
  return bethe_value(model, node_beliefs, edge_beliefs);
}

InferenceResult loopy_bp(const Model& model, const BpOptions& opts, BpState* state) {
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) {
    throw std::invalid_argument("loopy_bp: damping must be in [0,1)");
  }
  if (!(opts.tol > 0.0)) throw std::invalid_argument("loopy_bp: tol must be positive");
  const std::size_t n_dir = 2 * model.edges().size();

  std::vector<double> mu(n_dir, 0.5);
  if (state != nullptr && !state->messages.empty()) {
    if (state->messages.size() != n_dir) {
      throw std::invalid_argument("loopy_bp: warm-start state has wrong size");
    }
    mu = state->messages;
  }

  // Message toward node u along edge e=(i,j): index 2e carries i->j.
  auto toward = [&](const std::vector<double>& msgs, int u, int e) {
    return (model.edges()[e].j == u) ? msgs[2 * e] : msgs[2 * e + 1];
  };
  auto gather = [&](const std::vector<double>& msgs, int u, int skip_edge) {
    std::array<double, 2> g{1.0, std::exp(model.biases()[u])};
    for (const Model::Neighbor& nb : model.neighbors(u)) {
      if (nb.edge == skip_edge) continue;
      const double p = toward(msgs, u, nb.edge);
      g[0] *= 1.0 - p;
      g[1] *= p;
    }
    const double z = g[0] + g[1];
    g[0] /= z;
    g[1] /= z;
    return g;
  };
  auto fresh = [&](const std::vector<double>& msgs, std::size_t dir) {
    const int e = static_cast<int>(dir / 2);
    const int from = (dir % 2 == 0) ? model.edges()[e].i : model.edges()[e].j;
    const std::array<double, 2> g = gather(msgs, from, e);
    const double t0 = g[0] + g[1];
    const double t1 = g[0] + std::exp(model.edges()[e].w) * g[1];
    return t1 / (t0 + t1);
  };

  // The parallel sweep reads only the previous iteration's messages, so each
  // node's outgoing set can be formed from normalized prefix/suffix products
  // of its incoming messages: O(sum of degrees) per sweep instead of
  // O(sum of squared degrees), which is what makes dense graphs affordable.
  const int k = model.k();
  std::vector<double> exp_w(model.edges().size());
  for (std::size_t e = 0; e < exp_w.size(); ++e) exp_w[e] = std::exp(model.edges()[e].w);
  std::vector<double> exp_b(k);
  for (int u = 0; u < k; ++u) exp_b[u] = std::exp(model.biases()[u]);
  std::vector<std::size_t> slab(k + 1, 0);
  for (int u = 0; u < k; ++u) slab[u + 1] = slab[u] + model.neighbors(u).size() + 1;
  std::vector<std::array<double, 2>> pre(slab[k]), suf(slab[k]);
  std::vector<double> next(n_dir);

  const auto normalized = [](double a0, double a1) {
    const double z = a0 + a1;
    return std::array<double, 2>{a0 / z, a1 / z};
  };

  InferenceResult out;
  out.method = "loopy_bp";
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    double residual = 0.0;
    if (opts.schedule == BpSchedule::Parallel) {
      for (int u = 0; u < k; ++u) {
        const auto& nbs = model.neighbors(u);
        const std::size_t base = slab[u];
        const std::size_t deg = nbs.size();
        pre[base] = {1.0, 1.0};
        suf[base + deg] = {1.0, 1.0};
        for (std::size_t i = 0; i < deg; ++i) {
          const double p = toward(mu, u, nbs[i].edge);
          pre[base + i + 1] =
              normalized(pre[base + i][0] * (1.0 - p), pre[base + i][1] * p);
          const std::size_t r = deg - 1 - i;
          const double q = toward(mu, u, nbs[r].edge);
          suf[base + r] =
              normalized((1.0 - q) * suf[base + r + 1][0], q * suf[base + r + 1][1]);
        }
        for (std::size_t i = 0; i < deg; ++i) {
          const int e = nbs[i].edge;
          const double g0 = pre[base + i][0] * suf[base + i + 1][0];
          const double g1 = exp_b[u] * pre[base + i][1] * suf[base + i + 1][1];
          const double t0 = g0 + g1;
          const double t1 = g0 + exp_w[e] * g1;
          const std::size_t d = (model.edges()[e].i == u) ? 2 * e : 2 * e + 1;
          next[d] = opts.damping * mu[d] + (1.0 - opts.damping) * t1 / (t0 + t1);
          residual = std::max(residual, std::abs(next[d] - mu[d]));
        }
      }
      mu.swap(next);
    } else {
      for (std::size_t d = 0; d < n_dir; ++d) {
        const double updated = opts.damping * mu[d] + (1.0 - opts.damping) * fresh(mu, d);
        residual = std::max(residual, std::abs(updated - mu[d]));
        mu[d] = updated;
      }
    }
    out.iterations = iter;
    if (residual < opts.tol) {
      out.converged = true;
      break;
    }
  }

  // Beliefs, through one more prefix/suffix fill so the dense-graph case
  // stays linear in the message count. Positions index each edge's slot in
  // its endpoints' neighbor slabs.
  std::vector<std::pair<std::size_t, std::size_t>> edge_pos(model.edges().size());
  for (int u = 0; u < k; ++u) {
    const auto& nbs = model.neighbors(u);
    const std::size_t base = slab[u];
    const std::size_t deg = nbs.size();
    pre[base] = {1.0, 1.0};
    suf[base + deg] = {1.0, 1.0};
    for (std::size_t i = 0; i < deg; ++i) {
      const double p = toward(mu, u, nbs[i].edge);
      pre[base + i + 1] = normalized(pre[base + i][0] * (1.0 - p), pre[base + i][1] * p);
      const std::size_t r = deg - 1 - i;
      const double q = toward(mu, u, nbs[r].edge);
      suf[base + r] = normalized((1.0 - q) * suf[base + r + 1][0], q * suf[base + r + 1][1]);
      if (model.edges()[nbs[i].edge].i == u)
        edge_pos[nbs[i].edge].first = base + i;
      else
        edge_pos[nbs[i].edge].second = base + i;
    }
  }
  out.node_marginals.resize(model.k());
  for (int u = 0; u < k; ++u) {
    const std::array<double, 2>& full = pre[slab[u] + model.neighbors(u).size()];
    const double g1 = exp_b[u] * full[1];
    out.node_marginals[u] = g1 / (full[0] + g1);
  }
  std::vector<std::array<double, 4>> edge_beliefs(model.edges().size());
  out.edge_moments.resize(model.edges().size());
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    const Edge& ed = model.edges()[e];
    const auto [pi, pj] = edge_pos[e];
    const std::array<double, 2> gi{pre[pi][0] * suf[pi + 1][0],
                                   exp_b[ed.i] * pre[pi][1] * suf[pi + 1][1]};
    const std::array<double, 2> gj{pre[pj][0] * suf[pj + 1][0],
                                   exp_b[ed.j] * pre[pj][1] * suf[pj + 1][1]};
    std::array<double, 4>& b = edge_beliefs[e];
    b[0] = gi[0] * gj[0];
    b[1] = gi[0] * gj[1];
    b[2] = gi[1] * gj[0];
    b[3] = exp_w[e] * gi[1] * gj[1];
    const double z = b[0] + b[1] + b[2] + b[3];
    for (double& x : b) x /= z;
    out.edge_moments[e] = b[3];
  }
  out.log_z_estimate = -bethe_value(model, out.node_marginals, edge_beliefs);
  if (state != nullptr) state->messages = std::move(mu);
  return out;
}

double pseudo_log_likelihood(const Model& model, const DataSet& data) {
  if (data.k() != model.k()) {
    throw std::invalid_argument("pseudo_log_likelihood: data/model size mismatch");
  }
  if (!data.fully_observed()) {
    throw std::invalid_argument("pseudo_log_likelihood: hidden entries present");
  }
  double lp = 0.0;
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    const auto& row = data.row(r);
    double row_lp = 0.0;
    for (int i = 0; i < model.k(); ++i) {
      double field = model.biases()[i];
      for (const Model::Neighbor& nb : model.neighbors(i)) field += nb.w * row[nb.node];
      row_lp += row[i] ? log_sigmoid(field) : log_sigmoid(-field);
    }
    lp += static_cast<double>(data.count(r)) * row_lp;
  }
  return lp;
}

}  // namespace bmb
