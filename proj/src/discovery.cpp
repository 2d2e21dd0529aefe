#include "causalnet/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "causalnet/evalsim.hpp"
#include "causalnet/rng.hpp"

namespace causalnet {

namespace {

// Family-local BIC terms over one complete weighted dataset, memoized by
// (child, parent set). Shared by bic() and the hill climber.
class LocalScorer {
 public:
  LocalScorer(const MGraph& g, const Dataset& d, double alpha) : g_(g), d_(d), alpha_(alpha) {
    if (d.row_count() == 0) throw EmptyDataset("cannot score an empty dataset");
    const Schema& schema = d.schema();
    col_of_node_.assign(g.node_count(), -1);
    arity_.assign(g.node_count(), 0);
    for (int i = 0; i < g.node_count(); ++i) {
      if (g.role(i).kind == RoleKind::Latent) continue;
      col_of_node_[i] = schema.index_of(g.name(i));
      arity_[i] = schema.var(col_of_node_[i]).levels.size();
    }
    log_n_eff_ = std::log(d.total_weight());
  }

  // Rows must be complete on `child` and `parents`.
  double local(int child, std::vector<int> parents) {
    std::sort(parents.begin(), parents.end());
    auto key = std::make_pair(child, parents);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;

    size_t arity = arity_[child];
    size_t configs = 1;
    for (int p : parents) configs *= arity_[p];
    if (configs * arity > (size_t{1} << 26)) {
      throw InvalidArgument("family of '" + g_.name(child) + "' is too large to score");
    }

    std::vector<double> counts(configs * arity, 0.0);
    std::vector<double> totals(configs, 0.0);
    int child_col = col_of_node_[child];
    for (size_t r = 0; r < d_.row_count(); ++r) {
      size_t cfg = 0;
      for (int p : parents) {
        int32_t v = d_.cell(r, col_of_node_[p]);
        if (v == kMissing) {
          throw IncompleteRow("row " + std::to_string(r + 1) + " is missing '" + g_.name(p) +
                              "'");
        }
        cfg = cfg * arity_[p] + static_cast<size_t>(v);
      }
      int32_t x = d_.cell(r, child_col);
      if (x == kMissing) {
        throw IncompleteRow("row " + std::to_string(r + 1) + " is missing '" + g_.name(child) +
                            "'");
      }
      counts[cfg * arity + static_cast<size_t>(x)] += d_.weight(r);
      totals[cfg] += d_.weight(r);
    }

    double ll = 0.0;
    for (size_t cfg = 0; cfg < configs; ++cfg) {
      double denom = totals[cfg] + alpha_ * static_cast<double>(arity);
      if (denom <= 0.0) continue;
      for (size_t l = 0; l < arity; ++l) {
        double cnt = counts[cfg * arity + l];
        if (cnt > 0.0) ll += cnt * std::log((cnt + alpha_) / denom);
      }
    }
    double k = static_cast<double>(arity - 1) * static_cast<double>(configs);
    double score = ll - 0.5 * k * log_n_eff_;
    cache_.emplace(std::move(key), score);
    return score;
  }

 private:
  const MGraph& g_;
  const Dataset& d_;
  double alpha_;
  std::vector<int> col_of_node_;
  std::vector<size_t> arity_;
  double log_n_eff_ = 0.0;
  std::map<std::pair<int, std::vector<int>>, double> cache_;
};

}  // namespace

ScoreValue bic(const MGraph& g, const Dataset& d, double alpha) {
  LocalScorer scorer(g, d, alpha);
  ScoreValue score;
  for (int i = 0; i < g.node_count(); ++i) {
    if (g.role(i).kind == RoleKind::Latent) continue;
    double local = scorer.local(i, g.parents(i));
    score.locals[g.name(i)] = local;
    score.total += local;
  }
  return score;
}

namespace {

enum class Op { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
  Op op;
  int u, v;
  double gain;
};

// Mutable search state: parent lists plus an adjacency matrix.
struct SearchState {
  int n;
  std::vector<std::vector<int>> parents;
  std::vector<char> adj;  // adj[u * n + v] = 1 when u -> v

  bool has(int u, int v) const { return adj[u * static_cast<size_t>(n) + v] != 0; }
  void add(int u, int v) {
    adj[u * static_cast<size_t>(n) + v] = 1;
    parents[v].push_back(u);
    std::sort(parents[v].begin(), parents[v].end());
  }
  void remove(int u, int v) {
    adj[u * static_cast<size_t>(n) + v] = 0;
    parents[v].erase(std::find(parents[v].begin(), parents[v].end(), u));
  }
  // True when a directed path v ~> u exists (so adding u -> v would cycle).
  bool reaches(int from, int to) const {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
      int w = stack.back();
      stack.pop_back();
      if (w == to) return true;
      for (int x = 0; x < n; ++x) {
        if (has(w, x) && !seen[x]) {
          seen[x] = 1;
          stack.push_back(x);
        }
      }
    }
    return false;
  }
};

}  // namespace

MGraph hill_climb(const Dataset& d, const PriorKnowledge& pk, const SemConfig& cfg) {
  if (cfg.max_parents < 1) throw InvalidArgument("max_parents must be at least 1");
  const MGraph& base = pk.base();
  int n = base.node_count();
  LocalScorer scorer(base, d, cfg.alpha);

  SearchState st;
  st.n = n;
  st.parents.assign(n, {});
  st.adj.assign(static_cast<size_t>(n) * n, 0);
  for (const auto& [u, v] : base.edges()) st.add(u, v);

  std::vector<char> subst(n, 0);
  for (int i = 0; i < n; ++i) subst[i] = is_substantive(base.role(i)) ? 1 : 0;

  auto local = [&](int child) { return scorer.local(child, st.parents[child]); };
  auto local_with = [&](int child, std::vector<int> parents) {
    return scorer.local(child, std::move(parents));
  };
  auto minus = [](std::vector<int> v, int x) {
    v.erase(std::find(v.begin(), v.end(), x));
    return v;
  };
  auto plus = [](std::vector<int> v, int x) {
    v.push_back(x);
    return v;
  };

  while (true) {
    Move best{Op::Add, -1, -1, 0.0};
    bool have = false;
    auto consider = [&](Op op, int u, int v, double gain) {
      if (!(gain > 0.0)) return;
      if (have) {
        if (gain < best.gain) return;
        if (gain == best.gain) {
          auto rank = [&](const Move& m) {
            return std::make_tuple(static_cast<int>(m.op), base.name(m.u), base.name(m.v));
          };
          if (rank({op, u, v, gain}) >= rank(best)) return;
        }
      }
      best = {op, u, v, gain};
      have = true;
    };

    for (int u = 0; u < n; ++u) {
      if (!subst[u]) continue;
      for (int v = 0; v < n; ++v) {
        if (u == v || !subst[v]) continue;

        if (!st.has(u, v)) {
          // Add u -> v.
          if (base.role(v).kind == RoleKind::Selection) continue;
          if (pk.blacklisted(u, v)) continue;
          if (st.parents[v].size() >= static_cast<size_t>(cfg.max_parents)) continue;
          if (st.reaches(v, u)) continue;
          double gain = local_with(v, plus(st.parents[v], u)) - local(v);
          consider(Op::Add, u, v, gain);
        } else {
          // Delete u -> v.
          if (!pk.whitelisted(u, v)) {
            double gain = local_with(v, minus(st.parents[v], u)) - local(v);
            consider(Op::Delete, u, v, gain);
          }
          // Reverse u -> v.
          if (!pk.whitelisted(u, v) && !pk.blacklisted(v, u) &&
              base.role(u).kind != RoleKind::Selection &&
              st.parents[u].size() < static_cast<size_t>(cfg.max_parents)) {
            st.remove(u, v);
            bool cycles = st.reaches(u, v);
            st.add(u, v);
            if (!cycles) {
              double gain = local_with(v, minus(st.parents[v], u)) - local(v) +
                            local_with(u, plus(st.parents[u], v)) - local(u);
              consider(Op::Reverse, u, v, gain);
            }
          }
        }
      }
    }

    if (!have) break;
    switch (best.op) {
      case Op::Add:
        st.add(best.u, best.v);
        break;
      case Op::Delete:
        st.remove(best.u, best.v);
        break;
      case Op::Reverse:
        st.remove(best.u, best.v);
        st.add(best.v, best.u);
        break;
    }
  }

  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (st.has(u, v)) edges.emplace_back(u, v);
    }
  }
  return base.with_edges(edges);
}

ImputeResult impute_mode(const CausalNetwork& c, const Dataset& d) {
  const MGraph& g = c.graph();
  const Schema& schema = d.schema();

  // Modeled nodes present as columns; all of them are required.
  std::vector<int> nodes = c.modeled_nodes();
  std::vector<int> col_of(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) {
    col_of[k] = schema.index_of(g.name(nodes[k]));
    if (schema.var(col_of[k]).levels != c.levels(nodes[k])) {
      throw UnknownLevel("column '" + g.name(nodes[k]) + "' levels disagree with the network");
    }
  }

  // Prior-marginal modes for impossible-evidence rows.
  std::vector<int32_t> prior_mode(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) {
    Factor prior = eliminate_codes(c, {nodes[k]}, {});
    const auto& vals = prior.values();
    prior_mode[k] =
        static_cast<int32_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  }

  // CPTs as factors, built once; per row they are sliced by the evidence.
  std::vector<Factor> base;
  base.reserve(nodes.size());
  for (int i : nodes) {
    const Cpt& cpt = c.cpt(i);
    std::vector<Factor::Axis> axes;
    for (size_t p = 0; p < cpt.parents.size(); ++p) {
      axes.push_back({cpt.parents[p], cpt.parent_levels[p]});
    }
    axes.push_back({cpt.child, cpt.child_levels});
    base.emplace_back(std::move(axes), cpt.table);
  }

  ImputeResult result{d, 0};
  // pattern of modeled cells -> (imputed codes for the missing ones, fallback)
  std::map<std::vector<int32_t>, std::pair<std::vector<int32_t>, bool>> cache;
  std::vector<int32_t> key(nodes.size());

  for (size_t r = 0; r < d.row_count(); ++r) {
    bool any_missing = false;
    for (size_t k = 0; k < nodes.size(); ++k) {
      key[k] = d.cell(r, col_of[k]);
      if (key[k] == kMissing) any_missing = true;
    }
    if (!any_missing) continue;

    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<size_t> missing;
      size_t joint_cells = 1;
      for (size_t k = 0; k < nodes.size(); ++k) {
        if (key[k] != kMissing) continue;
        missing.push_back(k);
        joint_cells *= c.levels(nodes[k]).size();
      }

      std::vector<int32_t> imputed(missing.size());
      bool fallback = false;
      if (joint_cells <= (size_t{1} << 20)) {
        // Joint over the missing variables: every other modeled node is
        // evidence, so the product of the sliced CPTs is that joint already.
        Factor joint(1.0);
        for (size_t k = 0; k < nodes.size(); ++k) {
          Factor f = base[k];
          for (size_t e = 0; e < nodes.size(); ++e) {
            if (key[e] == kMissing) continue;
            if (f.axis_of(g.name(nodes[e])) >= 0) f = f.reduce(g.name(nodes[e]), key[e]);
          }
          joint = joint.multiply(f);
        }
        fallback = joint.total() <= 0.0;
        for (size_t m = 0; m < missing.size() && !fallback; ++m) {
          Factor marg = joint.marginal({g.name(nodes[missing[m]])});
          const auto& vals = marg.values();
          imputed[m] =
              static_cast<int32_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
        }
      } else {
        // Too many variables absent at once for one dense joint; eliminate
        // each posterior marginal separately instead.
        std::vector<std::pair<int, int>> evidence;
        for (size_t e = 0; e < nodes.size(); ++e) {
          if (key[e] != kMissing) evidence.emplace_back(nodes[e], key[e]);
        }
        try {
          for (size_t m = 0; m < missing.size(); ++m) {
            Factor marg = eliminate_codes(c, {nodes[missing[m]]}, evidence);
            const auto& vals = marg.values();
            imputed[m] =
                static_cast<int32_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
          }
        } catch (const InconsistentEvidence&) {
          fallback = true;
        }
      }
      if (fallback) {
        for (size_t m = 0; m < missing.size(); ++m) imputed[m] = prior_mode[missing[m]];
      }
      it = cache.emplace(key, std::make_pair(std::move(imputed), fallback)).first;
    }

    const auto& [imputed, fallback] = it->second;
    if (fallback) ++result.fallback_rows;
    size_t m = 0;
    for (size_t k = 0; k < nodes.size(); ++k) {
      if (key[k] == kMissing) result.data.set_cell(r, col_of[k], imputed[m++]);
    }
  }
  return result;
}

namespace {

size_t cells_differing(const Dataset& a, const Dataset& b, const std::vector<int>& cols) {
  size_t diff = 0;
  for (int col : cols) {
    for (size_t r = 0; r < a.row_count(); ++r) {
      if (a.cell(r, col) != b.cell(r, col)) ++diff;
    }
  }
  return diff;
}

// One full E/M run from an optional pre-completed start.
struct RunOutcome {
  std::vector<CausalNetwork> networks;
  SemTrace trace;
};

RunOutcome sem_run(const Dataset& d, const MGraph& g0, const PriorKnowledge& pk,
                   const SemConfig& cfg, const Dataset* initial_completion) {
  std::vector<int> modeled_cols;
  for (int i = 0; i < g0.node_count(); ++i) {
    if (g0.role(i).kind != RoleKind::Latent) {
      modeled_cols.push_back(d.schema().index_of(g0.name(i)));
    }
  }
  size_t missing_cells = 0;
  for (int col : modeled_cols) {
    for (size_t r = 0; r < d.row_count(); ++r) {
      if (d.cell(r, col) == kMissing) ++missing_cells;
    }
  }

  RunOutcome out;
  CausalNetwork theta = initial_completion != nullptr
                            ? fit_parameters(g0, *initial_completion, cfg.alpha)
                            : fit_parameters(g0, d, cfg.alpha);
  MGraph prev_graph = g0;
  Dataset prev_completion(d.schema());
  bool have_prev_completion = false;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    ImputeResult e = impute_mode(theta, d);
    if (have_prev_completion &&
        cells_differing(e.data, prev_completion, modeled_cols) == 0) {
      out.trace.converged = true;
      break;
    }

    MGraph learned = hill_climb(e.data, pk, cfg);
    CausalNetwork refit = fit_parameters(learned, e.data, cfg.alpha);
    double score = bic(learned, e.data, cfg.alpha).total;

    SemIteration it{learned, score, shd(learned, prev_graph),
                    have_prev_completion
                        ? cells_differing(e.data, prev_completion, modeled_cols)
                        : missing_cells,
                    log_likelihood(refit, e.data)};
    out.trace.iterations.push_back(std::move(it));
    out.networks.push_back(refit);

    if (out.trace.iterations.size() >= 2) {
      const auto& cur = out.trace.iterations;
      double prev_score = cur[cur.size() - 2].score;
      double gain = (score - prev_score) / std::max(1.0, std::fabs(prev_score));
      if (gain < cfg.epsilon) {
        out.trace.converged = true;
        break;
      }
    }

    prev_graph = learned;
    prev_completion = std::move(e.data);
    have_prev_completion = true;
    theta = std::move(refit);
  }

  int best = 0;
  for (size_t i = 1; i < out.trace.iterations.size(); ++i) {
    if (out.trace.iterations[i].score > out.trace.iterations[best].score) {
      best = static_cast<int>(i);
    }
  }
  out.trace.best_index = best;
  return out;
}

}  // namespace

SemResult sem(const Dataset& data, const MGraph& g0, const PriorKnowledge& pk,
              const SemConfig& cfg) {
  if (cfg.max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (cfg.restarts < 1) throw InvalidArgument("restarts must be at least 1");
  if (!g0.same_nodes(pk.base())) {
    throw ConstraintConflict("start graph and prior knowledge use different nodes");
  }
  for (const auto& [u, v] : g0.edges()) {
    if (!pk.whitelisted(u, v)) {
      throw ConstraintConflict("start edge " + g0.name(u) + " -> " + g0.name(v) +
                               " is not in the whitelist");
    }
  }

  // Indicator nodes score and impute like any other column; their values are
  // the missingness pattern of the original data, fixed across E-steps.
  bool has_indicators = false;
  for (int i = 0; i < g0.node_count(); ++i) {
    if (g0.role(i).kind == RoleKind::MissIndicator) has_indicators = true;
  }
  Dataset d = has_indicators ? derive_indicators(data, g0) : data;

  std::vector<int> modeled_cols;
  std::vector<size_t> modeled_arity;
  for (int i = 0; i < g0.node_count(); ++i) {
    if (g0.role(i).kind == RoleKind::Latent) continue;
    int col = d.schema().index_of(g0.name(i));
    modeled_cols.push_back(col);
    modeled_arity.push_back(d.schema().var(col).levels.size());
  }

  RunOutcome winner;
  bool have_winner = false;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    RunOutcome run;
    if (restart == 0) {
      run = sem_run(d, g0, pk, cfg, nullptr);
    } else {
      // Later starts perturb the basin: missing cells drawn uniformly.
      Dataset completed = d;
      Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(restart)));
      for (size_t k = 0; k < modeled_cols.size(); ++k) {
        for (size_t r = 0; r < d.row_count(); ++r) {
          if (completed.cell(r, modeled_cols[k]) == kMissing) {
            completed.set_cell(r, modeled_cols[k],
                               static_cast<int32_t>(rng.below(modeled_arity[k])));
          }
        }
      }
      run = sem_run(d, g0, pk, cfg, &completed);
    }
    if (run.trace.iterations.empty()) continue;
    double best_score = run.trace.iterations[run.trace.best_index].score;
    if (!have_winner ||
        best_score > winner.trace.iterations[winner.trace.best_index].score) {
      winner = std::move(run);
      have_winner = true;
    }
  }
  if (!have_winner) throw EmptyDataset("structural EM produced no iterations");

  return {winner.networks[winner.trace.best_index], std::move(winner.trace)};
}

std::string format_trace(const SemTrace& trace) {
  std::string out;
  char buf[64];
  for (size_t i = 0; i < trace.iterations.size(); ++i) {
    const SemIteration& it = trace.iterations[i];
    std::snprintf(buf, sizeof buf, "%.17g", it.score);
    out += "iter=" + std::to_string(i + 1) + " score=" + buf +
           " shd_vs_prev=" + std::to_string(it.shd_vs_prev) +
           " imputed_changed=" + std::to_string(it.imputed_changed) + "\n";
  }
  return out;
}

}  // namespace causalnet
