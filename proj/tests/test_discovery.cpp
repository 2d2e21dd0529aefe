#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "causalnet/discovery.hpp"
#include "causalnet/evalsim.hpp"
#include "causalnet/rng.hpp"
#include "oracles.hpp"

using namespace causalnet;

namespace {

// Family score computed the slow way, keyed by full parent assignments.
double oracle_local(const MGraph& g, const Dataset& d, int node, double alpha) {
  const Schema& schema = d.schema();
  const auto& parents = g.parents(node);
  int child_col = schema.index_of(g.name(node));
  size_t arity = schema.var(child_col).levels.size();

  std::map<std::vector<int32_t>, std::map<int32_t, double>> counts;
  std::map<std::vector<int32_t>, double> totals;
  for (size_t r = 0; r < d.row_count(); ++r) {
    std::vector<int32_t> key;
    for (int p : parents) key.push_back(d.cell(r, schema.index_of(g.name(p))));
    counts[key][d.cell(r, child_col)] += d.weight(r);
    totals[key] += d.weight(r);
  }

  double ll = 0.0;
  for (const auto& [key, cells] : counts) {
    double denom = totals[key] + alpha * static_cast<double>(arity);
    for (const auto& [level, cnt] : cells) {
      if (cnt > 0.0) ll += cnt * std::log((cnt + alpha) / denom);
    }
  }
  double configs = 1.0;
  for (int p : parents) {
    configs *= static_cast<double>(schema.var(schema.index_of(g.name(p))).levels.size());
  }
  double k = static_cast<double>(arity - 1) * configs;
  return ll - 0.5 * k * std::log(d.total_weight());
}

// X -> Y over binary levels with the given conditionals.
CausalNetwork xy_network(double px1, double py1_x0, double py1_x1) {
  MGraph g = MGraph::build({{"X", NodeRole::observed()}, {"Y", NodeRole::observed()}},
                           {{"X", "Y"}});
  Cpt x{"X", {}, {"0", "1"}, {}, {1.0 - px1, px1}};
  Cpt y{"Y", {"X"}, {"0", "1"}, {{"0", "1"}},
        {1.0 - py1_x0, py1_x0, 1.0 - py1_x1, py1_x1}};
  return CausalNetwork::make(std::move(g), {x, y});
}

PriorKnowledge empty_prior(const MGraph& g) {
  return PriorKnowledge::make(g.with_edges({}), {});
}

// Masks each cell of the given columns independently with probability p.
Dataset mask_mcar(const Dataset& d, const std::vector<int>& cols, double p, uint64_t seed) {
  Dataset out = d;
  Rng rng(seed);
  for (int col : cols) {
    for (size_t r = 0; r < d.row_count(); ++r) {
      if (rng.uniform() < p) out.set_cell(r, col, kMissing);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single-node score equals counts times log frequencies minus the penalty") {
  MGraph g = MGraph::build({{"T", NodeRole::observed()}}, {});
  Schema schema = Schema::make({{"T", {"0", "1"}, {"", "NA"}}});
  Dataset d(schema);
  d.append_row({0});
  d.append_row({0});
  d.append_row({1});
  d.append_row({1});

  ScoreValue s = bic(g, d, 0.0);
  CHECK(s.total == doctest::Approx(4.0 * std::log(0.5) - 0.5 * std::log(4.0)));
  REQUIRE(s.locals.size() == 1);
  CHECK(s.locals.at("T") == doctest::Approx(s.total));

  SUBCASE("row weights scale both the counts and the effective sample size") {
    for (size_t r = 0; r < 4; ++r) d.set_weight(r, 2.0);
    CHECK(bic(g, d, 0.0).total == doctest::Approx(8.0 * std::log(0.5) - 0.5 * std::log(8.0)));
  }
  SUBCASE("smoothing shifts skewed counts toward uniform") {
    d.set_cell(2, 0, 0);  // counts 3/1
    CHECK(bic(g, d, 0.0).total ==
          doctest::Approx(3.0 * std::log(0.75) + std::log(0.25) - 0.5 * std::log(4.0)));
    CHECK(bic(g, d, 1.0).total ==
          doctest::Approx(3.0 * std::log(4.0 / 6.0) + std::log(2.0 / 6.0) -
                          0.5 * std::log(4.0)));
  }
}

TEST_CASE("score decomposes into per-family terms that match brute-force counting") {
  Rng rng(2026);
  for (int round = 0; round < 10; ++round) {
    CausalNetwork truth = oracles::random_network(rng, 5, 0.4);
    Dataset d = sample(truth, 300, rng.bits());
    const MGraph& g = truth.graph();

    for (double alpha : {0.0, 1.0}) {
      ScoreValue s = bic(g, d, alpha);
      double total = 0.0;
      for (int i = 0; i < g.node_count(); ++i) {
        double expect = oracle_local(g, d, i, alpha);
        CHECK(s.locals.at(g.name(i)) == doctest::Approx(expect).epsilon(1e-9));
        total += expect;
      }
      CHECK(s.total == doctest::Approx(total).epsilon(1e-9));
    }
  }
}

TEST_CASE("scoring skips latent nodes") {
  MGraph g = MGraph::build({{"A", NodeRole::observed()}, {"L", NodeRole::latent()}}, {});
  Schema schema = Schema::make({{"A", {"0", "1"}, {"", "NA"}}});
  Dataset d(schema);
  d.append_row({0});
  d.append_row({1});
  ScoreValue s = bic(g, d, 1.0);
  CHECK(s.locals.size() == 1);
  CHECK(s.locals.count("L") == 0);
}

TEST_CASE("an edge raises the score exactly when the data support it") {
  int dependent_wins = 0, independent_wins = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    MGraph with_edge = xy_network(0.5, 0.2, 0.8).graph();
    MGraph no_edge = with_edge.with_edges({});

    Dataset dep = sample(xy_network(0.5, 0.2, 0.8), 400, mix_seed(77, seed));
    if (bic(with_edge, dep, 1.0).total > bic(no_edge, dep, 1.0).total) ++dependent_wins;

    Dataset ind = sample(xy_network(0.5, 0.5, 0.5), 2000, mix_seed(78, seed));
    if (bic(no_edge, ind, 1.0).total > bic(with_edge, ind, 1.0).total) ++independent_wins;
  }
  CHECK(dependent_wins >= 19);
  CHECK(independent_wins >= 19);
}

TEST_CASE("scoring rejects incomplete or empty data") {
  MGraph g = MGraph::build({{"T", NodeRole::observed()}}, {});
  Schema schema = Schema::make({{"T", {"0", "1"}, {"", "NA"}}});
  Dataset empty(schema);
  CHECK_THROWS_AS(bic(g, empty, 1.0), EmptyDataset);

  Dataset d(schema);
  d.append_row({kMissing});
  CHECK_THROWS_AS(bic(g, d, 1.0), IncompleteRow);
}

TEST_CASE("hill climbing reaches the exhaustive optimum on three nodes") {
  Rng rng(31337);
  int optimal = 0;
  const int rounds = 20;
  for (int round = 0; round < rounds; ++round) {
    CausalNetwork truth = oracles::random_network(rng, 3, 0.5);
    Dataset d = sample(truth, 300, rng.bits());
    MGraph base = truth.graph().with_edges({});
    SemConfig cfg;

    // Score every DAG on the three labeled nodes.
    std::vector<std::pair<std::string, std::string>> all_pairs;
    for (int u = 0; u < 3; ++u) {
      for (int v = 0; v < 3; ++v) {
        if (u != v) all_pairs.emplace_back(base.name(u), base.name(v));
      }
    }
    double best = -1e300;
    int dags = 0;
    for (unsigned mask = 0; mask < 64; ++mask) {
      std::vector<std::pair<int, int>> edges;
      for (size_t b = 0; b < 6; ++b) {
        if (mask & (1u << b)) {
          edges.emplace_back(base.index_of(all_pairs[b].first),
                             base.index_of(all_pairs[b].second));
        }
      }
      try {
        MGraph candidate = base.with_edges(edges);
        ++dags;
        best = std::max(best, bic(candidate, d, cfg.alpha).total);
      } catch (const CycleDetected&) {
      }
    }
    CHECK(dags == 25);

    MGraph climbed = hill_climb(d, empty_prior(base), cfg);
    double got = bic(climbed, d, cfg.alpha).total;
    CHECK(got <= best + 1e-9);
    if (got >= best - 1e-9) ++optimal;
  }
  CHECK(optimal >= 18);
}

TEST_CASE("hill climbing adds nothing when the variables are independent") {
  int clean = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    MGraph g = MGraph::build({{"A", NodeRole::observed()},
                              {"B", NodeRole::observed()},
                              {"C", NodeRole::observed()},
                              {"D", NodeRole::observed()}},
                             {});
    std::vector<Cpt> cpts;
    for (const char* name : {"A", "B", "C", "D"}) {
      cpts.push_back(Cpt{name, {}, {"0", "1"}, {}, {0.6, 0.4}});
    }
    CausalNetwork truth = CausalNetwork::make(g, std::move(cpts));
    Dataset d = sample(truth, 5000, mix_seed(500, seed));
    MGraph climbed = hill_climb(d, empty_prior(g), {});
    if (climbed.edges().empty()) ++clean;
  }
  CHECK(clean >= 18);
}

TEST_CASE("hill climbing recovers a strong two-variable dependence") {
  Dataset d = sample(xy_network(0.4, 0.1, 0.9), 2000, 9);
  MGraph climbed = hill_climb(d, empty_prior(xy_network(0.4, 0.1, 0.9).graph()), {});
  CHECK(climbed.edges().size() == 1);
  int x = climbed.index_of("X"), y = climbed.index_of("Y");
  CHECK((climbed.has_edge(x, y) || climbed.has_edge(y, x)));
}

TEST_CASE("a fully constrained search returns the prior graph unchanged") {
  Rng rng(4);
  CausalNetwork truth = oracles::random_network(rng, 4, 0.5);
  Dataset d = sample(truth, 500, 4);
  const MGraph& base = truth.graph();

  std::vector<std::pair<std::string, std::string>> blacklist;
  for (int u = 0; u < base.node_count(); ++u) {
    for (int v = 0; v < base.node_count(); ++v) {
      if (u != v && !base.has_edge(u, v)) blacklist.emplace_back(base.name(u), base.name(v));
    }
  }
  MGraph climbed = hill_climb(d, PriorKnowledge::make(base, blacklist), {});
  CHECK(climbed.same_edges(base));
}

TEST_CASE("search output always contains the prior edges and respects the blacklist") {
  Rng rng(555);
  for (int round = 0; round < 30; ++round) {
    CausalNetwork gen = oracles::random_network(rng, 6, 0.3);
    Dataset d = sample(gen, 400, rng.bits());
    MGraph base = oracles::random_dag(rng, 6, 0.25);

    std::vector<std::pair<std::string, std::string>> blacklist;
    for (int u = 0; u < 6; ++u) {
      for (int v = 0; v < 6; ++v) {
        if (u != v && !base.has_edge(u, v) && rng.below(5) == 0) {
          blacklist.emplace_back(base.name(u), base.name(v));
        }
      }
    }

    MGraph climbed = hill_climb(d, PriorKnowledge::make(base, blacklist), {});
    for (const auto& [u, v] : base.edges()) {
      CHECK(climbed.has_edge(climbed.index_of(base.name(u)), climbed.index_of(base.name(v))));
    }
    for (const auto& [u, v] : blacklist) {
      CHECK_FALSE(climbed.has_edge(climbed.index_of(u), climbed.index_of(v)));
    }
  }
}

TEST_CASE("search never points an edge at a selection node") {
  MGraph g = MGraph::build({{"S", NodeRole::selection()},
                            {"A", NodeRole::observed()},
                            {"B", NodeRole::observed()}},
                           {{"S", "A"}, {"A", "B"}});
  Cpt s{"S", {}, {"a", "b"}, {}, {0.5, 0.5}};
  Cpt a{"A", {"S"}, {"0", "1"}, {{"a", "b"}}, {0.9, 0.1, 0.2, 0.8}};
  Cpt b{"B", {"A"}, {"0", "1"}, {{"0", "1"}}, {0.85, 0.15, 0.15, 0.85}};
  CausalNetwork truth = CausalNetwork::make(g, {s, a, b});
  Dataset d = sample(truth, 3000, 21);

  MGraph climbed = hill_climb(d, empty_prior(g), {});
  for (const auto& [u, v] : climbed.edges()) {
    CHECK(climbed.role(v).kind != RoleKind::Selection);
  }
  // The dependences themselves are found, oriented away from the cohort.
  CHECK(climbed.has_edge(climbed.index_of("S"), climbed.index_of("A")));
  CHECK(climbed.edges().size() == 2);
}

TEST_CASE("the parent cap binds") {
  MGraph g = MGraph::build({{"X1", NodeRole::observed()},
                            {"X2", NodeRole::observed()},
                            {"X3", NodeRole::observed()},
                            {"X4", NodeRole::observed()},
                            {"Y", NodeRole::observed()}},
                           {{"X1", "Y"}, {"X2", "Y"}, {"X3", "Y"}, {"X4", "Y"}});
  std::vector<Cpt> cpts;
  for (const char* name : {"X1", "X2", "X3", "X4"}) {
    cpts.push_back(Cpt{name, {}, {"0", "1"}, {}, {0.5, 0.5}});
  }
  Cpt y{"Y", {"X1", "X2", "X3", "X4"}, {"0", "1"},
        {{"0", "1"}, {"0", "1"}, {"0", "1"}, {"0", "1"}},
        std::vector<double>(32, 0.0)};
  for (size_t cfg = 0; cfg < 16; ++cfg) {
    int ones = __builtin_popcount(static_cast<unsigned>(cfg));
    double p1 = 0.1 + 0.2 * ones;
    y.row(cfg)[0] = 1.0 - p1;
    y.row(cfg)[1] = p1;
  }
  cpts.push_back(y);
  CausalNetwork truth = CausalNetwork::make(g, std::move(cpts));
  Dataset d = sample(truth, 4000, 8);

  SemConfig cfg;
  cfg.max_parents = 2;
  MGraph climbed = hill_climb(d, empty_prior(g), cfg);
  for (int i = 0; i < climbed.node_count(); ++i) {
    CHECK(climbed.parents(i).size() <= 2);
  }
  CHECK_THROWS_AS(hill_climb(d, empty_prior(g), SemConfig{20, 1e-6, 0, 1.0, 0, 1}),
                  InvalidArgument);
}

TEST_CASE("imputation fills every gap with the exact posterior mode") {
  Rng rng(606);
  for (int round = 0; round < 4; ++round) {
    CausalNetwork truth = oracles::random_network(rng, 5, 0.4);
    Dataset complete = sample(truth, 30, rng.bits());
    std::vector<int> cols{0, 1, 2, 3, 4};
    Dataset holes = mask_mcar(complete, cols, 0.35, rng.bits());

    ImputeResult res = impute_mode(truth, holes);
    CHECK(res.fallback_rows == 0);
    CHECK(res.data.complete_on(cols));

    const MGraph& g = truth.graph();
    for (size_t r = 0; r < holes.row_count(); ++r) {
      std::vector<std::pair<int, int>> evidence;
      for (int col = 0; col < 5; ++col) {
        int node = g.index_of(holes.schema().var(col).name);
        if (holes.cell(r, col) != kMissing) evidence.emplace_back(node, holes.cell(r, col));
      }
      for (int col = 0; col < 5; ++col) {
        int node = g.index_of(holes.schema().var(col).name);
        if (holes.cell(r, col) != kMissing) {
          CHECK(res.data.cell(r, col) == complete.cell(r, col));
          continue;
        }
        std::vector<double> posterior = oracles::enum_query(truth, {node}, evidence);
        REQUIRE(!posterior.empty());
        auto mode = std::max_element(posterior.begin(), posterior.end());
        CHECK(res.data.cell(r, col) == static_cast<int32_t>(mode - posterior.begin()));
      }
    }
  }
}

TEST_CASE("imputation propagates point-mass dependences and breaks ties downward") {
  CausalNetwork truth = xy_network(0.5, 0.0, 1.0);  // Y copies X
  Schema schema = Schema::make({{"X", {"0", "1"}, {"", "NA"}}, {"Y", {"0", "1"}, {"", "NA"}}});
  Dataset d(schema);
  d.append_row({1, kMissing});
  d.append_row({0, kMissing});
  d.append_row({kMissing, 1});
  ImputeResult res = impute_mode(truth, d);
  CHECK(res.fallback_rows == 0);
  CHECK(res.data.cell(0, 1) == 1);
  CHECK(res.data.cell(1, 1) == 0);
  CHECK(res.data.cell(2, 0) == 1);

  // An exact posterior tie lands on the lowest level code.
  CausalNetwork fair = xy_network(0.5, 0.5, 0.5);
  Dataset tie(schema);
  tie.append_row({kMissing, 0});
  CHECK(impute_mode(fair, tie).data.cell(0, 0) == 0);
}

TEST_CASE("rows with impossible evidence fall back to the prior mode and are counted") {
  MGraph g = MGraph::build({{"X", NodeRole::observed()},
                            {"Y", NodeRole::observed()},
                            {"Z", NodeRole::observed()}},
                           {{"X", "Y"}});
  Cpt x{"X", {}, {"0", "1"}, {}, {0.5, 0.5}};
  Cpt y{"Y", {"X"}, {"0", "1"}, {{"0", "1"}}, {1.0, 0.0, 0.0, 1.0}};
  Cpt z{"Z", {}, {"0", "1"}, {}, {0.3, 0.7}};
  CausalNetwork c = CausalNetwork::make(std::move(g), {x, y, z});

  Schema schema = Schema::make({{"X", {"0", "1"}, {"", "NA"}},
                                {"Y", {"0", "1"}, {"", "NA"}},
                                {"Z", {"0", "1"}, {"", "NA"}}});
  Dataset d(schema);
  d.append_row({1, 0, kMissing});  // P(X=1, Y=0) = 0
  d.append_row({1, 1, kMissing});
  ImputeResult res = impute_mode(c, d);
  CHECK(res.fallback_rows == 1);
  CHECK(res.data.cell(0, 2) == 1);  // prior mode of Z
  CHECK(res.data.cell(1, 2) == 1);  // consistent evidence: posterior equals prior here
}

TEST_CASE("imputation leaves complete data untouched") {
  Rng rng(77);
  CausalNetwork truth = oracles::random_network(rng, 4, 0.5);
  Dataset d = sample(truth, 50, 3);
  ImputeResult res = impute_mode(truth, d);
  CHECK(res.fallback_rows == 0);
  CHECK(res.data.format_csv() == d.format_csv());
}

TEST_CASE("imputation requires matching level vocabularies") {
  CausalNetwork truth = xy_network(0.5, 0.2, 0.8);
  Schema schema =
      Schema::make({{"X", {"0", "1", "2"}, {"", "NA"}}, {"Y", {"0", "1"}, {"", "NA"}}});
  Dataset d(schema);
  d.append_row({0, kMissing});
  CHECK_THROWS_AS(impute_mode(truth, d), UnknownLevel);
}

TEST_CASE("structural EM on complete data is one search step") {
  Rng rng(404);
  CausalNetwork truth = oracles::random_network(rng, 5, 0.4);
  Dataset d = sample(truth, 600, 12);
  MGraph g0 = truth.graph().with_edges({});
  PriorKnowledge pk = empty_prior(truth.graph());
  SemConfig cfg;

  SemResult res = sem(d, g0, pk, cfg);
  REQUIRE(res.trace.iterations.size() == 1);
  CHECK(res.trace.converged);
  CHECK(res.trace.best_index == 0);
  CHECK(res.trace.iterations[0].imputed_changed == 0);
  CHECK(res.network.graph().same_edges(hill_climb(d, pk, cfg)));
  CHECK(res.trace.iterations[0].score ==
        doctest::Approx(bic(res.network.graph(), d, cfg.alpha).total));
}

TEST_CASE("structural EM trace scores rise until the stopping step") {
  Rng rng(505);
  CausalNetwork truth = oracles::random_network(rng, 6, 0.4);
  Dataset complete = sample(truth, 1500, 15);
  Dataset holes = mask_mcar(complete, {0, 1, 2, 3, 4, 5}, 0.25, 16);

  MGraph g0 = truth.graph().with_edges({});
  SemResult res = sem(holes, g0, empty_prior(truth.graph()), {});
  const auto& iters = res.trace.iterations;
  REQUIRE(!iters.empty());
  for (size_t i = 0; i + 2 < iters.size(); ++i) {
    CHECK(iters[i + 1].score > iters[i].score);
  }
  int best = res.trace.best_index;
  for (const auto& it : iters) {
    CHECK(it.score <= iters[best].score);
  }
  // First iteration reports the initially missing cells as changed.
  size_t missing = 0;
  for (int col = 0; col < 6; ++col) {
    for (size_t r = 0; r < holes.row_count(); ++r) {
      if (holes.cell(r, col) == kMissing) ++missing;
    }
  }
  CHECK(iters[0].imputed_changed == missing);
}

TEST_CASE("structural EM beats listwise deletion under observable-driven masking") {
  // Six columns lose 40% or 20% of their values depending on an observed
  // context root; the context edges are whitelisted prior knowledge. Listwise
  // deletion keeps ~15% of rows, skewed toward one context value, so it tends
  // to drop the weaker parent of a masked column.
  int sem_wins = 0;
  const int rounds = 10;
  for (uint64_t seed = 1; seed <= rounds; ++seed) {
    Rng rng(mix_seed(8080, seed));
    CausalNetwork truth = oracles::masked_sink_truth(rng, 10, 6, 0.90);
    Dataset complete = sample(truth, 10000, rng.bits());
    Dataset holes = complete;
    oracles::mask_by_driver(holes, 0, {1, 2, 3, 4, 5, 6}, 0.40, 0.20, rng.bits());

    std::vector<std::pair<int, int>> ctx_edges;
    for (int m = 1; m <= 6; ++m) ctx_edges.push_back({0, m});
    MGraph g0 = truth.graph().with_edges(ctx_edges);
    PriorKnowledge pk = PriorKnowledge::make(g0, {});
    SemConfig cfg;
    cfg.max_iterations = 8;
    cfg.epsilon = 1e-4;

    SemResult res = sem(holes, g0, pk, cfg);
    std::vector<int> all_cols{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    MGraph listwise = hill_climb(holes.drop_incomplete(all_cols), pk, cfg);

    for (const auto& [u, v] : ctx_edges) CHECK(res.network.graph().has_edge(u, v));
    if (shd(res.network.graph(), truth.graph()) <= shd(listwise, truth.graph())) ++sem_wins;
  }
  CHECK(sem_wins >= 8);
}

TEST_CASE("light random masking barely degrades structure recovery") {
  int close = 0;
  const int rounds = 10;
  for (uint64_t seed = 1; seed <= rounds; ++seed) {
    Rng rng(mix_seed(9090, seed));
    CausalNetwork truth = oracles::random_network(rng, 8, 0.35);
    Dataset complete = sample(truth, 3000, rng.bits());
    Dataset holes = mask_mcar(complete, {0, 1, 2, 3, 4, 5, 6, 7}, 0.10, rng.bits());

    MGraph g0 = truth.graph().with_edges({});
    PriorKnowledge pk = empty_prior(truth.graph());
    SemConfig cfg;
    cfg.max_iterations = 6;
    cfg.epsilon = 1e-4;

    int with_holes = shd(sem(holes, g0, pk, cfg).network.graph(), truth.graph());
    int full = shd(hill_climb(complete, pk, cfg), truth.graph());
    if (with_holes <= full + 2) ++close;
  }
  CHECK(close >= 8);
}

TEST_CASE("structural EM keeps the prior edges") {
  Rng rng(313);
  CausalNetwork truth = oracles::random_network(rng, 6, 0.4);
  Dataset complete = sample(truth, 800, 17);
  Dataset holes = mask_mcar(complete, {0, 1, 2, 3, 4, 5}, 0.2, 18);

  // Freeze two of the generating edges.
  const auto& edges = truth.graph().edges();
  REQUIRE(edges.size() >= 2);
  std::vector<std::pair<int, int>> frozen{edges[0], edges[1]};
  MGraph base = truth.graph().with_edges(frozen);
  PriorKnowledge pk = PriorKnowledge::make(base, {});

  SemResult res = sem(holes, base, pk, {});
  for (const auto& [u, v] : frozen) {
    CHECK(res.network.graph().has_edge(u, v));
  }
}

TEST_CASE("structural EM is deterministic") {
  Rng rng(616);
  CausalNetwork truth = oracles::random_network(rng, 6, 0.4);
  Dataset complete = sample(truth, 700, 19);
  Dataset holes = mask_mcar(complete, {0, 1, 2, 3, 4, 5}, 0.2, 20);

  MGraph g0 = truth.graph().with_edges({});
  PriorKnowledge pk = empty_prior(truth.graph());
  SemConfig cfg;
  cfg.restarts = 2;
  cfg.seed = 99;

  SemResult a = sem(holes, g0, pk, cfg);
  SemResult b = sem(holes, g0, pk, cfg);
  CHECK(format_trace(a.trace) == format_trace(b.trace));
  CHECK(format_network(a.network) == format_network(b.network));
}

TEST_CASE("extra restarts can only improve the final score") {
  Rng rng(717);
  CausalNetwork truth = oracles::random_network(rng, 6, 0.4);
  Dataset complete = sample(truth, 700, 23);
  Dataset holes = mask_mcar(complete, {0, 1, 2, 3, 4, 5}, 0.3, 24);

  MGraph g0 = truth.graph().with_edges({});
  PriorKnowledge pk = empty_prior(truth.graph());
  SemConfig one;
  SemConfig three;
  three.restarts = 3;
  three.seed = 1234;

  SemResult r1 = sem(holes, g0, pk, one);
  SemResult r3 = sem(holes, g0, pk, three);
  double best1 = r1.trace.iterations[r1.trace.best_index].score;
  double best3 = r3.trace.iterations[r3.trace.best_index].score;
  CHECK(best3 >= best1);
}

TEST_CASE("the trace serializes one line per iteration") {
  SemTrace trace;
  MGraph g = MGraph::build({{"A", NodeRole::observed()}}, {});
  trace.iterations.push_back({g, -123.5, 2, 7, -120.0});
  trace.iterations.push_back({g, -100.25, 0, 1, -98.0});
  std::string text = format_trace(trace);
  CHECK(text ==
        "iter=1 score=-123.5 shd_vs_prev=2 imputed_changed=7\n"
        "iter=2 score=-100.25 shd_vs_prev=0 imputed_changed=1\n");
}

TEST_CASE("structural EM rejects inconsistent inputs") {
  CausalNetwork truth = xy_network(0.5, 0.2, 0.8);
  Dataset d = sample(truth, 100, 1);
  MGraph g = truth.graph();

  // Start edge outside the whitelist.
  CHECK_THROWS_AS(sem(d, g, empty_prior(g), {}), ConstraintConflict);
  // Node sets differ.
  MGraph other = MGraph::build({{"X", NodeRole::observed()}}, {});
  CHECK_THROWS_AS(sem(d, other, empty_prior(g), {}), ConstraintConflict);

  SemConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(sem(d, g.with_edges({}), empty_prior(g), bad), InvalidArgument);
  bad = {};
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(sem(d, g.with_edges({}), empty_prior(g), bad), InvalidArgument);
  bad = {};
  bad.restarts = 0;
  CHECK_THROWS_AS(sem(d, g.with_edges({}), empty_prior(g), bad), InvalidArgument);
}

namespace {

// Two-variable truth with context-driven masking of Y, as an m-graph:
// ctx -> Y, ctx -> R_Y. Y is hidden 60% of the time when ctx=1, never
// when ctx=0.
struct MaskedPair {
  CausalNetwork truth;
  Dataset holes;
};

MaskedPair masked_pair(uint64_t seed, size_t n) {
  MGraph g = MGraph::build({{"ctx", NodeRole::observed()},
                            {"Y", NodeRole::partially_observed()},
                            {"R_Y", NodeRole::miss_indicator("Y")}},
                           {{"ctx", "Y"}, {"ctx", "R_Y"}});
  Cpt ctx{"ctx", {}, {"0", "1"}, {}, {0.5, 0.5}};
  Cpt y{"Y", {"ctx"}, {"0", "1"}, {{"0", "1"}}, {0.85, 0.15, 0.25, 0.75}};
  Cpt ry{"R_Y", {"ctx"}, {"0", "1"}, {{"0", "1"}}, {1.0, 0.0, 0.4, 0.6}};
  CausalNetwork truth = CausalNetwork::make(std::move(g), {ctx, y, ry});

  Dataset holes(Schema::make({{"ctx", {"0", "1"}}, {"Y", {"0", "1"}}}));
  Rng rng(seed);
  for (size_t r = 0; r < n; ++r) {
    int32_t c = rng.uniform() < 0.5 ? 1 : 0;
    int32_t yv = rng.uniform() < (c == 1 ? 0.75 : 0.15) ? 1 : 0;
    bool hidden = c == 1 && rng.uniform() < 0.6;
    holes.append_row({c, hidden ? kMissing : yv});
  }
  return {truth, holes};
}

}  // namespace

TEST_CASE("structural EM accepts an indicator-bearing start graph") {
  MaskedPair mp = masked_pair(11, 4000);
  const MGraph& mg = mp.truth.graph();

  MGraph g0 = mg;  // both arcs are prior knowledge
  PriorKnowledge pk = PriorKnowledge::make(g0, {});
  SemConfig cfg;
  cfg.max_iterations = 6;
  cfg.epsilon = 1e-5;
  SemResult res = sem(mp.holes, g0, pk, cfg);

  const MGraph& learned = res.network.graph();
  CHECK(learned.has_edge(0, 1));
  CHECK(learned.has_edge(0, 2));

  // The fitted network carries the missingness mechanism: P(R_Y=1 | ctx)
  // estimated from the pattern itself.
  const Cpt& ry = res.network.cpt(2);
  CHECK(ry.row(0)[1] == doctest::Approx(0.0).epsilon(0.02));
  CHECK(ry.row(1)[1] == doctest::Approx(0.6).epsilon(0.05));

  // Imputation conditions on ctx through the whitelisted edge. Mode filling
  // sharpens the majority level, so the refit conditional may overshoot the
  // generating 0.75 but must not collapse toward the pooled marginal (~0.32).
  const Cpt& y = res.network.cpt(1);
  CHECK(y.row(0)[1] == doctest::Approx(0.15).epsilon(0.25));
  CHECK(y.row(1)[1] > 0.70);
  CHECK(y.row(1)[1] < 0.95);
}

TEST_CASE("search never touches indicator arcs") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    MaskedPair mp = masked_pair(mix_seed(5150, seed), 800);
    const MGraph& mg = mp.truth.graph();
    MGraph g0 = mg.with_edges({{0, 2}});
    PriorKnowledge pk = PriorKnowledge::make(g0, {});
    SemConfig cfg;
    cfg.max_iterations = 4;
    cfg.epsilon = 1e-4;
    SemResult res = sem(mp.holes, g0, pk, cfg);

    for (const auto& [u, v] : res.network.graph().edges()) {
      bool touches_indicator = res.network.graph().role(u).kind == RoleKind::MissIndicator ||
                               res.network.graph().role(v).kind == RoleKind::MissIndicator;
      if (touches_indicator) CHECK(pk.whitelisted(u, v));
    }
    CHECK(res.network.graph().has_edge(0, 2));
  }
}
