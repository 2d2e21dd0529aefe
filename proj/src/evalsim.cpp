#include "causalnet/evalsim.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <thread>

#include "causalnet/rng.hpp"

namespace causalnet {

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) {
    throw InvalidArgument("labels and scores differ in length");
  }
  size_t n1 = 0, n0 = 0;
  for (int l : labels) (l ? n1 : n0) += 1;
  if (n1 == 0 || n0 == 0) {
    throw DegenerateLabels("need at least one positive and one negative label");
  }

  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Doubled midranks stay integral, so the rank sum is exact.
  double rank2_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double rank2 = static_cast<double>(i + 1 + j);  // 2 * average rank, 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank2_pos += rank2;
    }
    i = j;
  }
  double u2 = rank2_pos - static_cast<double>(n1) * static_cast<double>(n1 + 1);
  return u2 / (2.0 * static_cast<double>(n1) * static_cast<double>(n0));
}

namespace {

// Orientation per unordered substantive pair {a,b} with a < b:
// 0 no edge, 1 a->b, 2 b->a, 3 both (never, in a DAG, but kept total).
std::map<std::pair<std::string, std::string>, int> pair_status(const MGraph& g) {
  std::map<std::pair<std::string, std::string>, int> out;
  for (const auto& [u, v] : g.edges()) {
    if (!is_substantive(g.role(u)) || !is_substantive(g.role(v))) continue;
    std::string a = g.name(u), b = g.name(v);
    if (a < b) {
      out[{a, b}] |= 1;
    } else {
      out[{b, a}] |= 2;
    }
  }
  return out;
}

}  // namespace

int shd(const MGraph& g1, const MGraph& g2) {
  std::vector<std::string> n1, n2;
  for (const auto& [name, role] : g1.nodes()) n1.push_back(name);
  for (const auto& [name, role] : g2.nodes()) n2.push_back(name);
  std::sort(n1.begin(), n1.end());
  std::sort(n2.begin(), n2.end());
  if (n1 != n2) throw NodeSetMismatch("graphs are over different node sets");

  auto s1 = pair_status(g1);
  auto s2 = pair_status(g2);
  int dist = 0;
  for (const auto& [pair, status] : s1) {
    auto other = s2.find(pair);
    if (status != (other == s2.end() ? 0 : other->second)) ++dist;
  }
  for (const auto& [pair, status] : s2) {
    if (status != 0 && !s1.count(pair)) ++dist;
  }
  return dist;
}

Simulated simulate_cohorts(const SimConfig& cfg) {
  const CausalNetwork& truth = cfg.truth;
  const MGraph& g = truth.graph();

  std::vector<int> selection = g.role_set(RoleKind::Selection);
  if (selection.size() != 1) {
    throw InvalidArgument("the ground truth needs exactly one selection node");
  }
  int cohort = selection[0];

  for (const auto& [level, rows] : cfg.rows_per_cohort) {
    truth.level_code(cohort, level);  // validate cohort level
  }
  for (const auto& [level, frac_of] : cfg.observed_overrides) {
    truth.level_code(cohort, level);  // validate cohort level
    for (const auto& [var, frac] : frac_of) {
      int node = g.index_of(var);
      if (!g.indicator_of(node)) {
        throw InvalidArgument("override variable '" + var + "' has no indicator");
      }
      if (!(frac >= 0.0 && frac <= 1.0)) {
        throw InvalidArgument("observed fraction for '" + var + "' must lie in [0, 1]");
      }
    }
  }

  // Substantive columns only; indicators act through masking.
  std::vector<int> subst;
  std::vector<VariableSpec> vars;
  for (int i : truth.modeled_nodes()) {
    if (!is_substantive(g.role(i))) continue;
    subst.push_back(i);
    vars.push_back(VariableSpec{g.name(i), truth.levels(i), {"", "NA"}});
  }
  Schema schema = Schema::make(std::move(vars));
  Dataset d(schema);

  std::vector<int> order;
  for (int i : g.topological_order()) {
    if (truth.has_cpt(i)) order.push_back(i);
  }
  std::vector<int> col_of_node(g.node_count(), -1);
  for (size_t k = 0; k < subst.size(); ++k) col_of_node[subst[k]] = static_cast<int>(k);

  Rng rng(cfg.seed);
  std::vector<int32_t> value(g.node_count(), 0);
  std::vector<int32_t> row(subst.size(), 0);
  std::vector<int> indicators = g.role_set(RoleKind::MissIndicator);
  std::vector<int> masked_col(indicators.size());
  for (size_t k = 0; k < indicators.size(); ++k) {
    masked_col[k] = col_of_node[g.index_of(g.role(indicators[k]).of)];
  }

  // Cohorts in level order; sizes may be zero or absent.
  for (size_t cohort_level = 0; cohort_level < truth.levels(cohort).size(); ++cohort_level) {
    const std::string& level_name = truth.levels(cohort)[cohort_level];
    auto rows_it = cfg.rows_per_cohort.find(level_name);
    size_t rows = rows_it == cfg.rows_per_cohort.end() ? 0 : rows_it->second;
    const std::map<std::string, double>* overrides = nullptr;
    if (auto it = cfg.observed_overrides.find(level_name); it != cfg.observed_overrides.end()) {
      overrides = &it->second;
    }

    for (size_t r = 0; r < rows; ++r) {
      for (int i : order) {
        if (i == cohort) {
          value[i] = static_cast<int32_t>(cohort_level);
          continue;
        }
        const Cpt& cpt = truth.cpt(i);
        size_t cfg_idx = 0;
        const auto& parents = g.parents(i);
        for (size_t p = 0; p < parents.size(); ++p) {
          cfg_idx = cfg_idx * cpt.parent_levels[p].size() +
                    static_cast<size_t>(value[parents[p]]);
        }
        bool overridden = false;
        if (g.role(i).kind == RoleKind::MissIndicator && overrides) {
          auto ov = overrides->find(g.role(i).of);
          if (ov != overrides->end()) {
            value[i] = rng.uniform() < ov->second ? 0 : 1;
            overridden = true;
          }
        }
        if (!overridden) {
          auto probs = cpt.row(cfg_idx);
          double u = rng.uniform();
          double acc = 0.0;
          int32_t picked = static_cast<int32_t>(probs.size()) - 1;
          for (size_t l = 0; l < probs.size(); ++l) {
            acc += probs[l];
            if (u < acc) {
              picked = static_cast<int32_t>(l);
              break;
            }
          }
          value[i] = picked;
        }
      }
      for (size_t k = 0; k < subst.size(); ++k) row[k] = value[subst[k]];
      // Blank every substantive cell whose indicator fired.
      for (size_t k = 0; k < indicators.size(); ++k) {
        if (value[indicators[k]] == 1 && masked_col[k] >= 0) row[masked_col[k]] = kMissing;
      }
      d.append_row(row);
    }
  }
  d.designate_cohort(g.name(cohort));
  return {std::move(d), g};
}

namespace {

// Naive Bayes skeleton: the target points at every substantive non-Selection
// node of g0. Counting is available-case, so per family only the rows
// observing both the target and that feature contribute.
MGraph naive_bayes_graph(const MGraph& g0, const std::string& target) {
  std::vector<std::pair<std::string, NodeRole>> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  nodes.emplace_back(target, NodeRole::observed());
  for (int i = 0; i < g0.node_count(); ++i) {
    const NodeRole& role = g0.role(i);
    if (!is_substantive(role) || role.kind == RoleKind::Selection) continue;
    if (g0.name(i) == target) continue;
    nodes.emplace_back(g0.name(i), NodeRole::observed());
    edges.emplace_back(target, g0.name(i));
  }
  if (nodes.size() == 1) throw InvalidArgument("no features besides the target");
  return MGraph::build(nodes, edges);
}

double test_auc(const CausalNetwork& model, const Dataset& test, const BenchmarkOptions& opts) {
  int tcol = test.schema().index_of(opts.target);
  int32_t positive =
      static_cast<int32_t>(test.schema().level_code(tcol, opts.positive_level));
  std::vector<Prediction> preds =
      predict(model, test, opts.target, opts.positive_level, opts.threads);
  std::vector<int> labels(test.row_count());
  std::vector<double> scores(test.row_count());
  for (size_t r = 0; r < test.row_count(); ++r) {
    labels[r] = test.cell(r, tcol) == positive ? 1 : 0;
    scores[r] = preds[r].score;
  }
  return auc(labels, scores);
}

}  // namespace

BenchmarkReport benchmark(const Dataset& d, const MGraph& g0, const PriorKnowledge& pk,
                          double train_fraction, uint64_t seed, const BenchmarkOptions& opts) {
  Dataset data = d;
  if (!data.cohort_column()) {
    std::vector<int> selection = g0.role_set(RoleKind::Selection);
    if (selection.size() == 1 && data.schema().find(g0.name(selection[0]))) {
      data.designate_cohort(g0.name(selection[0]));
    } else {
      throw NoCohortColumn("dataset has no cohort column and g0 names no usable Selection node");
    }
  }
  int tcol = data.schema().index_of(opts.target);
  int ccol = data.schema().index_of(*data.cohort_column());

  // A cohort that never observes the target cannot contribute test rows;
  // all of it trains.
  const auto& cohort_levels = data.schema().var(ccol).levels;
  std::vector<char> sees_target(cohort_levels.size(), 0);
  for (size_t r = 0; r < data.row_count(); ++r) {
    if (data.cell(r, tcol) != kMissing) sees_target[data.cell(r, ccol)] = 1;
  }
  std::map<std::string, double> fracs;
  for (size_t c = 0; c < cohort_levels.size(); ++c) {
    fracs[cohort_levels[c]] = sees_target[c] ? train_fraction : 1.0;
  }
  auto [train, holdout] = split_train_test(data, fracs, seed);

  std::vector<size_t> with_target;
  for (size_t r = 0; r < holdout.row_count(); ++r) {
    if (holdout.cell(r, tcol) != kMissing) with_target.push_back(r);
  }
  Dataset test = holdout.select_rows(with_target);

  {
    int32_t positive = static_cast<int32_t>(test.schema().level_code(tcol, opts.positive_level));
    bool pos = false, neg = false;
    for (size_t r = 0; r < test.row_count(); ++r) {
      (test.cell(r, tcol) == positive ? pos : neg) = true;
    }
    if (!pos || !neg) {
      throw DegenerateLabels("the test split holds a single '" + opts.target + "' class");
    }
  }

  SemConfig sem_cfg = opts.sem;
  sem_cfg.seed = seed;
  sem_cfg.alpha = opts.alpha;

  CausalNetwork nb_model = fit_parameters(naive_bayes_graph(g0, opts.target), train, opts.alpha);

  // One E pass at the g0 parameters, then a refit on the completion.
  Dataset train_ind = derive_indicators(train, g0);
  CausalNetwork theta0 = fit_parameters(g0, train_ind, opts.alpha);
  CausalNetwork prior_model =
      fit_parameters(g0, impute_mode(theta0, train_ind).data, opts.alpha);

  SemResult sem_res = sem(train, g0, pk, sem_cfg);

  Dataset test_ind = derive_indicators(test, g0);
  BenchmarkReport report;
  report.seed = seed;
  report.train_rows = train.row_count();
  report.test_rows = test.row_count();
  report.models = {{"naive_bayes", test_auc(nb_model, test, opts)},
                   {"cn_prior", test_auc(prior_model, test_ind, opts)},
                   {"cn_prior_sem", test_auc(sem_res.network, test_ind, opts)}};
  return report;
}

BenchmarkReport benchmark(const SimConfig& cfg, const MGraph& g0, const PriorKnowledge& pk,
                          double train_fraction, uint64_t seed, const BenchmarkOptions& opts) {
  SimConfig seeded = cfg;
  seeded.seed = seed;
  return benchmark(simulate_cohorts(seeded).data, g0, pk, train_fraction, seed, opts);
}

std::vector<BenchmarkReport> benchmark_seeds(const SimConfig& cfg, const MGraph& g0,
                                             const PriorKnowledge& pk, double train_fraction,
                                             uint64_t first_seed, int count, int workers,
                                             const BenchmarkOptions& opts) {
  if (count < 0) throw InvalidArgument("seed count must be nonnegative");
  std::vector<BenchmarkReport> reports(static_cast<size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(count));

  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        reports[i] = benchmark(cfg, g0, pk, train_fraction,
                               first_seed + static_cast<uint64_t>(i), opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  int pool = std::clamp(workers, 1, std::max(count, 1));
  if (pool <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(pool));
    for (int t = 0; t < pool; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

std::string format_benchmark_table(const std::vector<BenchmarkReport>& reports) {
  std::vector<std::string> names;
  if (!reports.empty()) {
    for (const auto& m : reports.front().models) names.push_back(m.name);
  } else {
    names = {"naive_bayes", "cn_prior", "cn_prior_sem"};
  }

  std::vector<std::string> header = {"seed"};
  header.insert(header.end(), names.begin(), names.end());
  header.push_back("train");
  header.push_back("test");

  std::vector<std::vector<std::string>> rows;
  char buf[64];
  for (const auto& rep : reports) {
    std::vector<std::string> row;
    row.push_back(std::to_string(rep.seed));
    for (const auto& name : names) {
      double value = -1.0;
      for (const auto& m : rep.models) {
        if (m.name == name) value = m.auc;
      }
      std::snprintf(buf, sizeof buf, "%.6f", value);
      row.emplace_back(buf);
    }
    row.push_back(std::to_string(rep.train_rows));
    row.push_back(std::to_string(rep.test_rows));
    rows.push_back(std::move(row));
  }

  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += "  ";
      out += row[c];
      if (c + 1 < row.size()) out.append(width[c] - row[c].size(), ' ');
    }
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

std::string format_benchmark_keys(const BenchmarkReport& report) {
  std::string out;
  char buf[64];
  out += "seed=" + std::to_string(report.seed) + "\n";
  out += "train_rows=" + std::to_string(report.train_rows) + "\n";
  out += "test_rows=" + std::to_string(report.test_rows) + "\n";
  for (const auto& m : report.models) {
    std::snprintf(buf, sizeof buf, "%.17g", m.auc);
    out += "auc." + m.name + "=" + buf + "\n";
  }
  return out;
}

}  // namespace causalnet
