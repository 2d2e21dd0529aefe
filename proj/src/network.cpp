#include "causalnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "causalnet/rng.hpp"

namespace causalnet {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

size_t Cpt::config_count() const {
  size_t n = 1;
  for (const auto& pl : parent_levels) n *= pl.size();
  return n;
}

std::span<const double> Cpt::row(size_t config) const {
  return {table.data() + config * arity(), arity()};
}

std::span<double> Cpt::row(size_t config) {
  return {table.data() + config * arity(), arity()};
}

void Cpt::validate() const {
  if (child_levels.empty()) throw InvalidArgument("cpt '" + child + "' has no child levels");
  if (parents.size() != parent_levels.size()) {
    throw InvalidArgument("cpt '" + child + "' parent level lists do not match parents");
  }
  if (table.size() != config_count() * arity()) {
    throw InvalidArgument("cpt '" + child + "' table size mismatch");
  }
  for (size_t cfg = 0; cfg < config_count(); ++cfg) {
    double sum = 0.0;
    for (double p : row(cfg)) {
      if (!(p >= 0.0)) throw InvalidArgument("cpt '" + child + "' has a negative entry");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > kRowSumTolerance) {
      throw InvalidArgument("cpt '" + child + "' row " + std::to_string(cfg) +
                            " sums to " + fmt17(sum));
    }
  }
}

CausalNetwork CausalNetwork::make(MGraph graph, std::vector<Cpt> cpts) {
  CausalNetwork c(std::move(graph));
  c.cpts_ = std::move(cpts);
  int n = c.graph_.node_count();
  c.cpt_of_.assign(n, -1);

  for (size_t k = 0; k < c.cpts_.size(); ++k) {
    int node = c.graph_.index_of(c.cpts_[k].child);
    if (c.graph_.role(node).kind == RoleKind::Latent) {
      throw InvalidArgument("latent node '" + c.cpts_[k].child + "' cannot hold a cpt");
    }
    if (c.cpt_of_[node] != -1) {
      throw InvalidArgument("duplicate cpt for '" + c.cpts_[k].child + "'");
    }
    c.cpt_of_[node] = static_cast<int>(k);
  }

  for (int i = 0; i < n; ++i) {
    bool latent = c.graph_.role(i).kind == RoleKind::Latent;
    if (latent) {
      if (c.cpt_of_[i] != -1) throw InvalidArgument("latent node '" + c.graph_.name(i) + "' has a cpt");
      continue;
    }
    if (c.cpt_of_[i] == -1) throw InvalidArgument("no cpt for node '" + c.graph_.name(i) + "'");
    c.modeled_.push_back(i);

    const Cpt& cpt = c.cpts_[c.cpt_of_[i]];
    const auto& parents = c.graph_.parents(i);
    if (cpt.parents.size() != parents.size()) {
      throw InvalidArgument("cpt '" + cpt.child + "' parent list does not match the graph");
    }
    for (size_t p = 0; p < parents.size(); ++p) {
      if (c.graph_.role(parents[p]).kind == RoleKind::Latent) {
        throw InvalidArgument("node '" + cpt.child + "' has latent parent '" +
                              c.graph_.name(parents[p]) + "'");
      }
      if (cpt.parents[p] != c.graph_.name(parents[p])) {
        throw InvalidArgument("cpt '" + cpt.child + "' parents must follow declaration order");
      }
    }
    if (c.graph_.role(i).kind == RoleKind::MissIndicator &&
        cpt.child_levels != std::vector<std::string>{"0", "1"}) {
      throw InvalidArgument("indicator '" + cpt.child + "' must have levels 0,1");
    }
    cpt.validate();
  }

  // Parent level lists must agree with the parent's own cpt.
  for (int i : c.modeled_) {
    const Cpt& cpt = c.cpts_[c.cpt_of_[i]];
    const auto& parents = c.graph_.parents(i);
    for (size_t p = 0; p < parents.size(); ++p) {
      const Cpt& pcpt = c.cpts_[c.cpt_of_[parents[p]]];
      if (cpt.parent_levels[p] != pcpt.child_levels) {
        throw InvalidArgument("cpt '" + cpt.child + "': levels of parent '" + cpt.parents[p] +
                              "' disagree with that node's cpt");
      }
    }
  }
  return c;
}

const Cpt& CausalNetwork::cpt(int node) const {
  if (cpt_of_[node] < 0) {
    throw InvalidArgument("node '" + graph_.name(node) + "' has no cpt");
  }
  return cpts_[cpt_of_[node]];
}

const std::vector<std::string>& CausalNetwork::levels(int node) const {
  return cpt(node).child_levels;
}

int CausalNetwork::level_code(int node, const std::string& level) const {
  const auto& levels = cpt(node).child_levels;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return static_cast<int>(i);
  }
  throw UnknownLevel("node '" + graph_.name(node) + "': unknown level '" + level + "'");
}

Schema CausalNetwork::schema() const {
  std::vector<VariableSpec> vars;
  for (int i : modeled_) {
    vars.push_back(VariableSpec{graph_.name(i), levels(i), {"", "NA"}});
  }
  return Schema::make(std::move(vars));
}

CausalNetwork fit_parameters(const MGraph& g, const Dataset& d, double alpha) {
  if (d.row_count() == 0) throw EmptyDataset("cannot fit parameters on an empty dataset");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be nonnegative");
  const Schema& schema = d.schema();

  std::vector<Cpt> cpts;
  for (int i = 0; i < g.node_count(); ++i) {
    if (g.role(i).kind == RoleKind::Latent) continue;
    int child_col = schema.index_of(g.name(i));
    Cpt cpt;
    cpt.child = g.name(i);
    cpt.child_levels = schema.var(child_col).levels;
    std::vector<int> parent_cols;
    for (int p : g.parents(i)) {
      if (g.role(p).kind == RoleKind::Latent) {
        throw MissingColumn("node '" + cpt.child + "' has latent parent '" + g.name(p) +
                            "' with no data column");
      }
      int col = schema.index_of(g.name(p));
      cpt.parents.push_back(g.name(p));
      cpt.parent_levels.push_back(schema.var(col).levels);
      parent_cols.push_back(col);
    }

    size_t arity = cpt.child_levels.size();
    size_t configs = cpt.config_count();
    std::vector<double> counts(configs * arity, 0.0);
    std::vector<double> totals(configs, 0.0);
    for (size_t r = 0; r < d.row_count(); ++r) {
      int32_t x = d.cell(r, child_col);
      if (x == kMissing) continue;
      size_t cfg = 0;
      bool complete = true;
      for (size_t p = 0; p < parent_cols.size(); ++p) {
        int32_t v = d.cell(r, parent_cols[p]);
        if (v == kMissing) {
          complete = false;
          break;
        }
        cfg = cfg * cpt.parent_levels[p].size() + static_cast<size_t>(v);
      }
      if (!complete) continue;
      double w = d.weight(r);
      counts[cfg * arity + static_cast<size_t>(x)] += w;
      totals[cfg] += w;
    }

    cpt.table.resize(configs * arity);
    for (size_t cfg = 0; cfg < configs; ++cfg) {
      double denom = totals[cfg] + alpha * static_cast<double>(arity);
      for (size_t l = 0; l < arity; ++l) {
        cpt.table[cfg * arity + l] =
            denom > 0.0 ? (counts[cfg * arity + l] + alpha) / denom
                        : 1.0 / static_cast<double>(arity);
      }
    }
    cpts.push_back(std::move(cpt));
  }
  return CausalNetwork::make(g, std::move(cpts));
}

double log_likelihood(const CausalNetwork& c, const Dataset& d) {
  const Schema& schema = d.schema();
  const MGraph& g = c.graph();
  std::vector<int> col_of_node(g.node_count(), -1);
  for (int i : c.modeled_nodes()) {
    col_of_node[i] = schema.index_of(g.name(i));
    if (schema.var(col_of_node[i]).levels != c.levels(i)) {
      throw UnknownLevel("column '" + g.name(i) + "' levels disagree with the network");
    }
  }
  double ll = 0.0;
  for (size_t r = 0; r < d.row_count(); ++r) {
    for (int i : c.modeled_nodes()) {
      if (d.cell(r, col_of_node[i]) == kMissing) {
        throw IncompleteRow("row " + std::to_string(r + 1) + " is missing '" + g.name(i) + "'");
      }
    }
    double w = d.weight(r);
    for (int i : c.modeled_nodes()) {
      const Cpt& cpt = c.cpt(i);
      size_t cfg = 0;
      const auto& parents = g.parents(i);
      for (size_t p = 0; p < parents.size(); ++p) {
        cfg = cfg * cpt.parent_levels[p].size() +
              static_cast<size_t>(d.cell(r, col_of_node[parents[p]]));
      }
      double prob = cpt.row(cfg)[static_cast<size_t>(d.cell(r, col_of_node[i]))];
      if (prob <= 0.0) {
        throw ZeroProbabilityEvent("row " + std::to_string(r + 1) + ", family '" + g.name(i) +
                                   "': zero-probability event");
      }
      ll += w * std::log(prob);
    }
  }
  return ll;
}

namespace {

// CPT as a factor with axes [parents..., child]; the flat table layout
// already matches row-major with child fastest.
Factor cpt_factor(const CausalNetwork& c, int node) {
  const Cpt& cpt = c.cpt(node);
  std::vector<Factor::Axis> axes;
  for (size_t p = 0; p < cpt.parents.size(); ++p) {
    axes.push_back({cpt.parents[p], cpt.parent_levels[p]});
  }
  axes.push_back({cpt.child, cpt.child_levels});
  return Factor(std::move(axes), cpt.table);
}

Factor eliminate_impl(const CausalNetwork& c, const std::vector<int>& query,
                      const std::vector<std::pair<int, int>>& evidence) {
  const MGraph& g = c.graph();
  std::set<int> qset(query.begin(), query.end());
  if (query.empty()) throw InvalidArgument("empty query");
  std::set<int> eset;
  for (const auto& [node, level] : evidence) {
    if (!c.has_cpt(node)) {
      throw UnknownNode("evidence node '" + g.name(node) + "' is not modeled");
    }
    if (level < 0 || level >= static_cast<int>(c.levels(node).size())) {
      throw UnknownLevel("node '" + g.name(node) + "': level code out of range");
    }
    if (qset.count(node)) {
      throw InvalidArgument("node '" + g.name(node) + "' is both query and evidence");
    }
    if (!eset.insert(node).second) {
      throw InvalidArgument("duplicate evidence for '" + g.name(node) + "'");
    }
  }
  for (int qv : query) {
    if (!c.has_cpt(qv)) throw UnknownNode("query node '" + g.name(qv) + "' is not modeled");
  }

  // Evidence-reduced CPT factors.
  std::vector<Factor> factors;
  factors.reserve(c.modeled_nodes().size());
  for (int i : c.modeled_nodes()) {
    Factor f = cpt_factor(c, i);
    for (const auto& [node, level] : evidence) {
      if (f.axis_of(g.name(node)) >= 0) f = f.reduce(g.name(node), level);
    }
    factors.push_back(std::move(f));
  }

  // Hidden variables to sum out, cheapest (min-degree) first, name ties.
  std::set<std::string> hidden;
  for (int i : c.modeled_nodes()) {
    if (!qset.count(i) && !eset.count(i)) hidden.insert(g.name(i));
  }
  while (!hidden.empty()) {
    std::string best;
    int best_degree = -1;
    for (const auto& h : hidden) {
      std::set<std::string> neighbors;
      for (const Factor& f : factors) {
        if (f.axis_of(h) < 0) continue;
        for (const auto& a : f.axes()) {
          if (a.name != h) neighbors.insert(a.name);
        }
      }
      int degree = static_cast<int>(neighbors.size());
      if (best_degree < 0 || degree < best_degree || (degree == best_degree && h < best)) {
        best = h;
        best_degree = degree;
      }
    }
    Factor merged(1.0);
    std::vector<Factor> rest;
    for (Factor& f : factors) {
      if (f.axis_of(best) >= 0) {
        merged = merged.multiply(f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    rest.push_back(merged.sum_out(best));
    factors = std::move(rest);
    hidden.erase(best);
  }

  Factor joint(1.0);
  for (const Factor& f : factors) joint = joint.multiply(f);
  std::vector<std::string> order;
  for (int qv : query) order.push_back(g.name(qv));
  return joint.marginal(order).normalized();
}

}  // namespace

Factor eliminate_codes(const CausalNetwork& c, const std::vector<int>& query,
                       const std::vector<std::pair<int, int>>& evidence) {
  return eliminate_impl(c, query, evidence);
}

Factor eliminate(const CausalNetwork& c, const std::vector<std::string>& query,
                 const std::map<std::string, std::string>& evidence) {
  const MGraph& g = c.graph();
  std::vector<int> q;
  for (const auto& name : query) q.push_back(g.index_of(name));
  std::vector<std::pair<int, int>> e;
  for (const auto& [name, level] : evidence) {
    int node = g.index_of(name);
    e.emplace_back(node, c.level_code(node, level));
  }
  return eliminate_impl(c, q, e);
}

Dataset sample(const CausalNetwork& c, size_t n, uint64_t seed) {
  const MGraph& g = c.graph();
  Schema schema = c.schema();
  Dataset d(schema);
  Rng rng(seed);

  std::vector<int> order;
  for (int i : g.topological_order()) {
    if (c.has_cpt(i)) order.push_back(i);
  }
  std::vector<int> col_of_node(g.node_count(), -1);
  for (int i : c.modeled_nodes()) col_of_node[i] = schema.index_of(g.name(i));

  std::vector<int32_t> row(schema.size());
  for (size_t r = 0; r < n; ++r) {
    for (int i : order) {
      const Cpt& cpt = c.cpt(i);
      size_t cfg = 0;
      const auto& parents = g.parents(i);
      for (size_t p = 0; p < parents.size(); ++p) {
        cfg = cfg * cpt.parent_levels[p].size() +
              static_cast<size_t>(row[col_of_node[parents[p]]]);
      }
      auto probs = cpt.row(cfg);
      double u = rng.uniform();
      double acc = 0.0;
      int32_t value = static_cast<int32_t>(probs.size()) - 1;
      for (size_t l = 0; l < probs.size(); ++l) {
        acc += probs[l];
        if (u < acc) {
          value = static_cast<int32_t>(l);
          break;
        }
      }
      row[col_of_node[i]] = value;
    }
    d.append_row(row);
  }
  return d;
}

std::vector<Prediction> predict(const CausalNetwork& c, const Dataset& d,
                                const std::string& target, const std::string& target_level,
                                int threads) {
  const MGraph& g = c.graph();
  int target_node = g.index_of(target);
  int target_code = c.level_code(target_node, target_level);
  const Schema& schema = d.schema();

  // Columns that are modeled nodes, with level agreement checked up front.
  std::vector<std::pair<int, int>> col_node;  // (column, node)
  for (int col = 0; col < schema.size(); ++col) {
    auto node = g.find(schema.var(col).name);
    if (!node || !c.has_cpt(*node)) continue;
    if (*node == target_node) continue;
    if (schema.var(col).levels != c.levels(*node)) {
      throw UnknownLevel("column '" + schema.var(col).name + "' levels disagree with the network");
    }
    col_node.emplace_back(col, *node);
  }

  double prior = eliminate_codes(c, {target_node}, {}).values()[static_cast<size_t>(target_code)];

  std::vector<Prediction> out(d.row_count());
  int nthreads = std::max(1, threads);
  size_t rows = d.row_count();
  auto run_chunk = [&](size_t begin, size_t end) {
    // Rows sharing an evidence pattern share the posterior; memoized per chunk.
    std::map<std::vector<int32_t>, Prediction> cache;
    std::vector<std::pair<int, int>> evidence;
    std::vector<int32_t> key(col_node.size());
    for (size_t r = begin; r < end; ++r) {
      for (size_t k = 0; k < col_node.size(); ++k) key[k] = d.cell(r, col_node[k].first);
      auto hit = cache.find(key);
      if (hit != cache.end()) {
        out[r] = hit->second;
        continue;
      }
      evidence.clear();
      for (size_t k = 0; k < col_node.size(); ++k) {
        if (key[k] != kMissing) evidence.emplace_back(col_node[k].second, key[k]);
      }
      Prediction p;
      try {
        Factor f = eliminate_codes(c, {target_node}, evidence);
        p.score = f.values()[static_cast<size_t>(target_code)];
      } catch (const InconsistentEvidence&) {
        p.score = prior;
        p.prior_fallback = true;
      }
      cache.emplace(key, p);
      out[r] = p;
    }
  };

  if (nthreads == 1 || rows < 2) {
    run_chunk(0, rows);
  } else {
    size_t chunk = (rows + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      size_t begin = std::min(rows, static_cast<size_t>(t) * chunk);
      size_t end = std::min(rows, begin + chunk);
      if (begin < end) pool.emplace_back(run_chunk, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

std::string format_network(const CausalNetwork& c) {
  const MGraph& g = c.graph();
  std::string out = "[nodes]\n";
  for (int i = 0; i < g.node_count(); ++i) {
    out += g.name(i) + " ";
    switch (g.role(i).kind) {
      case RoleKind::Observed:
        out += "observed";
        break;
      case RoleKind::PartiallyObserved:
        out += "partial";
        break;
      case RoleKind::Latent:
        out += "latent";
        break;
      case RoleKind::Selection:
        out += "selection";
        break;
      case RoleKind::MissIndicator:
        out += "indicator=" + g.role(i).of;
        break;
    }
    out += " ";
    if (!c.has_cpt(i)) {
      out += "-";
    } else {
      const auto& levels = c.levels(i);
      for (size_t l = 0; l < levels.size(); ++l) {
        if (l) out += ",";
        out += levels[l];
      }
    }
    out += "\n";
  }
  out += "[edges]\n";
  for (const auto& [u, v] : g.edges()) out += g.name(u) + " -> " + g.name(v) + "\n";
  out += "[cpts]\n";
  for (int i : c.modeled_nodes()) {
    const Cpt& cpt = c.cpt(i);
    out += "cpt " + cpt.child + " |";
    for (const auto& p : cpt.parents) out += " " + p;
    out += "\n";
    for (size_t cfg = 0; cfg < cpt.config_count(); ++cfg) {
      auto row = cpt.row(cfg);
      for (size_t l = 0; l < row.size(); ++l) {
        if (l) out += " ";
        out += fmt17(row[l]);
      }
      out += "\n";
    }
  }
  return out;
}

CausalNetwork parse_network(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  enum Section { None, Nodes, Edges, Cpts } section = None;

  std::vector<std::pair<std::string, NodeRole>> nodes;
  std::map<std::string, std::vector<std::string>> levels_of;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<Cpt> cpts;
  int open = -1;
  size_t rows_needed = 0, rows_seen = 0;

  auto parse_node_role = [&](const std::string& token) -> NodeRole {
    if (token == "observed") return NodeRole::observed();
    if (token == "partial") return NodeRole::partially_observed();
    if (token == "latent") return NodeRole::latent();
    if (token == "selection") return NodeRole::selection();
    if (token.rfind("indicator=", 0) == 0) return NodeRole::miss_indicator(token.substr(10));
    throw FormatError("network line " + std::to_string(line_no) + ": unknown role '" + token +
                      "'");
  };

  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = strip(raw);
    if (line.empty()) continue;
    if (line == "[nodes]") {
      section = Nodes;
      continue;
    }
    if (line == "[edges]") {
      section = Edges;
      continue;
    }
    if (line == "[cpts]") {
      section = Cpts;
      continue;
    }
    switch (section) {
      case None:
        throw FormatError("network line " + std::to_string(line_no) + ": content before [nodes]");
      case Nodes: {
        std::istringstream ls(line);
        std::string name, role, levels;
        ls >> name >> role >> levels;
        if (levels.empty()) {
          throw FormatError("network line " + std::to_string(line_no) +
                            ": expected 'name role levels'");
        }
        nodes.emplace_back(name, parse_node_role(role));
        if (levels != "-") levels_of[name] = split_commas(levels);
        break;
      }
      case Edges: {
        std::istringstream ls(line);
        std::string a, arrow, b;
        ls >> a >> arrow >> b;
        if (arrow != "->" || b.empty()) {
          throw FormatError("network line " + std::to_string(line_no) +
                            ": expected 'parent -> child'");
        }
        edges.emplace_back(a, b);
        break;
      }
      case Cpts: {
        if (line.rfind("cpt ", 0) == 0) {
          if (open >= 0 && rows_seen != rows_needed) {
            throw FormatError("cpt '" + cpts[open].child + "' has " + std::to_string(rows_seen) +
                              " rows, expected " + std::to_string(rows_needed));
          }
          std::istringstream ls(line.substr(4));
          std::string child, bar;
          ls >> child >> bar;
          if (bar != "|") {
            throw FormatError("network line " + std::to_string(line_no) +
                              ": expected 'cpt child | parents'");
          }
          Cpt cpt;
          cpt.child = child;
          auto found = levels_of.find(child);
          if (found == levels_of.end()) {
            throw FormatError("cpt for '" + child + "' but node has no levels");
          }
          cpt.child_levels = found->second;
          std::string parent;
          while (ls >> parent) {
            auto pl = levels_of.find(parent);
            if (pl == levels_of.end()) {
              throw FormatError("cpt '" + child + "' parent '" + parent + "' has no levels");
            }
            cpt.parents.push_back(parent);
            cpt.parent_levels.push_back(pl->second);
          }
          cpts.push_back(std::move(cpt));
          open = static_cast<int>(cpts.size()) - 1;
          rows_needed = cpts[open].config_count();
          rows_seen = 0;
        } else {
          if (open < 0) {
            throw FormatError("network line " + std::to_string(line_no) +
                              ": probability row outside a cpt block");
          }
          std::istringstream ls(line);
          double v;
          size_t got = 0;
          while (ls >> v) {
            cpts[open].table.push_back(v);
            ++got;
          }
          if (got != cpts[open].arity()) {
            throw FormatError("network line " + std::to_string(line_no) + ": expected " +
                              std::to_string(cpts[open].arity()) + " probabilities");
          }
          if (++rows_seen > rows_needed) {
            throw FormatError("cpt '" + cpts[open].child + "' has too many rows");
          }
        }
        break;
      }
    }
  }
  if (open >= 0 && rows_seen != rows_needed) {
    throw FormatError("cpt '" + cpts[open].child + "' has " + std::to_string(rows_seen) +
                      " rows, expected " + std::to_string(rows_needed));
  }
  return CausalNetwork::make(MGraph::build(std::move(nodes), edges), std::move(cpts));
}

CausalNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

void save_network(const std::string& path, const CausalNetwork& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write network file '" + path + "'");
  out << format_network(c);
}

}  // namespace causalnet
