#ifndef CAUSALNET_NETWORK_HPP
#define CAUSALNET_NETWORK_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "causalnet/dataset.hpp"
#include "causalnet/factor.hpp"
#include "causalnet/graph.hpp"

namespace causalnet {

// Conditional probability table of one node given its graph parents.
// Rows (one per parent configuration) are indexed odometer-style with the
// last parent varying fastest; each row holds one probability per child
// level and sums to 1 within 1e-12.
struct Cpt {
  std::string child;
  std::vector<std::string> parents;  // graph parent order (declaration order)
  std::vector<std::string> child_levels;
  std::vector<std::vector<std::string>> parent_levels;
  std::vector<double> table;  // [config][child_level], flattened

  size_t config_count() const;
  size_t arity() const { return child_levels.size(); }
  std::span<const double> row(size_t config) const;
  std::span<double> row(size_t config);
  void validate() const;
};

// A directed acyclic graph with one CPT per non-latent node. The joint over
// the non-latent nodes is the product of the tables. Latent nodes may appear
// in the graph but cannot be a parent of any node holding a CPT.
class CausalNetwork {
 public:
  static CausalNetwork make(MGraph graph, std::vector<Cpt> cpts);

  const MGraph& graph() const { return graph_; }
  bool has_cpt(int node) const { return cpt_of_[node] >= 0; }
  const Cpt& cpt(int node) const;
  const std::vector<std::string>& levels(int node) const;
  int level_code(int node, const std::string& level) const;  // throws UnknownLevel
  // Non-latent node indices in graph declaration order.
  const std::vector<int>& modeled_nodes() const { return modeled_; }

  // Schema with one variable per modeled node, declaration order.
  Schema schema() const;

 private:
  explicit CausalNetwork(MGraph graph) : graph_(std::move(graph)) {}

  MGraph graph_;
  std::vector<Cpt> cpts_;
  std::vector<int> cpt_of_;  // node index -> cpts_ index, -1 for latent
  std::vector<int> modeled_;
};

// Maximum-likelihood CPTs with additive smoothing `alpha`. Each family
// (X, parents) is counted over the rows where X and all parents are observed,
// accumulating row weights; a cell is (count + alpha) / (total + alpha * |X|).
// Parent configurations with zero total get the uniform row.
CausalNetwork fit_parameters(const MGraph& g, const Dataset& d, double alpha);

// Weighted log-likelihood of fully observed rows under the network's joint.
// Natural log. Rows must be complete on every modeled node.
double log_likelihood(const CausalNetwork& c, const Dataset& d);

// Exact posterior joint over `query` given `evidence`, by variable
// elimination with the min-degree heuristic (ties broken by node name).
// Result axes follow `query` order and sum to 1.
Factor eliminate(const CausalNetwork& c, const std::vector<std::string>& query,
                 const std::map<std::string, std::string>& evidence);
// Index-based variant: evidence as (node index, level code) pairs.
Factor eliminate_codes(const CausalNetwork& c, const std::vector<int>& query,
                       const std::vector<std::pair<int, int>>& evidence);

// Ancestral sampling of n complete rows over the modeled nodes.
Dataset sample(const CausalNetwork& c, size_t n, uint64_t seed);

struct Prediction {
  double score = 0.0;
  bool prior_fallback = false;  // evidence impossible under c: prior marginal used
};

// P(target = target_level | row evidence) per row. Evidence is every observed
// non-target cell whose column names a modeled node. Rows whose evidence has
// zero probability fall back to the target's prior marginal and are flagged.
// `threads` > 1 scores rows in parallel; results do not depend on it.
std::vector<Prediction> predict(const CausalNetwork& c, const Dataset& d,
                                const std::string& target, const std::string& target_level,
                                int threads = 1);

// Plain-text network format: `[nodes]` lines `name role[=target] level,...`,
// `[edges]` lines `parent -> child`, `[cpts]` blocks starting with
// `cpt <child> | <parents>` followed by one line per parent configuration
// (odometer order, last parent fastest) holding the child-level
// probabilities printed with 17 significant digits; round-trip is exact.
std::string format_network(const CausalNetwork& c);
CausalNetwork parse_network(const std::string& text);
CausalNetwork load_network(const std::string& path);
void save_network(const std::string& path, const CausalNetwork& c);

}  // namespace causalnet

#endif  // CAUSALNET_NETWORK_HPP
