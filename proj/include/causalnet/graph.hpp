#ifndef CAUSALNET_GRAPH_HPP
#define CAUSALNET_GRAPH_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causalnet/errors.hpp"

namespace causalnet {

enum class RoleKind {
  Observed,           // always recorded
  PartiallyObserved,  // recorded column may contain missing cells
  Latent,             // never recorded
  Selection,          // fully observed context (cohort membership and the like)
  MissIndicator,      // R node: 0 = the target cell is observed, 1 = missing
};

struct NodeRole {
  RoleKind kind = RoleKind::Observed;
  std::string of;  // indicator target; empty unless kind == MissIndicator

  static NodeRole observed() { return {RoleKind::Observed, {}}; }
  static NodeRole partially_observed() { return {RoleKind::PartiallyObserved, {}}; }
  static NodeRole latent() { return {RoleKind::Latent, {}}; }
  static NodeRole selection() { return {RoleKind::Selection, {}}; }
  static NodeRole miss_indicator(std::string target) {
    return {RoleKind::MissIndicator, std::move(target)};
  }

  bool operator==(const NodeRole&) const = default;
};

// Substantive nodes are the ones that denote actual quantities of the domain:
// everything except missingness indicators and latents.
inline bool is_substantive(const NodeRole& r) {
  return r.kind == RoleKind::Observed || r.kind == RoleKind::PartiallyObserved ||
         r.kind == RoleKind::Selection;
}

struct GraphOptions {
  // By default a MissIndicator node may not have substantive children.
  // Escape hatch for experiments that chain indicators into other machinery.
  bool allow_indicator_children = false;
};

// Directed acyclic graph over named, role-tagged nodes.
//
// Construction validates: unique names, both endpoints declared, acyclicity,
// no duplicate edges, and the role rules (no edge into a Selection node, no
// edge from a MissIndicator into a non-indicator unless allowed, indicator
// targets exist, are PartiallyObserved and have at most one indicator each).
// Instances are immutable after build.
class MGraph {
 public:
  static MGraph build(std::vector<std::pair<std::string, NodeRole>> nodes,
                      const std::vector<std::pair<std::string, std::string>>& edges,
                      const GraphOptions& opts = {});

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::string& name(int i) const { return nodes_[i].first; }
  const NodeRole& role(int i) const { return nodes_[i].second; }
  const std::vector<std::pair<std::string, NodeRole>>& nodes() const { return nodes_; }

  // Declaration index of `name`; throws UnknownNode.
  int index_of(const std::string& name) const;
  std::optional<int> find(const std::string& name) const;

  // Parent/child lists are sorted by declaration index.
  const std::vector<int>& parents(int i) const { return parents_[i]; }
  const std::vector<int>& children(int i) const { return children_[i]; }
  bool has_edge(int u, int v) const;
  // Every edge as (parent, child), sorted by (parent, child) declaration index.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  std::vector<std::pair<std::string, std::string>> edge_names() const;

  // Nodes with all parents first; ties broken by declaration order.
  std::vector<int> topological_order() const;

  // Strict ancestors/descendants (the node itself excluded), ascending index.
  std::vector<int> ancestors(int i) const;
  std::vector<int> descendants(int i) const;

  // True when every undirected path between x and y is blocked given z.
  // A path is blocked if some non-collider on it is in z, or some collider on
  // it has neither itself nor any descendant in z. Sets must be pairwise
  // disjoint; unknown names throw UnknownNode.
  bool d_separated(const std::vector<std::string>& x, const std::vector<std::string>& y,
                   const std::vector<std::string>& z) const;
  bool d_separated_idx(const std::vector<int>& x, const std::vector<int>& y,
                       const std::vector<int>& z) const;

  // All node indices with the given role kind, ascending.
  std::vector<int> role_set(RoleKind k) const;
  // The MissIndicator node for a substantive node, if one is declared.
  std::optional<int> indicator_of(int i) const;

  // Copy with the out-edges of x removed (used by back-door tests).
  MGraph without_out_edges(int x) const;
  // Copy with a different edge set over the same nodes; revalidates.
  MGraph with_edges(const std::vector<std::pair<int, int>>& edges,
                    const GraphOptions& opts = {}) const;

  bool same_nodes(const MGraph& other) const { return nodes_ == other.nodes_; }
  bool same_edges(const MGraph& other) const { return edges_ == other.edges_; }

 private:
  MGraph() = default;
  void rebuild_adjacency();

  std::vector<std::pair<std::string, NodeRole>> nodes_;  // declaration order
  std::vector<std::pair<int, int>> edges_;               // sorted (parent, child)
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

// Hard constraints handed to structure search. The whitelist is the edge set
// of a base graph whose arcs are frozen: search output always contains them
// and never deletes or reverses them. Blacklisted edges never appear.
//
// Invariants: whitelist and blacklist are disjoint; the whitelist alone is an
// acyclic role-valid graph (it is stored as one, roles included).
class PriorKnowledge {
 public:
  static PriorKnowledge make(const MGraph& base,
                             const std::vector<std::pair<std::string, std::string>>& blacklist);

  const MGraph& base() const { return base_; }
  bool whitelisted(int parent, int child) const { return base_.has_edge(parent, child); }
  bool blacklisted(int parent, int child) const;
  const std::vector<std::pair<int, int>>& blacklist() const { return blacklist_; }

 private:
  explicit PriorKnowledge(MGraph base) : base_(std::move(base)) {}

  MGraph base_;
  std::vector<std::pair<int, int>> blacklist_;  // sorted (parent, child)
};

// Plain-text graph file: `[nodes]` section with `name role[=target]` lines,
// `[edges]` with `parent -> child` lines, optional `[forbidden]` with the
// same edge syntax. `#` starts a comment; blank lines are skipped; LF endings.
// Role tokens: observed, partial, latent, selection, indicator=<target>.
struct GraphFile {
  MGraph graph;
  std::vector<std::pair<std::string, std::string>> forbidden;
};

GraphFile parse_graph(const std::string& text, const GraphOptions& opts = {});
GraphFile load_graph(const std::string& path, const GraphOptions& opts = {});
std::string format_graph(const MGraph& g,
                         const std::vector<std::pair<std::string, std::string>>& forbidden = {});
void save_graph(const std::string& path, const MGraph& g,
                const std::vector<std::pair<std::string, std::string>>& forbidden = {});

}  // namespace causalnet

#endif  // CAUSALNET_GRAPH_HPP
