#include "causalnet/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace causalnet {

namespace {

std::string role_token(const NodeRole& r) {
  switch (r.kind) {
    case RoleKind::Observed:
      return "observed";
    case RoleKind::PartiallyObserved:
      return "partial";
    case RoleKind::Latent:
      return "latent";
    case RoleKind::Selection:
      return "selection";
    case RoleKind::MissIndicator:
      return "indicator=" + r.of;
  }
  return "observed";
}

NodeRole parse_role(const std::string& token, const std::string& node, int line_no) {
  if (token == "observed") return NodeRole::observed();
  if (token == "partial") return NodeRole::partially_observed();
  if (token == "latent") return NodeRole::latent();
  if (token == "selection") return NodeRole::selection();
  if (token.rfind("indicator=", 0) == 0) {
    std::string target = token.substr(10);
    if (target.empty()) {
      throw FormatError("graph line " + std::to_string(line_no) + ": indicator for '" + node +
                        "' names no target");
    }
    return NodeRole::miss_indicator(target);
  }
  throw FormatError("graph line " + std::to_string(line_no) + ": unknown role '" + token + "'");
}

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Finds and renders one directed cycle among `live` nodes for the error text.
std::string trace_cycle(const std::vector<std::pair<std::string, NodeRole>>& nodes,
                        const std::vector<std::vector<int>>& children,
                        const std::vector<char>& live) {
  int n = static_cast<int>(nodes.size());
  std::vector<int> state(n, 0);  // 0 unseen, 1 on stack, 2 done
  std::vector<int> stack, origin(n, -1);
  for (int s = 0; s < n; ++s) {
    if (!live[s] || state[s] != 0) continue;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      if (state[v] == 0) {
        state[v] = 1;
        for (int c : children[v]) {
          if (!live[c]) continue;
          if (state[c] == 1) {
            // Walk back from v to c through origins.
            std::vector<int> cyc{c};
            for (int w = v; w != c; w = origin[w]) cyc.push_back(w);
            std::reverse(cyc.begin() + 1, cyc.end());
            std::string out;
            for (int w : cyc) out += nodes[w].first + " -> ";
            out += nodes[c].first;
            return out;
          }
          if (state[c] == 0) {
            origin[c] = v;
            stack.push_back(c);
          }
        }
      } else {
        state[v] = 2;
        stack.pop_back();
      }
    }
  }
  return "(cycle not reconstructed)";
}

}  // namespace

MGraph MGraph::build(std::vector<std::pair<std::string, NodeRole>> nodes,
                     const std::vector<std::pair<std::string, std::string>>& edges,
                     const GraphOptions& opts) {
  MGraph g;
  g.nodes_ = std::move(nodes);
  int n = g.node_count();

  std::unordered_map<std::string, int> index;
  for (int i = 0; i < n; ++i) {
    const auto& [name, role] = g.nodes_[i];
    if (name.empty()) throw FormatError("node with empty name");
    if (!index.emplace(name, i).second) throw FormatError("duplicate node name '" + name + "'");
    (void)role;
  }

  // Indicator wiring: targets exist, are PartiallyObserved, one indicator each.
  std::unordered_set<std::string> indicator_targets;
  for (int i = 0; i < n; ++i) {
    const auto& [name, role] = g.nodes_[i];
    if (role.kind != RoleKind::MissIndicator) continue;
    auto it = index.find(role.of);
    if (it == index.end()) {
      throw RoleViolation("indicator '" + name + "' targets unknown node '" + role.of + "'");
    }
    if (g.nodes_[it->second].second.kind != RoleKind::PartiallyObserved) {
      throw RoleViolation("indicator '" + name + "' targets '" + role.of +
                          "' which is not partially observed");
    }
    if (!indicator_targets.insert(role.of).second) {
      throw RoleViolation("node '" + role.of + "' has more than one indicator");
    }
  }

  std::vector<std::pair<int, int>> idx_edges;
  idx_edges.reserve(edges.size());
  std::unordered_set<long long> seen;
  for (const auto& [pname, cname] : edges) {
    auto pit = index.find(pname);
    if (pit == index.end()) throw UnknownNode("edge references unknown node '" + pname + "'");
    auto cit = index.find(cname);
    if (cit == index.end()) throw UnknownNode("edge references unknown node '" + cname + "'");
    int u = pit->second, v = cit->second;
    if (u == v) throw CycleDetected("self loop on '" + pname + "': " + pname + " -> " + cname);
    if (!seen.insert(static_cast<long long>(u) * n + v).second) {
      throw FormatError("duplicate edge " + pname + " -> " + cname);
    }
    const NodeRole& pr = g.nodes_[u].second;
    const NodeRole& cr = g.nodes_[v].second;
    if (cr.kind == RoleKind::Selection) {
      throw RoleViolation("edge " + pname + " -> " + cname + " enters a selection node");
    }
    if (pr.kind == RoleKind::MissIndicator && cr.kind != RoleKind::MissIndicator &&
        !opts.allow_indicator_children) {
      throw RoleViolation("edge " + pname + " -> " + cname +
                          " leaves a missingness indicator (indicators are sinks by default)");
    }
    idx_edges.emplace_back(u, v);
  }
  std::sort(idx_edges.begin(), idx_edges.end());
  g.edges_ = std::move(idx_edges);
  g.rebuild_adjacency();

  // Acyclicity via Kahn; leftover nodes witness a cycle.
  std::vector<int> indeg(n, 0);
  for (const auto& [u, v] : g.edges_) ++indeg[v];
  std::deque<int> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  int placed = 0;
  while (!ready.empty()) {
    int v = ready.front();
    ready.pop_front();
    ++placed;
    for (int c : g.children_[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (placed != n) {
    std::vector<char> live(n, 0);
    for (int i = 0; i < n; ++i) live[i] = indeg[i] > 0;
    throw CycleDetected("cycle: " + trace_cycle(g.nodes_, g.children_, live));
  }
  return g;
}

void MGraph::rebuild_adjacency() {
  int n = node_count();
  parents_.assign(n, {});
  children_.assign(n, {});
  for (const auto& [u, v] : edges_) {
    parents_[v].push_back(u);
    children_[u].push_back(v);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());
}

int MGraph::index_of(const std::string& name) const {
  auto i = find(name);
  if (!i) throw UnknownNode("unknown node '" + name + "'");
  return *i;
}

std::optional<int> MGraph::find(const std::string& name) const {
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].first == name) return i;
  return std::nullopt;
}

bool MGraph::has_edge(int u, int v) const {
  return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(u, v));
}

std::vector<std::pair<std::string, std::string>> MGraph::edge_names() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(edges_.size());
  for (const auto& [u, v] : edges_) out.emplace_back(name(u), name(v));
  return out;
}

std::vector<int> MGraph::topological_order() const {
  int n = node_count();
  std::vector<int> indeg(n, 0), order;
  order.reserve(n);
  for (const auto& [u, v] : edges_) {
    (void)u;
    ++indeg[v];
  }
  // Min-heap on declaration index: ties resolve to declaration order.
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : children_[v])
      if (--indeg[c] == 0) ready.push(c);
  }
  return order;
}

std::vector<int> MGraph::ancestors(int i) const {
  std::vector<char> hit(node_count(), 0);
  std::deque<int> q{i};
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int p : parents_[v]) {
      if (!hit[p]) {
        hit[p] = 1;
        q.push_back(p);
      }
    }
  }
  std::vector<int> out;
  for (int v = 0; v < node_count(); ++v)
    if (hit[v] && v != i) out.push_back(v);
  return out;
}

std::vector<int> MGraph::descendants(int i) const {
  std::vector<char> hit(node_count(), 0);
  std::deque<int> q{i};
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int c : children_[v]) {
      if (!hit[c]) {
        hit[c] = 1;
        q.push_back(c);
      }
    }
  }
  std::vector<int> out;
  for (int v = 0; v < node_count(); ++v)
    if (hit[v] && v != i) out.push_back(v);
  return out;
}

bool MGraph::d_separated(const std::vector<std::string>& x, const std::vector<std::string>& y,
                         const std::vector<std::string>& z) const {
  auto to_idx = [this](const std::vector<std::string>& names) {
    std::vector<int> out;
    out.reserve(names.size());
    for (const auto& s : names) out.push_back(index_of(s));
    return out;
  };
  return d_separated_idx(to_idx(x), to_idx(y), to_idx(z));
}

bool MGraph::d_separated_idx(const std::vector<int>& x, const std::vector<int>& y,
                             const std::vector<int>& z) const {
  int n = node_count();
  std::vector<char> in_x(n, 0), in_y(n, 0), in_z(n, 0);
  auto mark = [n](const std::vector<int>& v, std::vector<char>& flag, const char* what) {
    for (int i : v) {
      if (i < 0 || i >= n) throw UnknownNode(std::string("node index out of range in ") + what);
      flag[i] = 1;
    }
  };
  mark(x, in_x, "x");
  mark(y, in_y, "y");
  mark(z, in_z, "z");
  for (int i = 0; i < n; ++i) {
    if ((in_x[i] && in_y[i]) || (in_x[i] && in_z[i]) || (in_y[i] && in_z[i])) {
      throw InvalidArgument("d-separation sets must be pairwise disjoint ('" + name(i) + "')");
    }
  }
  if (x.empty() || y.empty()) return true;

  // Nodes that are in z or have a descendant in z: a collider on a path is
  // traversable exactly when it belongs to this set.
  std::vector<char> z_or_anc(in_z);
  {
    std::deque<int> q(z.begin(), z.end());
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int p : parents_[v]) {
        if (!z_or_anc[p]) {
          z_or_anc[p] = 1;
          q.push_back(p);
        }
      }
    }
  }

  // Reachability over (node, arrival direction) states. FromChild means the
  // trail entered through an outgoing edge of the node (walking upstream);
  // FromParent means it entered through an incoming edge (walking downstream).
  enum Dir { FromChild = 0, FromParent = 1 };
  std::vector<char> visited(static_cast<size_t>(n) * 2, 0);
  std::deque<std::pair<int, Dir>> q;
  for (int s : x) q.emplace_back(s, FromChild);
  while (!q.empty()) {
    auto [v, dir] = q.front();
    q.pop_front();
    char& seen = visited[static_cast<size_t>(v) * 2 + dir];
    if (seen) continue;
    seen = 1;
    if (!in_z[v] && in_y[v]) return false;
    if (dir == FromChild) {
      if (!in_z[v]) {
        for (int p : parents_[v]) q.emplace_back(p, FromChild);
        for (int c : children_[v]) q.emplace_back(c, FromParent);
      }
    } else {
      if (!in_z[v]) {
        for (int c : children_[v]) q.emplace_back(c, FromParent);
      }
      if (z_or_anc[v]) {
        for (int p : parents_[v]) q.emplace_back(p, FromChild);
      }
    }
  }
  return true;
}

std::vector<int> MGraph::role_set(RoleKind k) const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i)
    if (nodes_[i].second.kind == k) out.push_back(i);
  return out;
}

std::optional<int> MGraph::indicator_of(int i) const {
  const std::string& target = name(i);
  for (int r = 0; r < node_count(); ++r) {
    const NodeRole& role = nodes_[r].second;
    if (role.kind == RoleKind::MissIndicator && role.of == target) return r;
  }
  return std::nullopt;
}

MGraph MGraph::without_out_edges(int x) const {
  MGraph g;
  g.nodes_ = nodes_;
  for (const auto& e : edges_)
    if (e.first != x) g.edges_.push_back(e);
  g.rebuild_adjacency();
  return g;
}

MGraph MGraph::with_edges(const std::vector<std::pair<int, int>>& edges,
                          const GraphOptions& opts) const {
  std::vector<std::pair<std::string, std::string>> named;
  named.reserve(edges.size());
  for (const auto& [u, v] : edges) named.emplace_back(name(u), name(v));
  return build(nodes_, named, opts);
}

PriorKnowledge PriorKnowledge::make(
    const MGraph& base, const std::vector<std::pair<std::string, std::string>>& blacklist) {
  PriorKnowledge pk(base);
  for (const auto& [pname, cname] : blacklist) {
    int u = base.index_of(pname);
    int v = base.index_of(cname);
    if (base.has_edge(u, v)) {
      throw ConstraintConflict("edge " + pname + " -> " + cname +
                               " is both whitelisted and blacklisted");
    }
    pk.blacklist_.emplace_back(u, v);
  }
  std::sort(pk.blacklist_.begin(), pk.blacklist_.end());
  pk.blacklist_.erase(std::unique(pk.blacklist_.begin(), pk.blacklist_.end()),
                      pk.blacklist_.end());
  return pk;
}

bool PriorKnowledge::blacklisted(int parent, int child) const {
  return std::binary_search(blacklist_.begin(), blacklist_.end(), std::make_pair(parent, child));
}

GraphFile parse_graph(const std::string& text, const GraphOptions& opts) {
  std::vector<std::pair<std::string, NodeRole>> nodes;
  std::vector<std::pair<std::string, std::string>> edges, forbidden;
  enum Section { None, Nodes, Edges, Forbidden } section = None;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
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
    if (line == "[forbidden]") {
      section = Forbidden;
      continue;
    }
    if (line.front() == '[') {
      throw FormatError("graph line " + std::to_string(line_no) + ": unknown section '" + line +
                        "'");
    }
    switch (section) {
      case None:
        throw FormatError("graph line " + std::to_string(line_no) + ": content before [nodes]");
      case Nodes: {
        std::istringstream ls(line);
        std::string name, role, extra;
        ls >> name >> role;
        if (role.empty()) {
          throw FormatError("graph line " + std::to_string(line_no) + ": expected 'name role'");
        }
        if (ls >> extra) {
          throw FormatError("graph line " + std::to_string(line_no) + ": trailing token '" +
                            extra + "'");
        }
        nodes.emplace_back(name, parse_role(role, name, line_no));
        break;
      }
      case Edges:
      case Forbidden: {
        std::istringstream ls(line);
        std::string a, arrow, b, extra;
        ls >> a >> arrow >> b;
        if (arrow != "->" || b.empty()) {
          throw FormatError("graph line " + std::to_string(line_no) +
                            ": expected 'parent -> child'");
        }
        if (ls >> extra) {
          throw FormatError("graph line " + std::to_string(line_no) + ": trailing token '" +
                            extra + "'");
        }
        (section == Edges ? edges : forbidden).emplace_back(a, b);
        break;
      }
    }
  }
  GraphFile out{MGraph::build(std::move(nodes), edges, opts), std::move(forbidden)};
  // Forbidden entries must reference declared nodes.
  for (const auto& [a, b] : out.forbidden) {
    out.graph.index_of(a);
    out.graph.index_of(b);
  }
  return out;
}

GraphFile load_graph(const std::string& path, const GraphOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open graph file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str(), opts);
}

std::string format_graph(const MGraph& g,
                         const std::vector<std::pair<std::string, std::string>>& forbidden) {
  std::string out = "[nodes]\n";
  for (int i = 0; i < g.node_count(); ++i) {
    out += g.name(i) + " " + role_token(g.role(i)) + "\n";
  }
  out += "[edges]\n";
  for (const auto& [u, v] : g.edges()) {
    out += g.name(u) + " -> " + g.name(v) + "\n";
  }
  if (!forbidden.empty()) {
    out += "[forbidden]\n";
    for (const auto& [a, b] : forbidden) out += a + " -> " + b + "\n";
  }
  return out;
}

void save_graph(const std::string& path, const MGraph& g,
                const std::vector<std::pair<std::string, std::string>>& forbidden) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write graph file '" + path + "'");
  out << format_graph(g, forbidden);
}

}  // namespace causalnet
