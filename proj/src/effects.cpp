#include "causalnet/effects.hpp"

#include <algorithm>
#include <set>

namespace causalnet {

bool is_backdoor(const MGraph& g, const std::vector<std::string>& z, const std::string& x,
                 const std::string& y) {
  int xi = g.index_of(x);
  int yi = g.index_of(y);
  if (xi == yi) throw InvalidArgument("treatment and outcome must differ");
  std::vector<int> zi;
  for (const auto& name : z) {
    int v = g.index_of(name);
    if (v == xi || v == yi) {
      throw InvalidArgument("adjustment set must exclude '" + name + "'");
    }
    zi.push_back(v);
  }

  std::vector<int> desc = g.descendants(xi);
  for (int v : zi) {
    if (std::find(desc.begin(), desc.end(), v) != desc.end()) return false;
  }
  return g.without_out_edges(xi).d_separated_idx({xi}, {yi}, zi);
}

std::optional<std::vector<std::string>> find_backdoor(const MGraph& g, const std::string& x,
                                                      const std::string& y) {
  int xi = g.index_of(x);
  int yi = g.index_of(y);
  if (xi == yi) throw InvalidArgument("treatment and outcome must differ");

  std::vector<std::string> pool;
  for (int v : g.role_set(RoleKind::Observed)) {
    if (v != xi && v != yi) pool.push_back(g.name(v));
  }
  for (int v : g.role_set(RoleKind::Selection)) {
    if (v != xi && v != yi) pool.push_back(g.name(v));
  }
  std::sort(pool.begin(), pool.end());
  if (pool.size() > 20) {
    throw InvalidArgument("adjustment search supports at most 20 candidate nodes, got " +
                          std::to_string(pool.size()));
  }

  size_t n = pool.size();
  for (size_t size = 0; size <= n; ++size) {
    // Subsets of one cardinality in lexicographic order over the sorted pool.
    std::vector<size_t> idx(size);
    for (size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      std::vector<std::string> z;
      for (size_t i : idx) z.push_back(pool[i]);
      if (is_backdoor(g, z, x, y)) return z;
      int k = static_cast<int>(size) - 1;
      while (k >= 0 && idx[k] == static_cast<size_t>(k) + n - size) --k;
      if (k < 0) break;
      ++idx[k];
      for (size_t j = k + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return std::nullopt;
}

EffectEstimate effect(const CausalNetwork& c, const AdjustmentQuery& q,
                      const std::vector<std::string>& z) {
  const MGraph& g = c.graph();
  if (!is_backdoor(g, z, q.treatment, q.outcome)) {
    std::string members;
    for (const auto& name : z) members += (members.empty() ? "" : ",") + name;
    throw InvalidAdjustmentSet("{" + members + "} fails the back-door criterion for " +
                               q.treatment + " -> " + q.outcome);
  }
  int xi = g.index_of(q.treatment);
  int yi = g.index_of(q.outcome);
  int x_level = c.level_code(xi, q.treatment_level);
  if (q.outcome_level) c.level_code(yi, *q.outcome_level);  // validate
  std::vector<int> zi;
  for (const auto& name : z) zi.push_back(g.index_of(name));

  EffectEstimate est;
  size_t y_arity = c.levels(yi).size();
  std::vector<double> acc(y_arity, 0.0);

  // Iterate z configurations through the joint P(Z); skip zero-mass strata.
  Factor pz = z.empty() ? Factor(1.0) : eliminate_codes(c, zi, {});
  std::vector<int> conf(zi.size(), 0);
  while (true) {
    double weight = zi.empty() ? 1.0 : pz.value_at(conf);
    if (weight > 0.0) {
      std::vector<std::pair<int, int>> evidence{{xi, x_level}};
      for (size_t k = 0; k < zi.size(); ++k) evidence.emplace_back(zi[k], conf[k]);
      Factor cond;
      try {
        cond = eliminate_codes(c, {yi}, evidence);
      } catch (const InconsistentEvidence&) {
        std::string desc;
        for (size_t k = 0; k < zi.size(); ++k) {
          if (k) desc += ",";
          desc += z[k] + "=" + c.levels(zi[k])[conf[k]];
        }
        throw ZeroProbabilityStratum("stratum {" + desc + "} has P(" + q.treatment + "=" +
                                     q.treatment_level + " | z) = 0; effect undefined");
      }
      EffectStratum stratum;
      stratum.weight = weight;
      for (size_t k = 0; k < zi.size(); ++k) {
        stratum.z_levels.push_back(c.levels(zi[k])[conf[k]]);
      }
      stratum.outcome_dist = cond.values();
      for (size_t l = 0; l < y_arity; ++l) acc[l] += weight * cond.values()[l];
      est.strata.push_back(std::move(stratum));
    }
    bool done = true;
    for (size_t k = zi.size(); k-- > 0;) {
      if (++conf[k] < static_cast<int>(c.levels(zi[k]).size())) {
        done = false;
        break;
      }
      conf[k] = 0;
    }
    if (done) break;
  }

  est.distribution =
      Factor({{q.outcome, c.levels(yi)}}, std::move(acc)).normalized();
  return est;
}

}  // namespace causalnet
