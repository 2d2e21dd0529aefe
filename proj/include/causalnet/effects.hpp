#ifndef CAUSALNET_EFFECTS_HPP
#define CAUSALNET_EFFECTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "causalnet/factor.hpp"
#include "causalnet/graph.hpp"
#include "causalnet/network.hpp"

namespace causalnet {

// True when z is a valid back-door adjustment set for the effect of x on y:
// no member of z is a descendant of x, and z d-separates x from y in the
// graph with x's outgoing edges removed. z must not contain x or y.
bool is_backdoor(const MGraph& g, const std::vector<std::string>& z, const std::string& x,
                 const std::string& y);

// Smallest valid adjustment set drawn from the fully observable nodes
// (Observed and Selection roles), by cardinality and then lexicographic
// order. Empty optional when no subset works. The candidate pool is capped
// at 20 nodes.
std::optional<std::vector<std::string>> find_backdoor(const MGraph& g, const std::string& x,
                                                      const std::string& y);

struct AdjustmentQuery {
  std::string treatment;
  std::string outcome;
  std::string treatment_level;
  std::optional<std::string> outcome_level;  // full distribution when absent
};

struct EffectStratum {
  std::vector<std::string> z_levels;  // one level per adjustment variable
  double weight = 0.0;                // P(Z = z)
  std::vector<double> outcome_dist;   // P(Y | X = x, Z = z)
};

struct EffectEstimate {
  Factor distribution;                 // over the outcome, sums to 1
  std::vector<EffectStratum> strata;   // zero-weight strata omitted
};

// Interventional distribution P(outcome | do(treatment = level)) by back-door
// adjustment over z: the z-weighted average of P(Y | X = x, Z = z), each
// factor computed exactly. z must pass is_backdoor. A stratum with positive
// probability but P(X = x | z) = 0 leaves the effect undefined and throws
// ZeroProbabilityStratum.
EffectEstimate effect(const CausalNetwork& c, const AdjustmentQuery& q,
                      const std::vector<std::string>& z);

}  // namespace causalnet

#endif  // CAUSALNET_EFFECTS_HPP
