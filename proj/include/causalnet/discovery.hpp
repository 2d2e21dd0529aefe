#ifndef CAUSALNET_DISCOVERY_HPP
#define CAUSALNET_DISCOVERY_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causalnet/dataset.hpp"
#include "causalnet/graph.hpp"
#include "causalnet/network.hpp"

namespace causalnet {

struct ScoreValue {
  double total = 0.0;
  std::map<std::string, double> locals;  // node name -> local score; total is their sum
};

// BIC of a graph on complete weighted data, natural log. Each non-latent
// node contributes its family log-likelihood at the fitted (alpha-smoothed)
// parameters minus (k/2) * ln(n_eff), where k = (|X|-1) * prod |parents| and
// n_eff is the total row weight. Rows must be complete on the scored nodes.
ScoreValue bic(const MGraph& g, const Dataset& d, double alpha);

struct SemConfig {
  int max_iterations = 20;
  double epsilon = 1e-6;  // relative score-gain stopping tolerance
  int max_parents = 5;
  double alpha = 1.0;
  uint64_t seed = 0;
  int restarts = 1;  // restarts beyond the first start from random completions
};

// Steepest-ascent BIC hill climbing from the prior graph. Candidate moves
// add, delete or reverse an edge between substantive nodes, never touching
// whitelisted (prior) edges, blacklisted pairs, edges into a Selection node,
// or the parent cap. Deterministic: the best strictly improving move wins,
// ties broken by operator (add < delete < reverse) then edge names.
MGraph hill_climb(const Dataset& d, const PriorKnowledge& pk, const SemConfig& cfg);

struct ImputeResult {
  Dataset data;            // every modeled column complete
  size_t fallback_rows = 0;  // rows whose evidence had zero probability
};

// Fills each missing cell with the mode of that variable's posterior given
// the row's observed modeled cells, ties to the lowest level code. Rows with
// impossible evidence fall back to the prior-marginal mode and are counted.
ImputeResult impute_mode(const CausalNetwork& c, const Dataset& d);

struct SemIteration {
  MGraph graph;
  double score = 0.0;        // bic total on the completed data
  int shd_vs_prev = 0;       // vs the previous iterate (first: vs the start graph)
  size_t imputed_changed = 0;  // cells differing from the previous completion
  double loglik = 0.0;       // parameter log-likelihood on the completed data
};

struct SemTrace {
  std::vector<SemIteration> iterations;
  bool converged = false;  // stopped by tolerance or fixpoint, not by the cap
  int best_index = 0;      // iteration with the highest score
};

struct SemResult {
  CausalNetwork network;  // refit on the best iteration's completion
  SemTrace trace;
};

// Structural EM: alternate posterior-mode imputation (E) with constrained
// hill climbing plus refitting (M), starting from parameters fitted on g0 by
// available-case counting. Stops when the relative score gain drops below
// epsilon, the completed data reach a fixpoint, or max_iterations. Returns
// the best-scoring iterate and the full trace. With restarts > 1, later
// starts use seeded random completions and the best final score wins.
// Every g0 edge must be in pk's whitelist.
SemResult sem(const Dataset& d, const MGraph& g0, const PriorKnowledge& pk,
              const SemConfig& cfg);

// One line per iteration: `iter=<i> score=<...> shd_vs_prev=<...>
// imputed_changed=<...>`, 17 significant digits for the score.
std::string format_trace(const SemTrace& trace);

}  // namespace causalnet

#endif  // CAUSALNET_DISCOVERY_HPP
