#ifndef CAUSALNET_EVALSIM_HPP
#define CAUSALNET_EVALSIM_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "causalnet/dataset.hpp"
#include "causalnet/discovery.hpp"
#include "causalnet/graph.hpp"
#include "causalnet/network.hpp"

namespace causalnet {

// Area under the ROC curve as the normalized Mann-Whitney statistic:
// (concordant pairs + half the tied pairs) / (positives * negatives).
// Computed by rank sums, exact up to one final division. Labels must contain
// both classes.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

// Structural Hamming distance over the substantive-substantive edges of two
// graphs on the same node names: insertions + deletions + reversals, a
// reversal counting 1.
int shd(const MGraph& g1, const MGraph& g2);

struct SimConfig {
  CausalNetwork truth;               // must contain one Selection node
  std::map<std::string, size_t> rows_per_cohort;  // cohort level -> sample size
  // Optional per-cohort observed-fraction overrides, replacing the indicator
  // mechanism for that variable: cohort level -> (variable -> P(observed)).
  std::map<std::string, std::map<std::string, double>> observed_overrides;
  uint64_t seed = 0;
};

// Ancestral sampling per cohort with the Selection node clamped, followed by
// masking: a substantive cell is blanked wherever its indicator sampled 1.
// The emitted dataset holds the substantive columns only (cohort designated);
// indicator columns can be re-derived from the masking. Byte-deterministic
// for a fixed seed.
struct Simulated {
  Dataset data;
  MGraph truth;  // the generating m-graph, including indicator nodes
};
Simulated simulate_cohorts(const SimConfig& cfg);

struct BenchmarkOptions {
  std::string target = "cvds";
  std::string positive_level = "yes";  // scored class
  SemConfig sem;  // per-run knobs; its seed is overridden by the run seed
  double alpha = 1.0;
  int threads = 1;  // prediction scoring; results do not depend on it
};

struct ModelScore {
  std::string name;
  double auc = 0.0;
};

struct BenchmarkReport {
  uint64_t seed = 0;
  size_t train_rows = 0;
  size_t test_rows = 0;  // held-out rows with the target observed
  std::vector<ModelScore> models;  // naive_bayes, cn_prior, cn_prior_sem
};

// Three-model comparison on one train/test split. Cohorts are split with
// `train_fraction`, except that a cohort without a single observed target
// cell goes to training wholesale; the test rows are the held-out rows whose
// target is observed. Models, in report order:
//   naive_bayes   target -> every substantive non-cohort feature, counted on
//                 the raw training rows (per family, only rows observing the
//                 feature and the target contribute);
//   cn_prior      g0 with parameters refit on the training data completed by
//                 one posterior-mode imputation pass;
//   cn_prior_sem  the structural-EM result started from g0.
// Scores are P(target = positive | observed row cells). A dataset without a
// designated cohort column falls back to g0's Selection node.
BenchmarkReport benchmark(const Dataset& d, const MGraph& g0, const PriorKnowledge& pk,
                          double train_fraction, uint64_t seed,
                          const BenchmarkOptions& opts = {});

// Simulates cfg with the run seed, then runs the comparison above.
BenchmarkReport benchmark(const SimConfig& cfg, const MGraph& g0, const PriorKnowledge& pk,
                          double train_fraction, uint64_t seed,
                          const BenchmarkOptions& opts = {});

// Runs seeds first_seed .. first_seed+count-1, up to `workers` at a time.
// The result order (and every byte of every report) is independent of the
// worker count.
std::vector<BenchmarkReport> benchmark_seeds(const SimConfig& cfg, const MGraph& g0,
                                             const PriorKnowledge& pk, double train_fraction,
                                             uint64_t first_seed, int count, int workers,
                                             const BenchmarkOptions& opts = {});

// Aligned table: one row per (seed, model) with AUC to six decimals.
std::string format_benchmark_table(const std::vector<BenchmarkReport>& reports);
// Machine-readable lines: seed/split sizes plus auc.<model>=<17 digits>.
std::string format_benchmark_keys(const BenchmarkReport& report);

}  // namespace causalnet

#endif  // CAUSALNET_EVALSIM_HPP
