#ifndef CAUSALNET_MISSINGNESS_HPP
#define CAUSALNET_MISSINGNESS_HPP

#include <string>
#include <utility>
#include <vector>

#include "causalnet/dataset.hpp"
#include "causalnet/factor.hpp"
#include "causalnet/graph.hpp"

namespace causalnet {

enum class MissClass { MCAR, MAR, MNAR };

const char* to_string(MissClass c);

// Graphical missingness class of an m-graph. With O the observed nodes, U the
// latent nodes, M the partially observed nodes and R the indicators:
// MCAR when (O,U,M) _||_ R, MAR when (U,M) _||_ R | O, MNAR otherwise.
// A graph without indicators is MCAR.
MissClass classify(const MGraph& g);

enum class RecoveryViolationKind { SelfMasking, RParent, LatentParent };

const char* to_string(RecoveryViolationKind k);

struct RecoveryViolation {
  RecoveryViolationKind kind;
  std::string indicator;  // the R node
  std::string offender;   // the parent that breaks the condition
  bool operator==(const RecoveryViolation&) const = default;
};

struct RecoveryDiagnosis {
  bool recoverable = true;  // true iff violations is empty
  std::vector<RecoveryViolation> violations;
};

// The joint over the substantive nodes is recoverable by observation-rate
// weighting when every indicator R_X satisfies: X is not a parent of R_X
// (no self-masking), no parent of R_X is itself an indicator, and no parent
// is latent.
RecoveryDiagnosis check_recoverable(const MGraph& g);

struct RecoveredJoint {
  Dataset data;  // complete cases, reweighted
  Factor joint;  // normalized weighted counts over `vars`, in request order
};

// Inverse-observation-rate estimate of the joint over `vars`.
//
// For each partially observed X in `vars`, the observation rate
// P(R_X = 0 | parents of R_X) is estimated from the rows where those parents
// are observed. Rows complete on `vars` and on every such parent set keep
// their data, with weight multiplied by the product of inverse rates; the
// joint table is the normalized weighted count. Requires check_recoverable;
// a rate of zero for a surviving row's configuration is an error.
RecoveredJoint recover_joint(const MGraph& g, const Dataset& d,
                             const std::vector<std::string>& vars);

}  // namespace causalnet

#endif  // CAUSALNET_MISSINGNESS_HPP
