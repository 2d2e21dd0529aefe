#include "causalnet/missingness.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace causalnet {

const char* to_string(MissClass c) {
  switch (c) {
    case MissClass::MCAR:
      return "MCAR";
    case MissClass::MAR:
      return "MAR";
    case MissClass::MNAR:
      return "MNAR";
  }
  return "?";
}

const char* to_string(RecoveryViolationKind k) {
  switch (k) {
    case RecoveryViolationKind::SelfMasking:
      return "SelfMasking";
    case RecoveryViolationKind::RParent:
      return "RParent";
    case RecoveryViolationKind::LatentParent:
      return "LatentParent";
  }
  return "?";
}

MissClass classify(const MGraph& g) {
  std::vector<int> r = g.role_set(RoleKind::MissIndicator);
  std::vector<int> o = g.role_set(RoleKind::Observed);
  std::vector<int> um = g.role_set(RoleKind::Latent);
  for (int m : g.role_set(RoleKind::PartiallyObserved)) um.push_back(m);

  std::vector<int> oum = um;
  for (int v : o) oum.push_back(v);
  if (g.d_separated_idx(oum, r, {})) return MissClass::MCAR;
  if (g.d_separated_idx(um, r, o)) return MissClass::MAR;
  return MissClass::MNAR;
}

RecoveryDiagnosis check_recoverable(const MGraph& g) {
  RecoveryDiagnosis diag;
  for (int r : g.role_set(RoleKind::MissIndicator)) {
    int target = g.index_of(g.role(r).of);
    for (int p : g.parents(r)) {
      if (p == target) {
        diag.violations.push_back(
            {RecoveryViolationKind::SelfMasking, g.name(r), g.name(p)});
      } else if (g.role(p).kind == RoleKind::MissIndicator) {
        diag.violations.push_back({RecoveryViolationKind::RParent, g.name(r), g.name(p)});
      } else if (g.role(p).kind == RoleKind::Latent) {
        diag.violations.push_back(
            {RecoveryViolationKind::LatentParent, g.name(r), g.name(p)});
      }
    }
  }
  diag.recoverable = diag.violations.empty();
  return diag;
}

RecoveredJoint recover_joint(const MGraph& g, const Dataset& d,
                             const std::vector<std::string>& vars) {
  if (vars.empty()) throw InvalidArgument("recover_joint needs at least one variable");
  RecoveryDiagnosis diag = check_recoverable(g);
  if (!diag.recoverable) {
    std::string msg = "joint is not recoverable:";
    for (const auto& v : diag.violations) {
      msg += std::string(" ") + to_string(v.kind) + "(" + v.indicator + " <- " + v.offender + ")";
    }
    throw NotRecoverable(msg);
  }

  const Schema& schema = d.schema();
  std::set<std::string> seen;
  std::vector<int> var_cols;
  // One weighting mechanism per partially observed requested variable.
  struct Mechanism {
    std::vector<int> parent_cols;
    std::vector<size_t> parent_arity;
    std::vector<double> observed;  // weight with the target present, per config
    std::vector<double> total;     // weight with parents present, per config
    std::string indicator;
    int target_col;
  };
  std::vector<Mechanism> mechanisms;

  for (const auto& name : vars) {
    int node = g.index_of(name);
    RoleKind kind = g.role(node).kind;
    if (kind != RoleKind::Observed && kind != RoleKind::PartiallyObserved) {
      throw InvalidArgument("variable '" + name + "' is not an observed or partial node");
    }
    if (!seen.insert(name).second) throw InvalidArgument("duplicate variable '" + name + "'");
    var_cols.push_back(schema.index_of(name));
    if (kind != RoleKind::PartiallyObserved) continue;

    auto r = g.indicator_of(node);
    if (!r) throw InvalidArgument("partial variable '" + name + "' has no indicator node");
    Mechanism mech;
    mech.indicator = g.name(*r);
    mech.target_col = schema.index_of(name);
    size_t configs = 1;
    for (int p : g.parents(*r)) {
      int col = schema.index_of(g.name(p));
      mech.parent_cols.push_back(col);
      mech.parent_arity.push_back(schema.var(col).levels.size());
      configs *= schema.var(col).levels.size();
    }
    mech.observed.assign(configs, 0.0);
    mech.total.assign(configs, 0.0);
    mechanisms.push_back(std::move(mech));
  }

  // Observation rates from the rows where the indicator's parents are present.
  auto config_of = [&](const Mechanism& m, size_t row, size_t* out) {
    size_t cfg = 0;
    for (size_t k = 0; k < m.parent_cols.size(); ++k) {
      int32_t v = d.cell(row, m.parent_cols[k]);
      if (v == kMissing) return false;
      cfg = cfg * m.parent_arity[k] + static_cast<size_t>(v);
    }
    *out = cfg;
    return true;
  };
  for (size_t r = 0; r < d.row_count(); ++r) {
    for (auto& m : mechanisms) {
      size_t cfg;
      if (!config_of(m, r, &cfg)) continue;
      m.total[cfg] += d.weight(r);
      if (d.cell(r, m.target_col) != kMissing) m.observed[cfg] += d.weight(r);
    }
  }

  // Complete cases on the requested variables and every mechanism parent.
  std::vector<int> required = var_cols;
  for (const auto& m : mechanisms) {
    required.insert(required.end(), m.parent_cols.begin(), m.parent_cols.end());
  }
  std::sort(required.begin(), required.end());
  required.erase(std::unique(required.begin(), required.end()), required.end());

  std::vector<size_t> keep;
  for (size_t r = 0; r < d.row_count(); ++r) {
    if (d.row_complete_on(r, required)) keep.push_back(r);
  }
  Dataset out = d.select_rows(keep);
  for (size_t i = 0; i < keep.size(); ++i) {
    double w = out.weight(i);
    for (const auto& m : mechanisms) {
      size_t cfg = 0;
      config_of(m, keep[i], &cfg);
      double rate = m.total[cfg] > 0.0 ? m.observed[cfg] / m.total[cfg] : 0.0;
      if (rate <= 0.0) {
        throw ZeroObservationRate("indicator '" + m.indicator +
                                  "' has observation rate 0 for a complete row's configuration");
      }
      w /= rate;
    }
    out.set_weight(i, w);
  }

  std::vector<Factor::Axis> axes;
  for (const auto& name : vars) {
    axes.push_back({name, schema.var(schema.index_of(name)).levels});
  }
  size_t cells = 1;
  for (const auto& a : axes) cells *= a.levels.size();
  std::vector<double> counts(cells, 0.0);
  for (size_t i = 0; i < out.row_count(); ++i) {
    size_t idx = 0;
    for (size_t k = 0; k < var_cols.size(); ++k) {
      idx = idx * axes[k].levels.size() + static_cast<size_t>(out.cell(i, var_cols[k]));
    }
    counts[idx] += out.weight(i);
  }
  Factor joint(std::move(axes), std::move(counts));
  if (joint.total() <= 0.0) {
    throw EmptyDataset("no complete rows over the requested variables");
  }
  return {std::move(out), joint.normalized()};
}

}  // namespace causalnet
