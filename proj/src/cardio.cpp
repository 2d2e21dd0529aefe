#include "causalnet/cardio.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "causalnet/errors.hpp"

namespace causalnet {
namespace {

// Looks up a parent's sampled level code by node name. Handed to the CPT
// probability functions so they stay independent of parent declaration order.
using Assign = std::function<int(const std::string&)>;

const std::vector<std::string> kYesNo = {"no", "yes"};
const std::vector<std::string> kZeroOne = {"0", "1"};

std::vector<std::pair<std::string, std::vector<std::string>>> level_table() {
  return {
      {"cohort", {"pbc", "cbc"}},
      {"age35", kYesNo},
      {"histology", {"ductal", "other"}},
      {"grade", {"low", "high"}},
      {"vascular", kYesNo},
      {"ki67", {"neg", "pos"}},
      {"receptors", {"hr", "her2", "tn"}},
      {"pT", {"small", "large"}},
      {"pN", {"neg", "pos"}},
      {"chemo_neo", kYesNo},
      {"radio_neo", kYesNo},
      {"target_neo", kYesNo},
      {"hormons_neo", kYesNo},
      {"surgery", {"conservative", "radical"}},
      {"chemo_adju", kYesNo},
      {"radio_adju", kYesNo},
      {"target_adju", kYesNo},
      {"hormons_adju", kYesNo},
      {"death_in_5y", kYesNo},
      {"dyslipidemia", kYesNo},
      {"hypertension", kYesNo},
      {"t2db", kYesNo},
      {"cardiotoxicity", kYesNo},
      {"ischemic_heart_disease", kYesNo},
      {"cvds", kYesNo},
  };
}

// Partially observed variables and the fraction observed per cohort.
// Tumor variables are missing from the registry wholesale; outcomes are
// missing from the clinic wholesale; survival is in between.
struct ObservedRate {
  const char* var;
  double pbc;
  double cbc;
};

const ObservedRate kObservedRates[] = {
    {"grade", 0.00, 0.89},
    {"vascular", 0.00, 0.57},
    {"ki67", 0.00, 0.92},
    {"receptors", 0.00, 0.94},
    {"pT", 0.00, 0.65},
    {"pN", 0.00, 0.68},
    {"death_in_5y", 0.90, 0.45},
    {"dyslipidemia", 0.80, 0.05},
    {"hypertension", 0.80, 0.03},
    {"t2db", 0.80, 0.01},
    // Subclinical cardiac damage and out-of-network ischemic events are
    // captured unevenly by registry follow-up; the target cvds is complete.
    {"cardiotoxicity", 0.50, 0.00},
    {"ischemic_heart_disease", 0.60, 0.00},
    {"cvds", 1.00, 0.00},
};

// Arcs elicited as domain consensus; structure search starts from these.
std::vector<std::pair<std::string, std::string>> baseline_edges() {
  return {
      {"cohort", "grade"},
      {"cohort", "pT"},
      {"cohort", "pN"},
      {"histology", "receptors"},
      {"grade", "chemo_neo"},
      {"pT", "chemo_neo"},
      {"receptors", "target_neo"},
      {"receptors", "hormons_neo"},
      {"receptors", "target_adju"},
      {"receptors", "hormons_adju"},
      {"pT", "surgery"},
      {"vascular", "chemo_adju"},
      {"ki67", "chemo_adju"},
      {"pN", "chemo_adju"},
      {"pN", "radio_adju"},
      {"age35", "death_in_5y"},
      {"grade", "death_in_5y"},
      {"pT", "death_in_5y"},
      {"pN", "death_in_5y"},
      {"cvds", "death_in_5y"},
      {"chemo_neo", "cardiotoxicity"},
      {"chemo_adju", "cardiotoxicity"},
      {"target_neo", "cardiotoxicity"},
      {"target_adju", "cardiotoxicity"},
      {"age35", "dyslipidemia"},
      {"age35", "hypertension"},
      {"age35", "t2db"},
      {"age35", "ischemic_heart_disease"},
      {"hormons_adju", "dyslipidemia"},
      {"hormons_adju", "hypertension"},
      {"hormons_adju", "t2db"},
      {"dyslipidemia", "ischemic_heart_disease"},
      {"hypertension", "ischemic_heart_disease"},
      {"t2db", "ischemic_heart_disease"},
      {"cardiotoxicity", "cvds"},
      {"ischemic_heart_disease", "cvds"},
      {"radio_adju", "cvds"},
  };
}

// Arcs present in the generating process but withheld from the baseline:
// cohort-driven treatment intensity, neoadjuvant-to-adjuvant carry-over,
// and the direct target_neo -> cvds effect.
std::vector<std::pair<std::string, std::string>> withheld_edges() {
  return {
      {"cohort", "target_neo"},
      {"cohort", "chemo_adju"},
      {"cohort", "radio_adju"},
      {"cohort", "hormons_adju"},
      {"chemo_neo", "chemo_adju"},
      {"chemo_neo", "radio_adju"},
      {"target_neo", "target_adju"},
      {"target_neo", "cvds"},
  };
}

std::vector<std::pair<std::string, NodeRole>> node_roles() {
  std::vector<std::pair<std::string, NodeRole>> nodes;
  std::vector<std::string> partial;
  for (const auto& rate : kObservedRates) partial.push_back(rate.var);
  for (const auto& [name, levels] : level_table()) {
    (void)levels;
    if (name == "cohort") {
      nodes.emplace_back(name, NodeRole::selection());
    } else if (std::find(partial.begin(), partial.end(), name) != partial.end()) {
      nodes.emplace_back(name, NodeRole::partially_observed());
    } else {
      nodes.emplace_back(name, NodeRole::observed());
    }
  }
  for (const auto& rate : kObservedRates) {
    nodes.emplace_back("R_" + std::string(rate.var), NodeRole::miss_indicator(rate.var));
  }
  return nodes;
}

std::vector<std::pair<std::string, std::string>> indicator_edges() {
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& rate : kObservedRates) {
    edges.emplace_back("cohort", "R_" + std::string(rate.var));
  }
  return edges;
}

// CPT over the node's graph parents; `dist` maps a parent assignment to the
// child distribution. Configurations are enumerated odometer-style with the
// last parent varying fastest, matching the table layout.
Cpt build_cpt(const MGraph& g,
              const std::vector<std::pair<std::string, std::vector<std::string>>>& levels,
              const std::string& child,
              const std::function<std::vector<double>(const Assign&)>& dist) {
  auto levels_of = [&](const std::string& name) -> const std::vector<std::string>& {
    for (const auto& [n, lv] : levels) {
      if (n == name) return lv;
    }
    throw InvalidArgument("no levels for '" + name + "'");
  };

  Cpt c;
  c.child = child;
  int node = g.index_of(child);
  for (int p : g.parents(node)) c.parents.push_back(g.name(p));
  c.child_levels = g.role(node).kind == RoleKind::MissIndicator ? kZeroOne : levels_of(child);
  size_t configs = 1;
  for (const auto& p : c.parents) {
    c.parent_levels.push_back(p.rfind("R_", 0) == 0 ? kZeroOne : levels_of(p));
    configs *= c.parent_levels.back().size();
  }

  std::vector<int> code(c.parents.size(), 0);
  for (size_t cfg = 0; cfg < configs; ++cfg) {
    size_t rem = cfg;
    for (size_t j = c.parents.size(); j-- > 0;) {
      code[j] = static_cast<int>(rem % c.parent_levels[j].size());
      rem /= c.parent_levels[j].size();
    }
    Assign at = [&](const std::string& name) {
      for (size_t j = 0; j < c.parents.size(); ++j) {
        if (c.parents[j] == name) return code[j];
      }
      throw InvalidArgument("'" + child + "' does not have parent '" + name + "'");
    };
    std::vector<double> row = dist(at);
    c.table.insert(c.table.end(), row.begin(), row.end());
  }
  c.validate();
  return c;
}

std::vector<double> coin(double p_yes) {
  double p = std::clamp(p_yes, 0.001, 0.999);
  return {1.0 - p, p};
}

}  // namespace

CausalNetwork cardio_truth() {
  auto levels = level_table();
  auto edges = baseline_edges();
  auto blue = withheld_edges();
  edges.insert(edges.end(), blue.begin(), blue.end());
  auto r_edges = indicator_edges();
  edges.insert(edges.end(), r_edges.begin(), r_edges.end());
  MGraph g = MGraph::build(node_roles(), edges);

  // Constants below are tuned so that a large registry cohort lands near
  // these rates: any neoadjuvant treatment 23% (clinic 30%), triple negative
  // receptor status 17%, at least one cardiac risk factor 15%,
  // cardiotoxicity 1%, ischemic heart disease 2%, cvds 3%.
  std::vector<Cpt> cpts;
  auto add = [&](const std::string& child,
                 const std::function<std::vector<double>(const Assign&)>& dist) {
    cpts.push_back(build_cpt(g, levels, child, dist));
  };

  add("cohort", [](const Assign&) { return std::vector<double>{0.815, 0.185}; });
  add("age35", [](const Assign&) { return coin(0.40); });
  add("histology", [](const Assign&) { return coin(0.25); });
  add("grade", [](const Assign& at) { return coin(at("cohort") ? 0.65 : 0.45); });
  add("vascular", [](const Assign&) { return coin(0.30); });
  add("ki67", [](const Assign&) { return coin(0.55); });
  add("receptors", [](const Assign& at) {
    return at("histology") ? std::vector<double>{0.78, 0.08, 0.14}
                           : std::vector<double>{0.60, 0.22, 0.18};
  });
  add("pT", [](const Assign& at) { return coin(at("cohort") ? 0.55 : 0.35); });
  add("pN", [](const Assign& at) { return coin(at("cohort") ? 0.50 : 0.30); });

  add("chemo_neo", [](const Assign& at) {
    return coin(0.03 + 0.12 * at("grade") + 0.15 * at("pT"));
  });
  add("radio_neo", [](const Assign&) { return coin(0.02); });
  add("target_neo", [](const Assign& at) {
    if (at("receptors") != 1) return coin(0.005);
    return coin(at("cohort") ? 0.15 : 0.30);
  });
  add("hormons_neo", [](const Assign& at) { return coin(at("receptors") == 0 ? 0.06 : 0.01); });
  add("surgery", [](const Assign& at) { return coin(at("pT") ? 0.60 : 0.25); });

  add("chemo_adju", [](const Assign& at) {
    return coin(0.12 + 0.25 * at("pN") + 0.15 * at("ki67") + 0.10 * at("vascular") +
                0.18 * at("cohort") - 0.22 * at("chemo_neo"));
  });
  add("radio_adju", [](const Assign& at) {
    return coin(0.42 + 0.22 * at("pN") + 0.15 * at("cohort") - 0.20 * at("chemo_neo"));
  });
  add("target_adju", [](const Assign& at) {
    if (at("receptors") != 1) return coin(0.01);
    return coin(0.55 + 0.30 * at("target_neo"));
  });
  add("hormons_adju", [](const Assign& at) {
    if (at("receptors") == 0) return coin(0.70 + 0.15 * at("cohort"));
    return coin(at("receptors") == 1 ? 0.10 : 0.02);
  });

  add("death_in_5y", [](const Assign& at) {
    return coin(0.015 + 0.035 * at("age35") + 0.10 * at("grade") + 0.12 * at("pT") +
                0.18 * at("pN") + 0.32 * at("cvds"));
  });
  add("dyslipidemia", [](const Assign& at) {
    return coin(0.006 + 0.015 * at("age35") + 0.170 * at("hormons_adju"));
  });
  add("hypertension", [](const Assign& at) {
    return coin(0.005 + 0.018 * at("age35") + 0.110 * at("hormons_adju"));
  });
  add("t2db", [](const Assign& at) {
    return coin(0.002 + 0.010 * at("age35") + 0.060 * at("hormons_adju"));
  });
  add("cardiotoxicity", [](const Assign& at) {
    return coin(0.002 + 0.028 * at("chemo_neo") + 0.035 * at("chemo_adju") +
                0.040 * at("target_neo") + 0.030 * at("target_adju"));
  });
  add("ischemic_heart_disease", [](const Assign& at) {
    return coin(0.002 + 0.014 * at("age35") + 0.160 * at("dyslipidemia") +
                0.160 * at("hypertension") + 0.120 * at("t2db"));
  });
  add("cvds", [](const Assign& at) {
    return coin(0.002 + 0.30 * at("cardiotoxicity") + 0.34 * at("ischemic_heart_disease") +
                0.010 * at("radio_adju") + 0.11 * at("target_neo"));
  });

  for (const auto& rate : kObservedRates) {
    add("R_" + std::string(rate.var), [&rate](const Assign& at) {
      double observed = at("cohort") ? rate.cbc : rate.pbc;
      return std::vector<double>{observed, 1.0 - observed};
    });
  }

  return CausalNetwork::make(std::move(g), std::move(cpts));
}

MGraph cardio_prior() {
  auto edges = baseline_edges();
  auto r_edges = indicator_edges();
  edges.insert(edges.end(), r_edges.begin(), r_edges.end());
  return MGraph::build(node_roles(), edges);
}

SimConfig cardio_config(uint64_t seed) {
  SimConfig cfg{cardio_truth(), {{"pbc", 7500}, {"cbc", 1700}}, {}, seed};
  return cfg;
}

}  // namespace causalnet
