#ifndef CAUSALNET_CARDIO_HPP
#define CAUSALNET_CARDIO_HPP

#include <cstdint>

#include "causalnet/evalsim.hpp"
#include "causalnet/graph.hpp"
#include "causalnet/network.hpp"

namespace causalnet {

// Synthetic two-cohort clinical domain: treatment pathways and late
// cardiovascular outcomes of young breast cancer patients, recorded by a
// population registry (pbc) and a specialist clinic (cbc). Every CPT is
// invented; the constants are tuned to plausible cohort-level rates, not to
// any patient-level data. This model is the default input of the benchmark
// harness.
//
// The cohorts record complementary halves of the domain: tumor variables
// (grade, vascular, ki67, receptors, pT, pN) are absent from the registry
// and mostly present in the clinic, while outcome variables (the cardiac
// risk factors, cardiotoxicity, ischemic_heart_disease, cvds) are recorded
// by the registry only. Missingness is cohort-driven, so every indicator
// hangs off the cohort node.

// Full generating network, indicator mechanisms included. Its graph extends
// the clinician baseline with the arcs structure search is expected to
// recover: cohort to the treatment nodes that proxy case severity,
// neoadjuvant-to-adjuvant carry-over, and a direct target_neo -> cvds
// effect not mediated by cardiotoxicity.
CausalNetwork cardio_truth();

// Clinician baseline handed to structure search: the consensus arcs plus
// the cohort-driven missingness arcs. Same nodes and roles as the truth.
MGraph cardio_prior();

// Default simulation over the truth: registry-heavy cohort sizes, seeded.
SimConfig cardio_config(uint64_t seed);

}  // namespace causalnet

#endif  // CAUSALNET_CARDIO_HPP
