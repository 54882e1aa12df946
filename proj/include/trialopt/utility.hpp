#pragma once
// Expected utility of a design given the true effects, and its average over
// a discrete prior.

#include "trialopt/model.hpp"
#include "trialopt/testing.hpp"

namespace trialopt {

struct EvaluationResult {
    double expected_utility = 0.0;
    double prob_reject_S_only = 0.0;  // H_S rejected, H_F not
    double prob_reject_F = 0.0;       // H_F rejected (approval in the full population)
    double power_any = 0.0;
    double expected_reward_S = 0.0;   // reward from subgroup-only approval
    double expected_reward_F = 0.0;   // reward from full-population approval
    double cost = 0.0;
};

// Variance of the unstratified mean difference when trial subjects are a
// random mixture of S and S' patients:
//   (2 sigma^2 + lambda (1 - lambda) (dT^2 + dC^2)) / n
// with dT = offset + delta_S - delta_Sc and dC = offset the between-subgroup
// mean differences in the treatment and control arms.
double classical_variance(const EffectPair& effects, double lambda_S, double sigma, double n);

// Per-effect evaluations. n is continuous so the optimizer can refine it.
EvaluationResult eu_enrichment(const EffectPair& effects, double n, const Scenario& scenario);
EvaluationResult eu_classical(const EffectPair& effects, double n, const Scenario& scenario);

// Stratified design. The level pair and thresholds come from params (with
// params.floor ignored; the sponsor floors are taken from the scenario).
// Throws NumericError if the outer quadrature does not converge.
EvaluationResult eu_stratified(const EffectPair& effects, double n,
                               const testing::StratifiedTestParams& params,
                               const Scenario& scenario);
EvaluationResult eu_stratified(const EffectPair& effects, double n, double alpha_S,
                               const Scenario& scenario);

// Prior-averaged expected utility for a design. NoTrial is the all-zero result.
EvaluationResult eu_prior_averaged(const DesignSpec& design, const Scenario& scenario);

// Continuous-n variant used by the optimizer. alpha_S is ignored unless the
// design is stratified.
EvaluationResult eu_prior_averaged(DesignKind kind, double n, double alpha_S,
                                   const Scenario& scenario);

// Stratified design with a precomputed level pair, so repeated evaluations
// at different n skip the level-condition solve.
EvaluationResult eu_prior_averaged(double n, const testing::StratifiedTestParams& params,
                                   const Scenario& scenario);

}  // namespace trialopt
