#pragma once
// Domain parameters for subgroup trial design: effects, priors, designs,
// costs, rewards and the scenario bundle that ties them together.
//
// Monetary amounts are in MUSD throughout. Effect sizes are in units of the
// outcome standard deviation.

#include <cstddef>
#include <string_view>
#include <vector>

namespace trialopt {

// True treatment effects in the biomarker-positive subgroup S and its
// complement S'. The prognostic offset is the control-arm mean difference
// theta_{C,S} - theta_{C,S'}; it only enters the classical-design variance.
struct EffectPair {
    double delta_S = 0.0;
    double delta_Sc = 0.0;
    double prognostic_offset = 0.0;

    // Throws DomainError unless all fields are finite and delta_S >= delta_Sc.
    void validate() const;

    friend bool operator==(const EffectPair&, const EffectPair&) = default;
};

struct PriorAtom {
    EffectPair effects;
    double weight = 0.0;

    friend bool operator==(const PriorAtom&, const PriorAtom&) = default;
};

// Finite prior over effect pairs. Weights are nonnegative and sum to one
// within 1e-12; construction rejects anything else.
class DiscretePrior {
public:
    explicit DiscretePrior(std::vector<PriorAtom> atoms);

    // Point mass at a single effect pair.
    static DiscretePrior point_mass(const EffectPair& effects);

    const std::vector<PriorAtom>& atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    friend bool operator==(const DiscretePrior&, const DiscretePrior&) = default;

private:
    std::vector<PriorAtom> atoms_;
};

enum class PriorKind { Weak, Strong };

// Four-point priors on (0,0), (d,0), (d,d/2), (d,d).
//   Weak:   0.2, 0.2, 0.3, 0.3
//   Strong: 0.2, 0.6, 0.1, 0.1
DiscretePrior builtin_prior(PriorKind kind, double delta);

// Declaration order is also the tie-break preference order used when two
// designs reach the same expected utility (earlier wins).
enum class DesignKind { NoTrial, Classical, Enrichment, Stratified };

std::string_view to_string(DesignKind kind);
DesignKind design_kind_from_string(std::string_view name);

struct DesignSpec {
    DesignKind kind = DesignKind::NoTrial;
    int n = 0;             // per-group sample size
    double alpha_S = 0.0;  // subgroup level, stratified only

    static DesignSpec no_trial() { return {}; }
    static DesignSpec classical(int n) { return {DesignKind::Classical, n, 0.0}; }
    static DesignSpec enrichment(int n) { return {DesignKind::Enrichment, n, 0.0}; }
    static DesignSpec stratified(int n, double alpha_S) { return {DesignKind::Stratified, n, alpha_S}; }

    bool is_trial() const noexcept { return kind != DesignKind::NoTrial; }

    void validate(int n_min, double alpha) const;

    friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

struct CostStructure {
    double setup = 0.0;
    double per_patient = 0.0;
    double biomarker = 0.0;
    double screening = 0.0;  // per screened patient

    void validate() const;

    friend bool operator==(const CostStructure&, const CostStructure&) = default;
};

enum class Perspective { Sponsor, Public };

std::string_view to_string(Perspective p);
Perspective perspective_from_string(std::string_view name);

// NrS and NrF are the products N*r_S and N*r_F (MUSD per unit effect).
struct RewardStructure {
    Perspective perspective = Perspective::Sponsor;
    double NrS = 0.0;
    double NrF = 0.0;
    double mu_S = 0.0;
    double mu_F = 0.0;

    void validate() const;

    friend bool operator==(const RewardStructure&, const RewardStructure&) = default;
};

struct Scenario {
    double lambda_S = 0.5;
    double sigma = 1.0;
    double alpha = 0.025;
    double tau_S = 0.3;
    double tau_Sc = 0.3;
    int n_min = 50;
    CostStructure costs;
    RewardStructure rewards;
    DiscretePrior prior = builtin_prior(PriorKind::Weak, 0.3);

    double lambda_Sc() const noexcept { return 1.0 - lambda_S; }

    // Throws DomainError naming the offending field.
    void validate() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Cost of running the design. The double overload accepts a continuous
// sample size for the refinement stage of the optimizer.
double trial_cost(const DesignSpec& design, const CostStructure& costs, double lambda_S);
double trial_cost(DesignKind kind, double n, const CostStructure& costs, double lambda_S);

// lambda_S * delta_S + (1 - lambda_S) * delta_Sc
double pooled_effect(const EffectPair& effects, double lambda_S);

// Cost/reward settings used in the worked examples. Case 1 is a large
// market without biomarker costs, Case 2 a small market, Case 3 a small
// market with biomarker development and screening costs.
enum class CostCase { Case1 = 1, Case2 = 2, Case3 = 3 };

CostStructure case_costs(CostCase c);
RewardStructure case_rewards(CostCase c, Perspective perspective);

// Scenario with the worked-example defaults (alpha 0.025, tau 0.3, sigma 1,
// n_min 50, mu 0.1) for the given case, prior and prevalence.
Scenario reference_scenario(CostCase c, Perspective perspective, PriorKind prior, double delta,
                            double lambda_S);

}  // namespace trialopt
