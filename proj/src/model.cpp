#include "trialopt/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "trialopt/errors.hpp"

namespace trialopt {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void EffectPair::validate() const {
    require(finite(delta_S) && finite(delta_Sc) && finite(prognostic_offset),
            "effect pair: all fields must be finite");
    require(delta_S >= delta_Sc, "effect pair: delta_S must be >= delta_Sc");
}

DiscretePrior::DiscretePrior(std::vector<PriorAtom> atoms) : atoms_(std::move(atoms)) {
    require(!atoms_.empty(), "prior: at least one atom required");
    double total = 0.0;
    for (const auto& atom : atoms_) {
        atom.effects.validate();
        require(finite(atom.weight) && atom.weight >= 0.0, "prior: weights must be nonnegative");
        total += atom.weight;
    }
    require(std::abs(total - 1.0) <= 1e-12, "prior: weights must sum to 1");
}

DiscretePrior DiscretePrior::point_mass(const EffectPair& effects) {
    return DiscretePrior({{effects, 1.0}});
}

DiscretePrior builtin_prior(PriorKind kind, double delta) {
    require(finite(delta) && delta >= 0.0, "prior.delta must be >= 0");
    const double w[2][4] = {{0.2, 0.2, 0.3, 0.3}, {0.2, 0.6, 0.1, 0.1}};
    const auto& weights = w[kind == PriorKind::Weak ? 0 : 1];
    return DiscretePrior({
        {{0.0, 0.0}, weights[0]},
        {{delta, 0.0}, weights[1]},
        {{delta, delta / 2.0}, weights[2]},
        {{delta, delta}, weights[3]},
    });
}

std::string_view to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::NoTrial: return "NoTrial";
        case DesignKind::Classical: return "Classical";
        case DesignKind::Enrichment: return "Enrichment";
        case DesignKind::Stratified: return "Stratified";
    }
    return "?";
}

// Case-insensitive, so config documents may write "stratified".
DesignKind design_kind_from_string(std::string_view name) {
    auto same = [](std::string_view a, std::string_view b) {
        return std::ranges::equal(a, b, [](char x, char y) {
            return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
        });
    };
    for (auto k : {DesignKind::NoTrial, DesignKind::Classical, DesignKind::Enrichment,
                   DesignKind::Stratified}) {
        if (same(name, to_string(k))) return k;
    }
    throw DomainError("unknown design kind '" + std::string(name) + "'");
}

void DesignSpec::validate(int n_min, double alpha) const {
    if (kind == DesignKind::NoTrial) return;
    require(n >= n_min, "design: n must be >= n_min");
    if (kind == DesignKind::Stratified) {
        require(finite(alpha_S) && alpha_S >= 0.0 && alpha_S <= alpha,
                "design: alpha_S must lie in [0, alpha]");
    }
}

void CostStructure::validate() const {
    require(finite(setup) && setup >= 0.0, "cost.setup must be >= 0");
    require(finite(per_patient) && per_patient >= 0.0, "cost.per_patient must be >= 0");
    require(finite(biomarker) && biomarker >= 0.0, "cost.biomarker must be >= 0");
    require(finite(screening) && screening >= 0.0, "cost.screening must be >= 0");
}

std::string_view to_string(Perspective p) {
    return p == Perspective::Sponsor ? "sponsor" : "public";
}

Perspective perspective_from_string(std::string_view name) {
    if (name == "sponsor") return Perspective::Sponsor;
    if (name == "public") return Perspective::Public;
    throw DomainError("unknown perspective '" + std::string(name) + "'");
}

void RewardStructure::validate() const {
    require(finite(NrS) && NrS >= 0.0, "reward.NrS must be >= 0");
    require(finite(NrF) && NrF >= 0.0, "reward.NrF must be >= 0");
    require(finite(mu_S) && mu_S >= 0.0, "reward.mu_S must be >= 0");
    require(finite(mu_F) && mu_F >= 0.0, "reward.mu_F must be >= 0");
}

void Scenario::validate() const {
    require(finite(lambda_S) && lambda_S > 0.0 && lambda_S < 1.0, "lambda_S must lie in (0, 1)");
    require(finite(sigma) && sigma > 0.0, "sigma must be > 0");
    require(finite(alpha) && alpha > 0.0 && alpha < 0.5, "alpha must lie in (0, 0.5)");
    require(finite(tau_S) && tau_S >= 0.0 && tau_S <= 1.0, "tau_S must lie in [0, 1]");
    require(finite(tau_Sc) && tau_Sc >= 0.0 && tau_Sc <= 1.0, "tau_Sc must lie in [0, 1]");
    require(n_min >= 1, "n_min must be >= 1");
    costs.validate();
    rewards.validate();
}

double trial_cost(DesignKind kind, double n, const CostStructure& costs, double lambda_S) {
    switch (kind) {
        case DesignKind::NoTrial:
            return 0.0;
        case DesignKind::Classical:
            return costs.setup + 2.0 * n * costs.per_patient;
        case DesignKind::Stratified:
            return costs.setup + costs.biomarker + 2.0 * n * (costs.per_patient + costs.screening);
        case DesignKind::Enrichment:
            require(lambda_S > 0.0, "enrichment cost: lambda_S must be > 0");
            return costs.setup + costs.biomarker +
                   2.0 * n * (costs.per_patient + costs.screening / lambda_S);
    }
    return 0.0;
}

double trial_cost(const DesignSpec& design, const CostStructure& costs, double lambda_S) {
    return trial_cost(design.kind, static_cast<double>(design.n), costs, lambda_S);
}

double pooled_effect(const EffectPair& effects, double lambda_S) {
    return lambda_S * effects.delta_S + (1.0 - lambda_S) * effects.delta_Sc;
}

CostStructure case_costs(CostCase c) {
    CostStructure costs{.setup = 1.0, .per_patient = 0.05, .biomarker = 0.0, .screening = 0.0};
    if (c == CostCase::Case3) {
        costs.biomarker = 10.0;
        costs.screening = 0.005;
    }
    return costs;
}

RewardStructure case_rewards(CostCase c, Perspective perspective) {
    const double nr = c == CostCase::Case1 ? 10000.0 : 1000.0;
    return {.perspective = perspective, .NrS = nr, .NrF = nr, .mu_S = 0.1, .mu_F = 0.1};
}

Scenario reference_scenario(CostCase c, Perspective perspective, PriorKind prior, double delta,
                            double lambda_S) {
    Scenario s;
    s.lambda_S = lambda_S;
    s.costs = case_costs(c);
    s.rewards = case_rewards(c, perspective);
    s.prior = builtin_prior(prior, delta);
    return s;
}

}  // namespace trialopt
