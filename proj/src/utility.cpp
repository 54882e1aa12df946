#include "trialopt/utility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "trialopt/errors.hpp"
#include "trialopt/numerics.hpp"

namespace trialopt {

using namespace numerics;
using testing::Region;
using testing::StratifiedRegions;
using testing::StratifiedTestParams;

namespace {

constexpr double kQuadratureTolerance = 1e-9;

// Sponsor reward for a normally distributed estimate N(delta, var) that is
// paid (estimate - mu) whenever estimate / sd >= c and estimate > mu.
double truncated_normal_reward(double delta, double var, double mu, double c) {
    const double sd = std::sqrt(var);
    const double kappa = (std::max(c * sd, mu) - delta) / sd;
    return std_normal_sf(kappa) * (delta - mu) + sd * std_normal_pdf(kappa);
}

EvaluationResult finish(EvaluationResult r) {
    r.power_any = r.prob_reject_S_only + r.prob_reject_F;
    r.expected_utility = r.expected_reward_S + r.expected_reward_F - r.cost;
    return r;
}

void require_n(double n) {
    if (!(n >= 1.0) || !std::isfinite(n)) throw DomainError("sample size must be >= 1");
}

}  // namespace

double classical_variance(const EffectPair& effects, double lambda_S, double sigma, double n) {
    const double d_treatment = effects.prognostic_offset + effects.delta_S - effects.delta_Sc;
    const double d_control = effects.prognostic_offset;
    return (2.0 * sigma * sigma +
            lambda_S * (1.0 - lambda_S) * (d_treatment * d_treatment + d_control * d_control)) /
           n;
}

EvaluationResult eu_enrichment(const EffectPair& effects, double n, const Scenario& s) {
    require_n(n);
    const double var = 2.0 * s.sigma * s.sigma / n;
    const double c = testing::critical_value(s.alpha);
    const double delta = effects.delta_S;

    EvaluationResult r;
    r.cost = trial_cost(DesignKind::Enrichment, n, s.costs, s.lambda_S);
    r.prob_reject_S_only = std_normal_sf(c - delta / std::sqrt(var));
    const double scale = s.lambda_S * s.rewards.NrS;
    if (s.rewards.perspective == Perspective::Sponsor) {
        r.expected_reward_S = scale * truncated_normal_reward(delta, var, s.rewards.mu_S, c);
    } else {
        r.expected_reward_S = scale * (delta - s.rewards.mu_S) * r.prob_reject_S_only;
    }
    return finish(r);
}

EvaluationResult eu_classical(const EffectPair& effects, double n, const Scenario& s) {
    require_n(n);
    const double var = classical_variance(effects, s.lambda_S, s.sigma, n);
    const double c = testing::critical_value(s.alpha);
    const double delta = pooled_effect(effects, s.lambda_S);

    EvaluationResult r;
    r.cost = trial_cost(DesignKind::Classical, n, s.costs, s.lambda_S);
    r.prob_reject_F = std_normal_sf(c - delta / std::sqrt(var));
    if (s.rewards.perspective == Perspective::Sponsor) {
        r.expected_reward_F = s.rewards.NrF * truncated_normal_reward(delta, var, s.rewards.mu_F, c);
    } else {
        r.expected_reward_F = s.rewards.NrF * (delta - s.rewards.mu_F) * r.prob_reject_F;
    }
    return finish(r);
}

EvaluationResult eu_stratified(const EffectPair& effects, double n,
                               const StratifiedTestParams& params, const Scenario& s) {
    require_n(n);
    const bool sponsor = s.rewards.perspective == Perspective::Sponsor;

    StratifiedTestParams plain = params;
    plain.floor.reset();
    StratifiedTestParams floored = params;
    floored.floor = testing::EstimateFloor{s.rewards.mu_S, s.rewards.mu_F};

    const StratifiedRegions prob_regions(plain, effects, n, s.sigma);
    const StratifiedRegions reward_regions(floored, effects, n, s.sigma);

    std::vector<double> breaks = prob_regions.breakpoints();
    if (sponsor) {
        const auto more = reward_regions.breakpoints();
        breaks.insert(breaks.end(), more.begin(), more.end());
    }

    const double lambda = s.lambda_S;
    const double se_S = prob_regions.se_S();
    const double se_Sc = prob_regions.se_Sc();
    const double mu_S = s.rewards.mu_S;
    const double mu_F = s.rewards.mu_F;

    // Components: P(psi_F), P(psi_S and not psi_F), and for the sponsor
    // E[psi_F (est_F - mu_F)^+], E[(1 - psi_F) psi_S (est_S - mu_S)^+].
    // For fixed z_S the inner z_S' integrals are closed-form segment sums.
    auto integrand = [&](double z_S) {
        std::array<double, 4> v{};
        const double weight = std_normal_pdf(z_S);
        if (weight == 0.0) return v;
        for (const auto& iv : prob_regions.slice(Region::FullPopulation, z_S).intervals) {
            v[0] += std_normal_mass(iv.lo, iv.hi);
        }
        for (const auto& iv : prob_regions.slice(Region::SubgroupOnly, z_S).intervals) {
            v[1] += std_normal_mass(iv.lo, iv.hi);
        }
        if (sponsor) {
            const double est_S = effects.delta_S + z_S * se_S;
            const double c0_F = lambda * est_S + (1.0 - lambda) * effects.delta_Sc - mu_F;
            const double c1_F = (1.0 - lambda) * se_Sc;
            for (const auto& iv : reward_regions.slice(Region::FullPopulation, z_S).intervals) {
                v[2] += linear_gaussian_segment(c0_F, c1_F, iv);
            }
            for (const auto& iv : reward_regions.slice(Region::SubgroupOnly, z_S).intervals) {
                v[3] += linear_gaussian_segment(est_S - mu_S, 0.0, iv);
            }
        }
        for (double& x : v) x *= weight;
        return v;
    };

    QuadratureOptions opts;
    opts.abs_tol = kQuadratureTolerance;
    const auto integrals = integrate_vector<4>(integrand, Interval{}, breaks, opts);

    EvaluationResult r;
    r.cost = trial_cost(DesignKind::Stratified, n, s.costs, s.lambda_S);
    r.prob_reject_F = std::clamp(integrals[0], 0.0, 1.0);
    r.prob_reject_S_only = std::clamp(integrals[1], 0.0, 1.0 - r.prob_reject_F);
    if (sponsor) {
        r.expected_reward_F = s.rewards.NrF * integrals[2];
        r.expected_reward_S = lambda * s.rewards.NrS * integrals[3];
    } else {
        r.expected_reward_F = s.rewards.NrF * (pooled_effect(effects, lambda) - mu_F) * r.prob_reject_F;
        r.expected_reward_S = lambda * s.rewards.NrS * (effects.delta_S - mu_S) * r.prob_reject_S_only;
    }
    return finish(r);
}

EvaluationResult eu_stratified(const EffectPair& effects, double n, double alpha_S,
                               const Scenario& s) {
    return eu_stratified(effects, n, StratifiedTestParams::from_scenario(s, alpha_S, false), s);
}

namespace {

struct WeightedEffects {
    EffectPair effects;
    double weight;
    double compensation;
};

// Enrichment only sees delta_S, so atoms sharing it are merged before
// evaluation; the merged weights use compensated summation. This makes the
// result depend on the prior only through the delta_S marginal.
std::vector<WeightedEffects> group_atoms(const DiscretePrior& prior, DesignKind kind) {
    std::vector<WeightedEffects> groups;
    for (const auto& atom : prior.atoms()) {
        EffectPair key = atom.effects;
        if (kind == DesignKind::Enrichment) key = {atom.effects.delta_S, atom.effects.delta_S, 0.0};
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const WeightedEffects& g) { return g.effects == key; });
        if (it == groups.end()) {
            groups.push_back({key, atom.weight, 0.0});
            continue;
        }
        // Neumaier summation.
        const double t = it->weight + atom.weight;
        if (std::abs(it->weight) >= std::abs(atom.weight)) {
            it->compensation += (it->weight - t) + atom.weight;
        } else {
            it->compensation += (atom.weight - t) + it->weight;
        }
        it->weight = t;
    }
    for (auto& g : groups) {
        g.weight += g.compensation;
        g.compensation = 0.0;
    }
    return groups;
}

void accumulate(EvaluationResult& total, const EvaluationResult& r, double w) {
    total.expected_utility += w * r.expected_utility;
    total.prob_reject_S_only += w * r.prob_reject_S_only;
    total.prob_reject_F += w * r.prob_reject_F;
    total.power_any += w * r.power_any;
    total.expected_reward_S += w * r.expected_reward_S;
    total.expected_reward_F += w * r.expected_reward_F;
    total.cost += w * r.cost;
}

}  // namespace

EvaluationResult eu_prior_averaged(DesignKind kind, double n, double alpha_S, const Scenario& s) {
    EvaluationResult total;
    if (kind == DesignKind::NoTrial) return total;

    if (kind == DesignKind::Stratified) {
        return eu_prior_averaged(n, StratifiedTestParams::from_scenario(s, alpha_S, false), s);
    }
    for (const auto& group : group_atoms(s.prior, kind)) {
        EvaluationResult r;
        switch (kind) {
            case DesignKind::Classical: r = eu_classical(group.effects, n, s); break;
            case DesignKind::Enrichment: r = eu_enrichment(group.effects, n, s); break;
            default: break;
        }
        accumulate(total, r, group.weight);
    }
    return total;
}

EvaluationResult eu_prior_averaged(double n, const StratifiedTestParams& params,
                                   const Scenario& s) {
    EvaluationResult total;
    for (const auto& group : group_atoms(s.prior, DesignKind::Stratified)) {
        accumulate(total, eu_stratified(group.effects, n, params, s), group.weight);
    }
    return total;
}

EvaluationResult eu_prior_averaged(const DesignSpec& design, const Scenario& s) {
    design.validate(s.n_min, s.alpha);
    return eu_prior_averaged(design.kind, static_cast<double>(design.n), design.alpha_S, s);
}

}  // namespace trialopt
