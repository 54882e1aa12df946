#include "trialopt/testing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "trialopt/errors.hpp"

namespace trialopt::testing {

using numerics::kInf;

namespace {

// Correlations this close to one are treated as nested hypotheses.
constexpr double kNestedCorrelation = 1.0 - 1e-9;
constexpr double kLevelTolerance = 1e-13;

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

double critical_value(double level) {
    if (!(level > 0.0)) return kInf;
    if (level >= 1.0) return -kInf;
    return -numerics::std_normal_quantile(level);
}

double null_union_probability(double alpha_S, double alpha_F, double lambda_S) {
    const double rho = std::sqrt(lambda_S);
    return alpha_S + alpha_F -
           numerics::bivariate_upper_orthant(critical_value(alpha_S), critical_value(alpha_F), rho);
}

double alpha_F_given_alpha_S(double alpha_S, double lambda_S, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("alpha must lie in (0, 0.5)");
    if (!(alpha_S >= 0.0 && alpha_S <= alpha)) throw DomainError("alpha_S must lie in [0, alpha]");
    if (!(lambda_S > 0.0 && lambda_S <= 1.0)) throw DomainError("lambda_S must lie in (0, 1)");

    if (alpha_S == 0.0) return alpha;
    // H_S and H_F coincide as the correlation approaches one; the union event
    // is then driven by the larger level alone.
    if (std::sqrt(lambda_S) > kNestedCorrelation) return alpha;
    if (alpha_S == alpha) return 0.0;

    auto excess = [&](double alpha_F) {
        return null_union_probability(alpha_S, alpha_F, lambda_S) - alpha;
    };
    return numerics::find_root(excess, {0.0, alpha}, kLevelTolerance);
}

StratifiedTestParams StratifiedTestParams::from_scenario(const Scenario& s, double alpha_S,
                                                         bool with_floor) {
    StratifiedTestParams p;
    p.alpha = s.alpha;
    p.alpha_S = alpha_S;
    p.alpha_F = alpha_F_given_alpha_S(alpha_S, s.lambda_S, s.alpha);
    p.tau_S = s.tau_S;
    p.tau_Sc = s.tau_Sc;
    p.lambda_S = s.lambda_S;
    if (with_floor) p.floor = EstimateFloor{s.rewards.mu_S, s.rewards.mu_F};
    return p;
}

void StratifiedTestParams::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw DomainError("alpha must lie in (0, 0.5)");
    if (!(alpha_S >= 0.0 && alpha_S <= alpha)) throw DomainError("alpha_S must lie in [0, alpha]");
    if (!(alpha_F >= 0.0 && alpha_F <= alpha)) throw DomainError("alpha_F must lie in [0, alpha]");
    if (alpha_S + alpha_F < alpha - 1e-9) {
        throw DomainError("alpha_S + alpha_F must be at least alpha");
    }
    if (!in_unit(tau_S) || !in_unit(tau_Sc)) throw DomainError("tau thresholds must lie in [0, 1]");
    if (!(lambda_S > 0.0 && lambda_S < 1.0)) throw DomainError("lambda_S must lie in (0, 1)");
}

Rejection reject_from_statistics(double T_S, double T_Sc, double T_F,
                                 const StratifiedTestParams& params) {
    const bool intersection =
        T_S >= critical_value(params.alpha_S) || T_F >= critical_value(params.alpha_F);
    const double c_alpha = critical_value(params.alpha);
    const bool consistent =
        T_S >= critical_value(params.tau_S) && T_Sc >= critical_value(params.tau_Sc);
    return {.S = intersection && T_S >= c_alpha,
            .F = intersection && T_F >= c_alpha && consistent};
}

Rejection reject_stratified(double z_S, double z_Sc, const StratifiedTestParams& params,
                            const EffectPair& effects, double n, double sigma) {
    const double lambda = params.lambda_S;
    const double se_S = std::sqrt(2.0 * sigma * sigma / (lambda * n));
    const double se_Sc = std::sqrt(2.0 * sigma * sigma / ((1.0 - lambda) * n));
    const double T_S = effects.delta_S / se_S + z_S;
    const double T_Sc = effects.delta_Sc / se_Sc + z_Sc;
    const double T_F = std::sqrt(lambda) * T_S + std::sqrt(1.0 - lambda) * T_Sc;
    return reject_from_statistics(T_S, T_Sc, T_F, params);
}

bool RegionSlice::contains(double z_Sc) const {
    return std::any_of(intervals.begin(), intervals.end(),
                       [z_Sc](const Interval& iv) { return iv.contains(z_Sc); });
}

StratifiedRegions::StratifiedRegions(const StratifiedTestParams& params, const EffectPair& effects,
                                     double n, double sigma)
    : params_(params), effects_(effects) {
    const double lambda = params.lambda_S;
    se_S_ = std::sqrt(2.0 * sigma * sigma / (lambda * n));
    se_Sc_ = std::sqrt(2.0 * sigma * sigma / ((1.0 - lambda) * n));
    drift_S_ = effects.delta_S / se_S_;
    drift_Sc_ = effects.delta_Sc / se_Sc_;

    c_alpha_ = critical_value(params.alpha);
    c_alpha_S_ = critical_value(params.alpha_S);
    c_alpha_F_ = critical_value(params.alpha_F);
    c_tau_S_ = critical_value(params.tau_S);
    c_tau_Sc_ = critical_value(params.tau_Sc);

    line_alpha_ = full_population_line(c_alpha_);
    line_alpha_F_ = full_population_line(c_alpha_F_);
    tau_Sc_bound_ = c_tau_Sc_ - drift_Sc_;
    if (params.floor) {
        // est_F = sqrt(2 sigma^2 / n) T_F, so the floor is a T_F threshold.
        const double se_F = std::sqrt(2.0 * sigma * sigma / n);
        line_floor_F_ = full_population_line(params.floor->mu_F / se_F);
        floor_S_z_ = (params.floor->mu_S - effects.delta_S) / se_S_;
    } else {
        line_floor_F_ = {-kInf, 0.0};
        floor_S_z_ = -kInf;
    }
}

StratifiedRegions::Line StratifiedRegions::full_population_line(double critical) const {
    const double rl = std::sqrt(params_.lambda_S);
    const double rlc = std::sqrt(1.0 - params_.lambda_S);
    if (!std::isfinite(critical)) return {critical, 0.0};
    return {(critical - rl * drift_S_) / rlc - drift_Sc_, -rl / rlc};
}

RegionSlice StratifiedRegions::slice(Region region, double z_S) const {
    RegionSlice out;
    const double T_S = z_S + drift_S_;

    if (region == Region::FullPopulation) {
        if (T_S < c_tau_S_) return out;
        double lower = std::max(line_alpha_.at(z_S), tau_Sc_bound_);
        if (T_S < c_alpha_S_) lower = std::max(lower, line_alpha_F_.at(z_S));
        lower = std::max(lower, line_floor_F_.at(z_S));
        if (lower < kInf) out.intervals.push_back({lower, kInf});
        return out;
    }

    if (T_S < c_alpha_) return out;
    if (params_.floor && !(z_S > floor_S_z_)) return out;
    const double lower = T_S >= c_alpha_S_ ? -kInf : line_alpha_F_.at(z_S);
    const double upper =
        T_S >= c_tau_S_ ? std::max(line_alpha_.at(z_S), tau_Sc_bound_) : kInf;
    if (lower < upper) out.intervals.push_back({lower, upper});
    assert(out.intervals.size() <= 3);
    return out;
}

std::vector<double> StratifiedRegions::breakpoints() const {
    std::vector<double> points;
    auto add = [&points](double z) {
        if (std::isfinite(z)) points.push_back(z);
    };
    add(c_alpha_ - drift_S_);
    add(c_alpha_S_ - drift_S_);
    add(c_tau_S_ - drift_S_);
    add(floor_S_z_);
    if (std::isfinite(tau_Sc_bound_)) {
        for (const Line& line : {line_alpha_, line_alpha_F_, line_floor_F_}) {
            if (std::isfinite(line.offset) && line.slope != 0.0) {
                add((tau_Sc_bound_ - line.offset) / line.slope);
            }
        }
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    return points;
}

RegionSlice region_slices(Region region, double z_S, const StratifiedTestParams& params,
                          const EffectPair& effects, double n, double sigma) {
    return StratifiedRegions(params, effects, n, sigma).slice(region, z_S);
}

}  // namespace trialopt::testing
