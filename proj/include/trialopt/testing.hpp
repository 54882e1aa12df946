#pragma once
// Multiple testing for the stratified design: the closed weighted test of
// H_S and H_F with consistency thresholds, the level condition that fixes
// alpha_F from alpha_S, and the rejection regions in the (z_S, z_S') plane.
//
// Conventions. z_S and z_S' are independent standard normal noise variables.
// With s_S^2 = 2 sigma^2 / (lambda_S n) and s_S'^2 = 2 sigma^2 / (lambda_S' n)
// the subgroup estimates are
//
//   est_S  = delta_S  + z_S  s_S,        T_S  = est_S  / s_S,
//   est_S' = delta_S' + z_S' s_S',       T_S' = est_S' / s_S',
//
// and the stratified full-population estimate est_F = lambda_S est_S +
// lambda_S' est_S' has variance 2 sigma^2 / n, so its z-statistic is
//
//   T_F = sqrt(lambda_S) T_S + sqrt(lambda_S') T_S'.
//
// Under the global null, Corr(T_S, T_F) = sqrt(lambda_S). One-sided
// p-values are 1 - Phi(T); "p <= level" is T >= Phi^{-1}(1 - level). Every
// threshold is therefore a half-plane in (z_S, z_S'), and for fixed z_S each
// region is a union of intervals in z_S'.

#include <optional>
#include <vector>

#include "trialopt/model.hpp"
#include "trialopt/numerics.hpp"

namespace trialopt::testing {

using numerics::Interval;

// Estimate floors used by the sponsor reward: the positive parts
// (est_F - mu_F)^+ and (est_S - mu_S)^+ vanish below them.
struct EstimateFloor {
    double mu_S = 0.0;
    double mu_F = 0.0;
};

struct StratifiedTestParams {
    double alpha = 0.025;
    double alpha_S = 0.0;
    double alpha_F = 0.025;
    double tau_S = 0.3;
    double tau_Sc = 0.3;
    double lambda_S = 0.5;
    std::optional<EstimateFloor> floor;

    // Builds the parameters for a scenario, solving the level condition for
    // alpha_F. The estimate floor is set from the rewards when with_floor.
    static StratifiedTestParams from_scenario(const Scenario& s, double alpha_S, bool with_floor);

    void validate() const;
};

// z-scale threshold Phi^{-1}(1 - level); +inf at level 0 and -inf at level >= 1.
double critical_value(double level);

// Largest alpha_F with P(p_S <= alpha_S or p_F <= alpha_F) = alpha under the
// global null, where Corr(T_S, T_F) = sqrt(lambda_S).
double alpha_F_given_alpha_S(double alpha_S, double lambda_S, double alpha);

// Null probability of {p_S <= alpha_S or p_F <= alpha_F}.
double null_union_probability(double alpha_S, double alpha_F, double lambda_S);

struct Rejection {
    bool S = false;
    bool F = false;
    friend bool operator==(const Rejection&, const Rejection&) = default;
};

// Modified closed test on the noise variables (z_S, z_Sc).
Rejection reject_stratified(double z_S, double z_Sc, const StratifiedTestParams& params,
                            const EffectPair& effects, double n, double sigma);

// Same rule applied directly to test statistics.
Rejection reject_from_statistics(double T_S, double T_Sc, double T_F,
                                 const StratifiedTestParams& params);

enum class Region {
    FullPopulation,  // A_F: H_F rejected (and est_F > mu_F when a floor is set)
    SubgroupOnly,    // A_S: H_S rejected, H_F not (and est_S > mu_S when a floor is set)
};

// Sorted, disjoint z_S' intervals. Intervals are half-open [lo, hi).
struct RegionSlice {
    std::vector<Interval> intervals;

    bool contains(double z_Sc) const;
    bool empty() const noexcept { return intervals.empty(); }
};

// Precomputed geometry of the two rejection regions for one effect pair and
// sample size. Cheap to query slice-by-slice inside the outer quadrature.
class StratifiedRegions {
public:
    StratifiedRegions(const StratifiedTestParams& params, const EffectPair& effects, double n,
                      double sigma);

    RegionSlice slice(Region region, double z_S) const;

    // z_S values where a slice changes shape: threshold crossings of T_S and
    // intersections of the z_S'-boundary lines. Sorted, finite only.
    std::vector<double> breakpoints() const;

    double se_S() const noexcept { return se_S_; }
    double se_Sc() const noexcept { return se_Sc_; }

private:
    // z_S' boundary of the form offset + slope * z_S (offset may be +-inf).
    struct Line {
        double offset;
        double slope;
        double at(double z_S) const { return std::isfinite(offset) ? offset + slope * z_S : offset; }
    };

    Line full_population_line(double critical) const;

    StratifiedTestParams params_;
    EffectPair effects_;
    double se_S_, se_Sc_;
    double drift_S_, drift_Sc_;
    double c_alpha_, c_alpha_S_, c_alpha_F_, c_tau_S_, c_tau_Sc_;
    Line line_alpha_, line_alpha_F_, line_floor_F_;
    double tau_Sc_bound_;    // z_S' >= this for the S' consistency check
    double floor_S_z_;       // z_S > this for est_S > mu_S (or -inf)
};

RegionSlice region_slices(Region region, double z_S, const StratifiedTestParams& params,
                          const EffectPair& effects, double n, double sigma);

}  // namespace trialopt::testing
