#include <doctest.h>

#include <cmath>

#include "trialopt/errors.hpp"
#include "trialopt/mc_oracle.hpp"
#include "trialopt/utility.hpp"

using namespace trialopt;

namespace {

Scenario case_scenario(CostCase c, Perspective p, double lambda = 0.5) {
    return reference_scenario(c, p, PriorKind::Weak, 0.3, lambda);
}

// |analytic - MC| within 3 standard errors
void check_against_mc(const DesignSpec& d, const EffectPair& e, const Scenario& s, std::uint64_t seed) {
    mc::SimConfig cfg;
    cfg.replicates = 1'000'000;
    cfg.seed = seed;
    const auto est = mc::mc_expected_utility(d, e, s, cfg);
    const auto exact = eu_prior_averaged(d, [&] {
        auto t = s;
        t.prior = DiscretePrior::point_mass(e);
        return t;
    }());
    CAPTURE(exact.expected_utility);
    CAPTURE(est.mean);
    CAPTURE(est.std_error);
    CHECK(std::abs(exact.expected_utility - est.mean) <= 3 * est.std_error);
}

}  // namespace

TEST_CASE("classical variance") {
    CHECK(classical_variance({0.3, 0.3, 0}, 0.5, 1, 100) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(classical_variance({0.3, 0.0, 0}, 0.5, 1, 100) == doctest::Approx(0.020225).epsilon(1e-15));
    CHECK(classical_variance({0.3, 0.3, 0.2}, 0.5, 1, 100) == doctest::Approx(0.0202).epsilon(1e-15));
}

TEST_CASE("enrichment special cases") {
    auto s = case_scenario(CostCase::Case2, Perspective::Sponsor);
    s.rewards.NrS = 0;
    auto r = eu_enrichment({0.3, 0.1, 0}, 200, s);
    CHECK(r.expected_utility == -trial_cost(DesignSpec::enrichment(200), s.costs, s.lambda_S));

    s = case_scenario(CostCase::Case2, Perspective::Public);
    r = eu_enrichment({s.rewards.mu_S, 0.0, 0}, 200, s);
    CHECK(r.expected_utility == -r.cost);
    CHECK(r.prob_reject_F == 0.0);
}

TEST_CASE("classical special cases") {
    auto s = case_scenario(CostCase::Case1, Perspective::Sponsor);
    s.rewards.NrF = 0;
    CHECK(eu_classical({0.3, 0.3, 0}, 150, s).expected_utility ==
          -trial_cost(DesignSpec::classical(150), s.costs, s.lambda_S));

    s = case_scenario(CostCase::Case1, Perspective::Public);
    const auto r = eu_classical({0, 0, 0}, 150, s);
    const double expected = -r.cost + s.rewards.NrF * (0 - s.rewards.mu_F) * s.alpha;
    CHECK(r.expected_utility == doctest::Approx(expected).epsilon(1e-13));
    CHECK(r.prob_reject_F == doctest::Approx(0.025).epsilon(1e-14));
}

TEST_CASE("stratified special cases") {
    auto s = case_scenario(CostCase::Case3, Perspective::Sponsor);
    s.rewards.NrS = s.rewards.NrF = 0;
    const auto r = eu_stratified({0.3, 0.15, 0}, 200, 0.01, s);
    CHECK(r.expected_utility == -trial_cost(DesignSpec::stratified(200, 0.01), s.costs, s.lambda_S));
}

TEST_CASE("stratified without the full-population branch reduces to enrichment") {
    // tau = 0 makes the consistency check unreachable, and alpha_S = alpha
    // leaves alpha_F = 0, so only the subgroup test at level alpha remains.
    for (auto persp : {Perspective::Sponsor, Perspective::Public}) {
        for (double lambda : {0.2, 0.5, 0.8}) {
            auto s = case_scenario(CostCase::Case1, persp, lambda);
            s.tau_S = s.tau_Sc = 0.0;
            const EffectPair e{0.3, 0.1, 0};
            const double n = 240;
            const auto strat = eu_stratified(e, n, s.alpha, s);
            const auto enr = eu_enrichment(e, lambda * n, s);
            CHECK(strat.prob_reject_F == 0.0);
            CHECK(strat.prob_reject_S_only == doctest::Approx(enr.prob_reject_S_only).epsilon(1e-9));
            CHECK(strat.expected_reward_S == doctest::Approx(enr.expected_reward_S).epsilon(1e-9));
            CHECK(strat.cost != enr.cost);
        }
    }
}

TEST_CASE("power and utility bookkeeping") {
    const auto s = case_scenario(CostCase::Case1, Perspective::Sponsor);
    const auto r = eu_stratified({0.3, 0.15, 0}, 300, 0.0125, s);
    CHECK(r.power_any == doctest::Approx(r.prob_reject_S_only + r.prob_reject_F));
    CHECK(r.expected_utility ==
          doctest::Approx(r.expected_reward_S + r.expected_reward_F - r.cost));
    CHECK(r.prob_reject_F > 0.0);
    CHECK(r.power_any <= 1.0);
}

TEST_CASE("sponsor reward is never negative") {
    const auto s = case_scenario(CostCase::Case1, Perspective::Sponsor);
    for (double d : {0.0, 0.05, 0.3}) {
        const EffectPair e{d, 0.0, 0.0};
        CHECK(eu_enrichment(e, 100, s).expected_reward_S >= 0.0);
        CHECK(eu_classical(e, 100, s).expected_reward_F >= 0.0);
        const auto st = eu_stratified(e, 100, 0.01, s);
        CHECK(st.expected_reward_S >= 0.0);
        CHECK(st.expected_reward_F >= 0.0);
    }
}

TEST_CASE("prior averaging") {
    auto s = case_scenario(CostCase::Case1, Perspective::Sponsor);
    const EffectPair e{0.3, 0.15, 0};
    s.prior = DiscretePrior::point_mass(e);
    CHECK(eu_prior_averaged(DesignSpec::classical(300), s).expected_utility ==
          eu_classical(e, 300, s).expected_utility);
    CHECK(eu_prior_averaged(DesignSpec::stratified(300, 0.01), s).expected_utility ==
          eu_stratified(e, 300, 0.01, s).expected_utility);
    CHECK(eu_prior_averaged(DesignSpec::no_trial(), s).expected_utility == 0.0);

    // Enrichment only sees delta_S, where weak and strong priors agree.
    for (auto persp : {Perspective::Sponsor, Perspective::Public}) {
        auto weak = reference_scenario(CostCase::Case2, persp, PriorKind::Weak, 0.3, 0.4);
        auto strong = reference_scenario(CostCase::Case2, persp, PriorKind::Strong, 0.3, 0.4);
        for (int n : {50, 173, 800}) {
            const auto a = eu_prior_averaged(DesignSpec::enrichment(n), weak);
            const auto b = eu_prior_averaged(DesignSpec::enrichment(n), strong);
            CHECK(a.expected_utility == b.expected_utility);
            CHECK(a.power_any == b.power_any);
        }
    }

    // weighted sum of per-atom results
    const auto weak = reference_scenario(CostCase::Case1, Perspective::Public, PriorKind::Weak, 0.3, 0.5);
    double sum = 0.0;
    for (const auto& a : weak.prior.atoms()) sum += a.weight * eu_classical(a.effects, 250, weak).expected_utility;
    CHECK(eu_prior_averaged(DesignSpec::classical(250), weak).expected_utility == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("domain errors") {
    const auto s = case_scenario(CostCase::Case1, Perspective::Sponsor);
    CHECK_THROWS_AS(eu_enrichment({0.3, 0, 0}, 0.0, s), DomainError);
    CHECK_THROWS_AS(eu_stratified({0.3, 0, 0}, 100, 0.03, s), DomainError);
}

TEST_CASE("agreement with simulation") {
    check_against_mc(DesignSpec::enrichment(200), {0.3, 0.0, 0},
                     case_scenario(CostCase::Case2, Perspective::Sponsor), 11);
    check_against_mc(DesignSpec::classical(300), {0.3, 0.15, 0},
                     case_scenario(CostCase::Case1, Perspective::Sponsor), 12);
    check_against_mc(DesignSpec::stratified(300, 0.0125), {0.3, 0.3, 0},
                     case_scenario(CostCase::Case1, Perspective::Sponsor), 13);
    check_against_mc(DesignSpec::stratified(180, 0.005), {0.3, 0.05, 0.2},
                     case_scenario(CostCase::Case3, Perspective::Public, 0.3), 14);
    check_against_mc(DesignSpec::classical(120), {0.4, 0.0, 0.5},
                     case_scenario(CostCase::Case2, Perspective::Public, 0.3), 15);
}
