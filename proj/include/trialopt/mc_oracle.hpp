#pragma once
// Monte Carlo simulation of complete trials. Independent of the analytic
// engine except for the shared rejection rule, and used to validate it.
//
// Reproducibility: replicates are cut into fixed blocks of kBlockSize. Block
// b draws from its own xoshiro256** stream whose state is four successive
// SplitMix64 outputs started at seed ^ (golden_gamma * (b + 1)). Block sums
// are merged in block order, so results depend only on (seed, replicates)
// and never on the number of worker threads.

#include <array>
#include <cstdint>
#include <limits>

#include "trialopt/model.hpp"
#include "trialopt/testing.hpp"

namespace trialopt::mc {

// xoshiro256** generator; satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed);
    // Stream for block `stream` of a run seeded with `seed`.
    static Xoshiro256 for_stream(std::uint64_t seed, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

private:
    std::array<std::uint64_t, 4> s_{};
};

enum class StrataMode {
    FixedProportional,  // exactly lambda_S n subgroup patients per arm
    BinomialRandom,     // subgroup counts per arm ~ Binomial(n, lambda_S)
};

enum class Estimand { Utility, RejectionProbs, FWER };

struct SimConfig {
    std::uint64_t replicates = 100000;
    std::uint64_t seed = 20240101;
    StrataMode strata_mode = StrataMode::FixedProportional;
    Estimand estimand = Estimand::Utility;
    int jobs = 1;

    static constexpr std::uint64_t kBlockSize = 1 << 15;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t replicates = 0;
};

struct TrialOutcome {
    double utility = 0.0;
    bool reject_S = false;
    bool reject_F = false;
};

// Everything a single replicate needs that does not change between
// replicates: the design, the scenario and, for stratified designs, the
// level pair solved once up front.
struct TrialSetup {
    DesignSpec design;
    Scenario scenario;
    testing::StratifiedTestParams params;
    double cost = 0.0;

    TrialSetup(const DesignSpec& design, const Scenario& scenario);
};

TrialOutcome simulate_trial(const TrialSetup& setup, const EffectPair& effects, StrataMode mode,
                            Xoshiro256& rng);

struct McSummary {
    McEstimate utility;
    McEstimate reject_S_only;  // H_S rejected and H_F not
    McEstimate reject_F;
    McEstimate any_rejection;
};

// Simulates config.replicates trials. With a multi-atom prior the true
// effects are drawn per replicate according to the weights.
McSummary mc_simulate(const DesignSpec& design, const DiscretePrior& prior,
                      const Scenario& scenario, const SimConfig& config);

McEstimate mc_expected_utility(const DesignSpec& design, const DiscretePrior& prior,
                               const Scenario& scenario, const SimConfig& config);
McEstimate mc_expected_utility(const DesignSpec& design, const EffectPair& effects,
                               const Scenario& scenario, const SimConfig& config);

// Probability of any rejection when both H_S and H_F are true. Throws
// DomainError unless delta_S <= 0 and the pooled effect is <= 0.
McEstimate mc_fwer(const DesignSpec& design, const Scenario& scenario,
                   const EffectPair& null_effects, const SimConfig& config);

}  // namespace trialopt::mc
