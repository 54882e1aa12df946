#include "trialopt/mc_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>
#include <vector>

#include "trialopt/errors.hpp"
#include "trialopt/numerics.hpp"

namespace trialopt::mc {

namespace {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGoldenGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

Xoshiro256 Xoshiro256::for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Xoshiro256(seed ^ (kGoldenGamma * (stream + 1)));
}

Xoshiro256::result_type Xoshiro256::operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

TrialSetup::TrialSetup(const DesignSpec& d, const Scenario& s) : design(d), scenario(s) {
    scenario.validate();
    design.validate(scenario.n_min, scenario.alpha);
    cost = trial_cost(design, scenario.costs, scenario.lambda_S);
    if (design.kind == DesignKind::Stratified) {
        params = testing::StratifiedTestParams::from_scenario(scenario, design.alpha_S, false);
    }
}

namespace {

struct Draws {
    Xoshiro256& rng;
    std::normal_distribution<double> normal{0.0, 1.0};

    double z() { return normal(rng); }
    int binomial(int n, double p) { return std::binomial_distribution<int>(n, p)(rng); }
};

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

TrialOutcome simulate_enrichment(const TrialSetup& t, const EffectPair& e, Draws& draw) {
    const auto& s = t.scenario;
    const double sd = std::sqrt(2.0 * s.sigma * s.sigma / t.design.n);
    const double est = e.delta_S + sd * draw.z();
    TrialOutcome out;
    out.reject_S = est / sd >= testing::critical_value(s.alpha);
    if (out.reject_S) {
        const double gain = s.rewards.perspective == Perspective::Sponsor
                                ? positive_part(est - s.rewards.mu_S)
                                : e.delta_S - s.rewards.mu_S;
        out.utility = s.lambda_S * s.rewards.NrS * gain;
    }
    out.utility -= t.cost;
    return out;
}

// Each arm recruits n patients from the full population; membership in S
// is Bernoulli(lambda_S) per patient. Given the counts, the arm mean is
// normal, which is the same law as drawing each response individually.
TrialOutcome simulate_classical(const TrialSetup& t, const EffectPair& e, Draws& draw) {
    const auto& s = t.scenario;
    const int n = t.design.n;
    const double theta_T_S = e.prognostic_offset + e.delta_S;
    const double theta_T_Sc = e.delta_Sc;
    const double theta_C_S = e.prognostic_offset;
    const double theta_C_Sc = 0.0;
    const double arm_sd = s.sigma / std::sqrt(static_cast<double>(n));

    const int k_T = draw.binomial(n, s.lambda_S);
    const int k_C = draw.binomial(n, s.lambda_S);
    const double mean_T = (k_T * theta_T_S + (n - k_T) * theta_T_Sc) / n + arm_sd * draw.z();
    const double mean_C = (k_C * theta_C_S + (n - k_C) * theta_C_Sc) / n + arm_sd * draw.z();
    const double est = mean_T - mean_C;

    // Known-variance z-test using the mixture variance.
    const double theta_diff_T = theta_T_S - theta_T_Sc;
    const double theta_diff_C = theta_C_S - theta_C_Sc;
    const double var = (2.0 * s.sigma * s.sigma +
                        s.lambda_S * (1.0 - s.lambda_S) *
                            (theta_diff_T * theta_diff_T + theta_diff_C * theta_diff_C)) /
                       n;

    TrialOutcome out;
    out.reject_F = est / std::sqrt(var) >= testing::critical_value(s.alpha);
    if (out.reject_F) {
        const double delta_F = s.lambda_S * e.delta_S + (1.0 - s.lambda_S) * e.delta_Sc;
        const double gain = s.rewards.perspective == Perspective::Sponsor
                                ? positive_part(est - s.rewards.mu_F)
                                : delta_F - s.rewards.mu_F;
        out.utility = s.rewards.NrF * gain;
    }
    out.utility -= t.cost;
    return out;
}

TrialOutcome simulate_stratified(const TrialSetup& t, const EffectPair& e, StrataMode mode,
                                 Draws& draw) {
    const auto& s = t.scenario;
    const int n = t.design.n;
    const double lambda = s.lambda_S;
    const double var_unit = s.sigma * s.sigma;

    double var_S, var_Sc;
    if (mode == StrataMode::FixedProportional) {
        var_S = 2.0 * var_unit / (lambda * n);
        var_Sc = 2.0 * var_unit / ((1.0 - lambda) * n);
    } else {
        // Both strata must be non-empty in both arms; redraw otherwise.
        int k_T, k_C;
        do {
            k_T = draw.binomial(n, lambda);
            k_C = draw.binomial(n, lambda);
        } while (k_T == 0 || k_C == 0 || k_T == n || k_C == n);
        var_S = var_unit / k_T + var_unit / k_C;
        var_Sc = var_unit / (n - k_T) + var_unit / (n - k_C);
    }
    const double sd_S = std::sqrt(var_S);
    const double sd_Sc = std::sqrt(var_Sc);
    const double est_S = e.delta_S + sd_S * draw.z();
    const double est_Sc = e.delta_Sc + sd_Sc * draw.z();
    const double est_F = lambda * est_S + (1.0 - lambda) * est_Sc;
    const double sd_F = std::sqrt(lambda * lambda * var_S + (1.0 - lambda) * (1.0 - lambda) * var_Sc);

    const auto rej = testing::reject_from_statistics(est_S / sd_S, est_Sc / sd_Sc, est_F / sd_F, t.params);
    TrialOutcome out{0.0, rej.S, rej.F};
    const bool sponsor = s.rewards.perspective == Perspective::Sponsor;
    if (rej.F) {
        const double delta_F = lambda * e.delta_S + (1.0 - lambda) * e.delta_Sc;
        out.utility = s.rewards.NrF * (sponsor ? positive_part(est_F - s.rewards.mu_F)
                                               : delta_F - s.rewards.mu_F);
    } else if (rej.S) {
        out.utility = lambda * s.rewards.NrS * (sponsor ? positive_part(est_S - s.rewards.mu_S)
                                                        : e.delta_S - s.rewards.mu_S);
    }
    out.utility -= t.cost;
    return out;
}

TrialOutcome simulate_with(const TrialSetup& t, const EffectPair& e, StrataMode mode, Draws& draw) {
    switch (t.design.kind) {
        case DesignKind::Enrichment: return simulate_enrichment(t, e, draw);
        case DesignKind::Classical: return simulate_classical(t, e, draw);
        case DesignKind::Stratified: return simulate_stratified(t, e, mode, draw);
        case DesignKind::NoTrial: break;
    }
    return {};
}

// Welford accumulator; merge() is Chan's pairwise update.
struct Moments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }

    void merge(const Moments& o) {
        if (o.count == 0) return;
        if (count == 0) {
            *this = o;
            return;
        }
        const double n1 = static_cast<double>(count);
        const double n2 = static_cast<double>(o.count);
        const double d = o.mean - mean;
        const double total = n1 + n2;
        mean += d * n2 / total;
        m2 += o.m2 + d * d * n1 * n2 / total;
        count += o.count;
    }

    McEstimate estimate() const {
        McEstimate e{mean, 0.0, count};
        if (count > 1) e.std_error = std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
        return e;
    }
};

struct BlockResult {
    Moments utility, reject_S_only, reject_F, any;
};

}  // namespace

TrialOutcome simulate_trial(const TrialSetup& setup, const EffectPair& effects, StrataMode mode,
                            Xoshiro256& rng) {
    Draws draw{rng};
    return simulate_with(setup, effects, mode, draw);
}

McSummary mc_simulate(const DesignSpec& design, const DiscretePrior& prior, const Scenario& scenario,
                      const SimConfig& config) {
    if (config.replicates < 1) throw DomainError("sim.replicates must be >= 1");
    McSummary summary;
    if (!design.is_trial()) {
        // No trial: utility and all rejection indicators are identically zero.
        const McEstimate zero{0.0, 0.0, config.replicates};
        return {zero, zero, zero, zero};
    }
    const TrialSetup setup(design, scenario);

    std::vector<double> cumulative;
    for (const auto& atom : prior.atoms()) {
        cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + atom.weight);
    }

    const std::uint64_t block_size = SimConfig::kBlockSize;
    const std::uint64_t blocks = (config.replicates + block_size - 1) / block_size;
    std::vector<BlockResult> results(blocks);

    auto run_block = [&](std::uint64_t b) {
        auto rng = Xoshiro256::for_stream(config.seed, b);
        Draws draw{rng};
        const std::uint64_t begin = b * block_size;
        const std::uint64_t end = std::min(config.replicates, begin + block_size);
        BlockResult& r = results[b];
        for (std::uint64_t i = begin; i < end; ++i) {
            std::size_t atom = 0;
            if (prior.size() > 1) {
                const double u = rng.uniform() * cumulative.back();
                atom = static_cast<std::size_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                atom = std::min(atom, prior.size() - 1);
            }
            const auto out = simulate_with(setup, prior.atoms()[atom].effects, config.strata_mode, draw);
            r.utility.add(out.utility);
            r.reject_S_only.add(out.reject_S && !out.reject_F ? 1.0 : 0.0);
            r.reject_F.add(out.reject_F ? 1.0 : 0.0);
            r.any.add(out.reject_S || out.reject_F ? 1.0 : 0.0);
        }
    };

    const auto workers = static_cast<std::uint64_t>(std::clamp<std::int64_t>(
        config.jobs, 1, static_cast<std::int64_t>(blocks)));
    if (workers <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        for (std::uint64_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::uint64_t b = next++; b < blocks; b = next++) run_block(b);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    BlockResult total;
    for (const auto& r : results) {
        total.utility.merge(r.utility);
        total.reject_S_only.merge(r.reject_S_only);
        total.reject_F.merge(r.reject_F);
        total.any.merge(r.any);
    }
    summary.utility = total.utility.estimate();
    summary.reject_S_only = total.reject_S_only.estimate();
    summary.reject_F = total.reject_F.estimate();
    summary.any_rejection = total.any.estimate();
    return summary;
}

McEstimate mc_expected_utility(const DesignSpec& design, const DiscretePrior& prior,
                               const Scenario& scenario, const SimConfig& config) {
    return mc_simulate(design, prior, scenario, config).utility;
}

McEstimate mc_expected_utility(const DesignSpec& design, const EffectPair& effects,
                               const Scenario& scenario, const SimConfig& config) {
    return mc_expected_utility(design, DiscretePrior::point_mass(effects), scenario, config);
}

McEstimate mc_fwer(const DesignSpec& design, const Scenario& scenario, const EffectPair& null_effects,
                   const SimConfig& config) {
    null_effects.validate();
    if (null_effects.delta_S > 0.0 || pooled_effect(null_effects, scenario.lambda_S) > 0.0) {
        throw DomainError("mc_fwer: effects must satisfy delta_S <= 0 and delta_F <= 0");
    }
    return mc_simulate(design, DiscretePrior::point_mass(null_effects), scenario, config).any_rejection;
}

}  // namespace trialopt::mc
