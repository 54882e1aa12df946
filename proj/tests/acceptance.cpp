// Acceptance checks. One line per criterion: PASS/FAIL, label, detail, time.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "trialopt/cli.hpp"
#include "trialopt/mc_oracle.hpp"
#include "trialopt/numerics.hpp"
#include "trialopt/optimizer.hpp"
#include "trialopt/testing.hpp"
#include "trialopt/utility.hpp"

using namespace trialopt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail.clear();
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

struct Criterion {
    const char* label;
    double budget_seconds;
    std::function<Verdict()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const char* name(DesignKind k) {
    switch (k) {
        case DesignKind::NoTrial: return "NoTrial";
        case DesignKind::Classical: return "Classical";
        case DesignKind::Enrichment: return "Enrichment";
        case DesignKind::Stratified: return "Stratified";
    }
    return "?";
}

// Independent union probability: Simpson over T_S of the conditional tail.
double union_oracle(double aS, double aF, double lambda) {
    auto upper = [](double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); };
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); };
    const double a = testing::critical_value(aS), b = testing::critical_value(aF);
    const double r = std::sqrt(lambda), s = std::sqrt(1 - lambda);
    if (!std::isfinite(b)) return b > 0 ? upper(a) : 1.0;
    const double hi = std::isfinite(a) ? a : 12.0;
    auto f = [&](double x) { return phi(x) * upper((b - r * x) / s); };
    const int m = 20000;
    const double lo = -12.0, h = (hi - lo) / m;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return (std::isfinite(a) ? upper(a) : 0.0) + acc * h / 3;
}

Verdict level_condition() {
    Verdict v;
    double worst = 0.0, worst_oracle = 0.0;
    for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        v.require(testing::alpha_F_given_alpha_S(0.0, lambda, 0.025) == 0.025, fmt("alpha_F(0) at %.1f", lambda));
        v.require(testing::alpha_F_given_alpha_S(0.025, lambda, 0.025) == 0.0, fmt("alpha_F(0.025) at %.1f", lambda));
        for (double aS : linspace(0.0, 0.025, 21)) {
            const double aF = testing::alpha_F_given_alpha_S(aS, lambda, 0.025);
            worst = std::max(worst, std::abs(testing::null_union_probability(aS, aF, lambda) - 0.025));
            worst_oracle = std::max(worst_oracle, std::abs(union_oracle(aS, aF, lambda) - 0.025));
        }
    }
    v.require(worst <= 1e-8, fmt("max |union - alpha| = %.2e", worst));
    v.require(worst_oracle <= 1e-8, fmt("independent oracle max dev %.2e", worst_oracle));
    if (v.pass) v.detail = fmt("105 pairs, max |union - 0.025| = %.1e (oracle %.1e), endpoints exact", worst, worst_oracle);
    return v;
}

Verdict orthant_identities() {
    using numerics::bivariate_upper_orthant;
    Verdict v;
    double worst_arcsin = 0.0, worst_factor = 0.0;
    for (double rho : linspace(-1.0, 1.0, 11)) {
        const double exact = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
        worst_arcsin = std::max(worst_arcsin, std::abs(bivariate_upper_orthant(0, 0, rho) - exact));
    }
    for (double h : linspace(-3, 3, 9)) {
        for (double k : linspace(-3, 3, 9)) {
            const double exact = numerics::std_normal_sf(h) * numerics::std_normal_sf(k);
            worst_factor = std::max(worst_factor, std::abs(bivariate_upper_orthant(h, k, 0) - exact));
        }
    }
    v.require(worst_arcsin <= 1e-10, fmt("arcsine identity dev %.2e", worst_arcsin));
    v.require(worst_factor <= 1e-12, fmt("factorization dev %.2e", worst_factor));
    if (v.pass) v.detail = fmt("arcsine dev %.1e over 11 rho, factorization dev %.1e over 9x9", worst_arcsin, worst_factor);
    return v;
}

Verdict oracle_equivalence() {
    Verdict v;
    const double lambdas[] = {0.2, 0.5, 0.8};
    const int ns[] = {100, 300, 800};
    const DesignKind families[] = {DesignKind::Classical, DesignKind::Enrichment, DesignKind::Stratified};
    double worst_z = 0.0;
    int cells = 0;
    std::uint64_t seed = 1000;
    for (auto persp : {Perspective::Sponsor, Perspective::Public}) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const auto s = reference_scenario(CostCase::Case1, persp, PriorKind::Weak, 0.3, lambdas[i]);
                const auto kind = families[(i + j) % 3];
                const DesignSpec d{kind, ns[j], kind == DesignKind::Stratified ? 0.0125 : 0.0};
                mc::SimConfig cfg;
                cfg.replicates = 1'000'000;
                cfg.seed = ++seed;
                cfg.jobs = 4;
                const auto est = mc::mc_expected_utility(d, s.prior, s, cfg);
                const double exact = eu_prior_averaged(d, s).expected_utility;
                const double z = std::abs(exact - est.mean) / est.std_error;
                worst_z = std::max(worst_z, z);
                ++cells;
                v.require(z <= 3.0, fmt("%s %s lambda=%.1f n=%d: analytic %.4f vs MC %.4f (SE %.4f)",
                                         std::string(to_string(persp)).c_str(), name(kind), lambdas[i], ns[j],
                                         exact, est.mean, est.std_error));
            }
        }
    }
    if (v.pass) v.detail = fmt("%d cells, 1e6 replicates each, max |diff|/SE = %.2f", cells, worst_z);
    return v;
}

Verdict fwer() {
    Verdict v;
    mc::SimConfig cfg;
    cfg.replicates = 1'000'000;
    cfg.jobs = 4;
    std::string detail;
    for (double lambda : {0.3, 0.5}) {
        for (double aS : {0.005, 0.0125, 0.02}) {
            auto s = reference_scenario(CostCase::Case1, Perspective::Sponsor, PriorKind::Weak, 0.3, lambda);
            const auto d = DesignSpec::stratified(200, aS);
            cfg.seed = 5000 + static_cast<std::uint64_t>(aS * 1e4 + lambda * 10);
            const auto mod = mc::mc_fwer(d, s, {0, 0, 0}, cfg);
            v.require(mod.mean <= 0.025 + 3 * mod.std_error,
                      fmt("modified test lambda=%.1f alpha_S=%.4f: %.5f", lambda, aS, mod.mean));
            s.tau_S = s.tau_Sc = 1.0;
            cfg.seed += 77;
            const auto plain = mc::mc_fwer(d, s, {0, 0, 0}, cfg);
            v.require(std::abs(plain.mean - 0.025) <= 3 * plain.std_error,
                      fmt("tau=1 lambda=%.1f alpha_S=%.4f: %.5f +- %.5f", lambda, aS, plain.mean, plain.std_error));
            if (lambda == 0.5 && aS == 0.0125) {
                detail = fmt("lambda=0.5, alpha_S=0.0125: modified %.5f, tau=1 %.5f (SE %.5f); 6 settings",
                             mod.mean, plain.mean, plain.std_error);
            }
        }
    }
    if (v.pass) v.detail = detail;
    return v;
}

// Shared prevalence sweeps (weak prior, Case 1), computed once.
struct PrevalenceSweeps {
    std::vector<double> lambdas = linspace(0.05, 0.95, 19);
    std::vector<SweepRow> sponsor, pub;
};

const PrevalenceSweeps& prevalence_sweeps() {
    static const PrevalenceSweeps data = [] {
        PrevalenceSweeps d;
        const auto sp = reference_scenario(CostCase::Case1, Perspective::Sponsor, PriorKind::Weak, 0.3, 0.5);
        const auto pu = reference_scenario(CostCase::Case1, Perspective::Public, PriorKind::Weak, 0.3, 0.5);
        d.sponsor = sweep_prevalence(sp, d.lambdas, {}, 4);
        d.pub = sweep_prevalence(pu, d.lambdas, {}, 4);
        return d;
    }();
    return data;
}

Verdict prevalence_claims() {
    Verdict v;
    const auto& f = prevalence_sweeps();
    auto at = [&](const std::vector<SweepRow>& rows, double l) -> const SweepRow& {
        for (const auto& r : rows)
            if (std::abs(r.lambda_S - l) < 1e-9) return r;
        throw std::logic_error("lambda not swept");
    };
    // (a)
    v.require(at(f.sponsor, 0.05).selected == DesignKind::Classical,
              fmt("(a) lambda=0.05 selects %s", name(at(f.sponsor, 0.05).selected)));
    for (double l : {0.3, 0.5, 0.7}) {
        v.require(at(f.sponsor, l).selected == DesignKind::Stratified,
                  fmt("(a) lambda=%.2f selects %s", l, name(at(f.sponsor, l).selected)));
    }
    // (b) both views; violations are summarized by range and worst deficit
    double min_gap_es = 1.0, min_gap_sc = 1.0;
    for (const auto* rows : {&f.sponsor, &f.pub}) {
        double first_bad = -1.0, worst = 0.0;
        int bad = 0;
        for (const auto& r : *rows) {
            const double pe = r.enrichment.power, ps = r.stratified.power, pc = r.classical.power;
            min_gap_es = std::min(min_gap_es, pe - ps);
            min_gap_sc = std::min(min_gap_sc, ps - pc);
            if (!(pe > ps && ps > pc)) {
                if (bad++ == 0) first_bad = r.lambda_S;
                worst = std::max({worst, ps - pe, pc - ps});
            }
        }
        v.require(bad == 0, fmt("(b) %s power order E>S>C broken at %d of %zu points from lambda=%.2f on, worst deficit %.4f",
                                rows == &f.sponsor ? "sponsor" : "public", bad, rows->size(), first_bad, worst));
    }
    // (c) both views
    for (const auto* rows : {&f.sponsor, &f.pub}) {
        const SweepRow* prev = nullptr;
        for (const auto& r : *rows) {
            if (r.lambda_S < 0.2 - 1e-9 || r.lambda_S > 0.8 + 1e-9) continue;
            if (prev) {
                const char* view = rows == &f.sponsor ? "sponsor" : "public";
                v.require(r.stratified.n <= prev->stratified.n,
                          fmt("(c) %s stratified n %d -> %d at lambda=%.2f", view, prev->stratified.n, r.stratified.n, r.lambda_S));
                v.require(r.enrichment.n >= prev->enrichment.n,
                          fmt("(c) %s enrichment n %d -> %d at lambda=%.2f", view, prev->enrichment.n, r.enrichment.n, r.lambda_S));
            }
            prev = &r;
        }
    }
    if (v.pass) {
        v.detail = fmt("Classical@0.05, Stratified@0.3/0.5/0.7; power gaps E-S >= %.4f, S-C >= %.4f; n trends hold (both views, 19 pts)",
                       min_gap_es, min_gap_sc);
    }
    return v;
}

Verdict strong_prior_claims() {
    Verdict v;
    std::string summary;
    for (double l : {0.05, 0.3, 0.5, 0.7}) {
        const auto s = reference_scenario(CostCase::Case2, Perspective::Public, PriorKind::Strong, 0.3, l);
        const auto sel = select_design(s);
        const auto want = l < 0.1 ? DesignKind::NoTrial : DesignKind::Enrichment;
        v.require(sel.selected.best_design.kind == want,
                  fmt("lambda=%.2f selects %s (EU C %.2f E %.2f S %.2f)", l, name(sel.selected.best_design.kind),
                      sel.family(DesignKind::Classical).result.expected_utility,
                      sel.family(DesignKind::Enrichment).result.expected_utility,
                      sel.family(DesignKind::Stratified).result.expected_utility));
        summary += fmt("%s%.2f:%s", summary.empty() ? "" : ", ", l, name(sel.selected.best_design.kind));
    }
    if (v.pass) v.detail = summary;
    return v;
}

Verdict grid_claims() {
    Verdict v;
    const auto lambdas = linspace(0.05, 0.95, 10);
    const auto deltas = linspace(0.0, 1.0, 10);
    int grids = 0, enrichment_cells = 0;
    for (auto c : {CostCase::Case1, CostCase::Case2, CostCase::Case3}) {
        for (auto prior : {PriorKind::Weak, PriorKind::Strong}) {
            for (auto persp : {Perspective::Sponsor, Perspective::Public}) {
                const auto tmpl = reference_scenario(c, persp, prior, 0.3, 0.5);
                const auto res = sweep_contour(tmpl, prior, lambdas, deltas, {}, 4);
                ++grids;
                const auto tag = fmt("case%d %s %s", static_cast<int>(c), prior == PriorKind::Weak ? "weak" : "strong",
                                     std::string(to_string(persp)).c_str());
                for (const auto& cell : res.cells[0]) {
                    if (persp == Perspective::Sponsor) {
                        v.require(cell.selected != DesignKind::NoTrial && cell.n == tmpl.n_min,
                                  fmt("%s delta=0 lambda=%.2f: %s n=%d", tag.c_str(), cell.lambda_S, name(cell.selected), cell.n));
                    } else {
                        v.require(cell.selected == DesignKind::NoTrial,
                                  fmt("%s delta=0 lambda=%.2f: %s", tag.c_str(), cell.lambda_S, name(cell.selected)));
                    }
                }
                if (persp == Perspective::Sponsor) {
                    for (const auto& row : res.cells) {
                        for (const auto& cell : row) {
                            if (cell.selected == DesignKind::Enrichment) {
                                ++enrichment_cells;
                                v.require(false, fmt("%s: Enrichment at lambda=%.2f delta=%.2f", tag.c_str(),
                                                     cell.lambda_S, cell.delta));
                            }
                        }
                    }
                }
            }
        }
    }
    if (v.pass) v.detail = fmt("%d 10x10 grids (3 cases x 2 priors x 2 views); delta=0 rows as expected; no sponsor Enrichment cell", grids);
    return v;
}

Verdict cross_prior() {
    Verdict v;
    int checked = 0;
    for (auto c : {CostCase::Case1, CostCase::Case2, CostCase::Case3}) {
        for (auto persp : {Perspective::Sponsor, Perspective::Public}) {
            for (double delta : {0.2, 0.3, 0.5}) {
                for (double l : linspace(0.05, 0.95, 7)) {
                    const auto w = reference_scenario(c, persp, PriorKind::Weak, delta, l);
                    const auto s = reference_scenario(c, persp, PriorKind::Strong, delta, l);
                    const auto a = optimize_family(DesignKind::Enrichment, w);
                    const auto b = optimize_family(DesignKind::Enrichment, s);
                    ++checked;
                    v.require(a.best_design.n == b.best_design.n &&
                                  a.result.expected_utility == b.result.expected_utility,
                              fmt("case%d lambda=%.2f delta=%.1f: n %d vs %d, EU %.17g vs %.17g", static_cast<int>(c), l,
                                  delta, a.best_design.n, b.best_design.n, a.result.expected_utility,
                                  b.result.expected_utility));
                }
            }
        }
    }
    if (v.pass) v.detail = fmt("%d optimizations: n and EU bit-identical", checked);
    return v;
}

Verdict sample_size_claim() {
    Verdict v;
    const auto& f = prevalence_sweeps();
    int pairs = 0;
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
        for (auto k : {DesignKind::Classical, DesignKind::Enrichment, DesignKind::Stratified}) {
            const int ns = f.sponsor[i].family(k).n, np = f.pub[i].family(k).n;
            ++pairs;
            v.require(np >= ns, fmt("%s lambda=%.2f: public n %d < sponsor n %d", name(k), f.lambdas[i], np, ns));
        }
    }
    if (v.pass) v.detail = fmt("%d (family, lambda) pairs, public n >= sponsor n", pairs);
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    Verdict v;
    const auto root = fs::temp_directory_path() / "trialopt_acceptance_determinism";
    fs::remove_all(root);
    struct Run {
        std::vector<std::string> args;
        std::vector<std::string> files;
    };
    const std::vector<Run> runs = {
        {{"sweep", "--figures"}, {"sweep.csv", "sweep_long.csv"}},
        {{"optimize", "--set", "reward.perspective=public"}, {"optimize.csv"}},
        {{"contour", "--set", "contour.lambda_points=4", "--set", "contour.delta_points=4", "--figures"},
         {"contour.csv", "contour_long.csv"}},
        {{"simulate", "--set", "design.kind=stratified", "--set", "design.n=250", "--set", "design.alpha_S=0.01",
          "--set", "sim.replicates=200000", "--seed", "17"},
         {"simulate.csv"}},
    };
    int compared = 0;
    for (const auto& r : runs) {
        std::string first_files[4];
        for (int rep = 0; rep < 2; ++rep) {
            auto args = r.args;
            const auto dir = root / (r.args[0] + std::to_string(rep));
            args.insert(args.end(), {"--out", dir.string(), "--jobs", rep == 0 ? "1" : "4"});
            std::ostringstream out, err;
            const int code = cli::run_command(args, out, err);
            v.require(code == 0, r.args[0] + " exit " + std::to_string(code) + ": " + err.str());
            for (std::size_t i = 0; i < r.files.size(); ++i) {
                const auto text = slurp(dir / r.files[i]);
                if (rep == 0) {
                    first_files[i] = text;
                    v.require(!text.empty(), r.files[i] + " empty");
                } else {
                    ++compared;
                    v.require(text == first_files[i], r.files[i] + " differs between runs");
                }
            }
        }
    }
    fs::remove_all(root);
    if (v.pass) v.detail = fmt("%d CSV files byte-identical across two runs (jobs 1 vs 4)", compared);
    return v;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1 level condition", 5, level_condition},
        {"2 orthant identities", 1, orthant_identities},
        {"3 analytic vs Monte Carlo", 300, oracle_equivalence},
        {"4 familywise error", 120, fwer},
        {"5 prevalence sweep, weak prior, case 1", 600, prevalence_claims},
        {"6 strong prior, case 2, public", 600, strong_prior_claims},
        {"7 (prevalence, effect) grid rows", 1800, grid_claims},
        {"8 enrichment identical across priors", 600, cross_prior},
        {"9 public n >= sponsor n", 600, sample_size_claim},
        {"10 byte-identical reruns", 600, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > c.budget_seconds) v.require(false, fmt("runtime %.1fs over budget %.0fs", dt, c.budget_seconds));
        failed += !v.pass;
        std::printf("%s  [%s] %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", c.label, v.detail.c_str(), dt);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
