#include "trialopt/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "trialopt/errors.hpp"
#include "trialopt/testing.hpp"

namespace trialopt {

std::vector<int> GridConfig::default_n_grid() {
    std::vector<int> grid;
    for (int n = 50; n <= 100; n += 10) grid.push_back(n);
    for (int n = 120; n <= 300; n += 20) grid.push_back(n);
    for (int n = 350; n <= 1000; n += 50) grid.push_back(n);
    for (int n = 1200; n <= 3000; n += 200) grid.push_back(n);
    return grid;
}

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw DomainError("linspace: need at least one point");
    if (n == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(n));
    // Snapped to 1e-12 so decimal grids print as 0.4, not 0.39999999999999997.
    for (int i = 0; i < n; ++i) out[i] = std::round((lo + (hi - lo) * i / (n - 1)) * 1e12) / 1e12;
    out.front() = lo;
    out.back() = hi;
    return out;
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, const std::vector<double>& step, double tol,
                          int max_iterations) {
    const std::size_t dim = start.size();
    std::vector<std::vector<double>> pts(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += step[i];
    std::vector<double> vals(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(dim + 1);
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[dim - 1];
        if (std::abs(vals[worst] - vals[best]) <= tol * (1.0 + std::abs(vals[best]))) break;

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[i][j] / dim;
        }
        auto along = [&](double t) {
            std::vector<double> p(dim);
            for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (pts[worst][j] - centroid[j]);
            return p;
        };

        auto reflected = along(-1.0);
        const double f_reflected = f(reflected);
        if (f_reflected < vals[best]) {
            auto expanded = along(-2.0);
            const double f_expanded = f(expanded);
            if (f_expanded < f_reflected) {
                pts[worst] = std::move(expanded);
                vals[worst] = f_expanded;
            } else {
                pts[worst] = std::move(reflected);
                vals[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < vals[second]) {
            pts[worst] = std::move(reflected);
            vals[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < vals[worst];
        auto contracted = along(outside ? -0.5 : 0.5);
        const double f_contracted = f(contracted);
        if (f_contracted < (outside ? f_reflected : vals[worst])) {
            pts[worst] = std::move(contracted);
            vals[worst] = f_contracted;
            continue;
        }
        // Shrink towards the best vertex.
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            vals[i] = f(pts[i]);
        }
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[best], vals[best], iter};
}

namespace {

struct Candidate {
    DesignSpec design;
    EvaluationResult result;
};

class FamilyEvaluator {
public:
    FamilyEvaluator(DesignKind kind, const Scenario& s) : kind_(kind), s_(s) {}

    EvaluationResult operator()(double n, double alpha_S) const {
        if (kind_ != DesignKind::Stratified) return eu_prior_averaged(kind_, n, 0.0, s_);
        return eu_prior_averaged(n, params_for(alpha_S), s_);
    }

private:
    // The level-condition solve is shared by all n at a given alpha_S.
    const testing::StratifiedTestParams& params_for(double alpha_S) const {
        for (const auto& [a, p] : cache_) {
            if (a == alpha_S) return p;
        }
        cache_.emplace_back(alpha_S, testing::StratifiedTestParams::from_scenario(s_, alpha_S, false));
        return cache_.back().second;
    }

    DesignKind kind_;
    const Scenario& s_;
    mutable std::vector<std::pair<double, testing::StratifiedTestParams>> cache_;
};

}  // namespace

OptimizationOutcome optimize_family(DesignKind family, const Scenario& s, const GridConfig& grid) {
    s.validate();
    OptimizationOutcome out;
    if (family == DesignKind::NoTrial) return out;
    if (grid.alpha_points < 1) throw DomainError("grid.alpha_points must be >= 1");

    std::vector<int> ns{s.n_min};
    for (int n : grid.n_points) {
        if (n >= s.n_min) ns.push_back(n);
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    const bool stratified = family == DesignKind::Stratified;
    const std::vector<double> alphas =
        stratified ? linspace(0.0, s.alpha, grid.alpha_points) : std::vector<double>{0.0};

    FamilyEvaluator evaluate(family, s);
    auto make_design = [&](int n, double alpha_S) {
        return DesignSpec{family, n, stratified ? alpha_S : 0.0};
    };

    std::optional<Candidate> best;
    for (int n : ns) {
        for (double a : alphas) {
            Candidate c{make_design(n, a), evaluate(n, a)};
            if (grid.keep_trace) out.trace.push_back({c.design, c.result.expected_utility});
            if (!best || c.result.expected_utility > best->result.expected_utility) best = c;
        }
    }

    if (grid.refine) {
        const double n_lo = s.n_min;
        const double n_hi = 2.0 * std::max<double>(ns.back(), 2.0 * s.n_min);
        auto clamp_n = [&](double n) { return std::clamp(n, n_lo, n_hi); };
        auto clamp_a = [](double a) { return std::clamp(a, 0.0, 1.0); };

        const double n0 = best->design.n;
        std::vector<double> start{n0};
        std::vector<double> step{std::max(0.1 * n0, 5.0)};
        if (stratified) {
            start.push_back(best->design.alpha_S / s.alpha);
            step.push_back(start[1] > 0.5 ? -0.1 : 0.1);
        }
        auto objective = [&](const std::vector<double>& x) {
            const double a = stratified ? clamp_a(x[1]) * s.alpha : 0.0;
            return -evaluate(clamp_n(x[0]), a).expected_utility;
        };
        const auto refined = nelder_mead(objective, start, step, grid.refine_tol,
                                         grid.refine_max_iterations);

        const double n_star = clamp_n(refined.x[0]);
        const double a_star = stratified ? clamp_a(refined.x[1]) * s.alpha : 0.0;
        const int lo = std::max(s.n_min, static_cast<int>(std::floor(n_star)));
        const int hi = std::max(s.n_min, static_cast<int>(std::ceil(n_star)));
        for (int n : {lo, hi}) {
            Candidate c{make_design(n, a_star), evaluate(n, a_star)};
            if (grid.keep_trace) out.trace.push_back({c.design, c.result.expected_utility});
            const bool better = c.result.expected_utility > best->result.expected_utility;
            const bool tie_smaller = c.result.expected_utility == best->result.expected_utility &&
                                     c.design.n < best->design.n;
            if (better || tie_smaller) best = c;
        }
    }

    out.best_design = best->design;
    out.result = best->result;
    if (stratified) {
        out.derived_alpha_F = testing::alpha_F_given_alpha_S(best->design.alpha_S, s.lambda_S, s.alpha);
    }
    return out;
}

const OptimizationOutcome& DesignSelection::family(DesignKind kind) const {
    for (const auto& f : families) {
        if (f.best_design.kind == kind) return f;
    }
    throw DomainError("selection has no family " + std::string(to_string(kind)));
}

DesignSelection select_design(const Scenario& s, const GridConfig& grid) {
    DesignSelection sel;
    for (auto kind : {DesignKind::Classical, DesignKind::Enrichment, DesignKind::Stratified}) {
        sel.families.push_back(optimize_family(kind, s, grid));
    }
    // NoTrial has utility 0; families are visited in preference order and
    // must beat the incumbent strictly.
    sel.selected = OptimizationOutcome{};
    for (const auto& f : sel.families) {
        if (f.result.expected_utility > sel.selected.result.expected_utility) sel.selected = f;
    }
    sel.selected.trace.clear();
    return sel;
}

const FamilyOptimum& SweepRow::family(DesignKind kind) const {
    switch (kind) {
        case DesignKind::Classical: return classical;
        case DesignKind::Enrichment: return enrichment;
        case DesignKind::Stratified: return stratified;
        default: throw DomainError("sweep row has no NoTrial family");
    }
}

namespace {

// Runs body(i) for i in [0, count) on up to jobs threads. The first
// exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

FamilyOptimum summarize(const OptimizationOutcome& o) {
    return {.n = o.best_design.n,
            .alpha_S = o.best_design.alpha_S,
            .alpha_F = o.derived_alpha_F,
            .expected_utility = o.result.expected_utility,
            .power = o.result.power_any};
}

void require_sweep_lambda(double lambda) {
    if (!(lambda >= 0.05 - 1e-12 && lambda <= 0.95 + 1e-12)) {
        throw DomainError("sweep prevalence must lie in [0.05, 0.95]");
    }
}

}  // namespace

std::vector<SweepRow> sweep_prevalence(const Scenario& scenario_template,
                                       const std::vector<double>& lambda_grid,
                                       const GridConfig& grid, int jobs) {
    for (double l : lambda_grid) require_sweep_lambda(l);
    std::vector<SweepRow> rows(lambda_grid.size());
    parallel_for(lambda_grid.size(), jobs, [&](std::size_t i) {
        Scenario s = scenario_template;
        s.lambda_S = lambda_grid[i];
        const auto sel = select_design(s, grid);
        SweepRow& row = rows[i];
        row.lambda_S = s.lambda_S;
        row.classical = summarize(sel.family(DesignKind::Classical));
        row.enrichment = summarize(sel.family(DesignKind::Enrichment));
        row.stratified = summarize(sel.family(DesignKind::Stratified));
        row.selected = sel.selected.best_design.kind;
        row.selected_utility = sel.selected.result.expected_utility;
    });
    return rows;
}

ContourResult sweep_contour(const Scenario& scenario_template, PriorKind prior,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& delta_grid, const GridConfig& grid,
                            int jobs) {
    for (double l : lambda_grid) require_sweep_lambda(l);
    for (double d : delta_grid) {
        if (!(d >= 0.0 && d <= 1.0)) throw DomainError("contour delta must lie in [0, 1]");
    }
    ContourResult out{lambda_grid, delta_grid, {}};
    out.cells.assign(delta_grid.size(), std::vector<ContourCell>(lambda_grid.size()));
    const std::size_t cols = lambda_grid.size();
    parallel_for(delta_grid.size() * cols, jobs, [&](std::size_t idx) {
        const std::size_t r = idx / cols;
        const std::size_t c = idx % cols;
        Scenario s = scenario_template;
        s.lambda_S = lambda_grid[c];
        s.prior = builtin_prior(prior, delta_grid[r]);
        const auto sel = select_design(s, grid);
        out.cells[r][c] = {.lambda_S = s.lambda_S,
                           .delta = delta_grid[r],
                           .selected = sel.selected.best_design.kind,
                           .n = sel.selected.best_design.n,
                           .expected_utility = sel.selected.result.expected_utility};
    });
    return out;
}

}  // namespace trialopt
