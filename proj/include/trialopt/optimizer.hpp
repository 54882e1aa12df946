#pragma once
// Expected-utility maximization: per-family grid search with simplex
// refinement, overall design selection against the no-trial baseline, and
// prevalence / (prevalence, effect) sweeps.

#include <functional>
#include <optional>
#include <vector>

#include "trialopt/model.hpp"
#include "trialopt/utility.hpp"

namespace trialopt {

struct GridConfig {
    // Candidate per-group sample sizes. Values below n_min are dropped and
    // n_min itself is always evaluated.
    std::vector<int> n_points = default_n_grid();
    // Equispaced alpha_S values on [0, alpha], endpoints included.
    int alpha_points = 21;
    bool refine = true;
    // Simplex stops when the utility spread is below refine_tol * (1 + |best|).
    double refine_tol = 1e-9;
    int refine_max_iterations = 400;
    bool keep_trace = false;

    // 50..100 by 10, 120..300 by 20, 350..1000 by 50, 1200..3000 by 200.
    static std::vector<int> default_n_grid();
};

struct OptimizationOutcome {
    DesignSpec best_design;
    EvaluationResult result;
    double derived_alpha_F = 0.0;  // stratified only
    struct TracePoint {
        DesignSpec design;
        double utility;
    };
    std::vector<TracePoint> trace;
};

OptimizationOutcome optimize_family(DesignKind family, const Scenario& scenario,
                                    const GridConfig& grid = {});

struct DesignSelection {
    OptimizationOutcome selected;
    // Classical, Enrichment, Stratified in that order.
    std::vector<OptimizationOutcome> families;

    const OptimizationOutcome& family(DesignKind kind) const;
};

// Optimizes every family and compares with NoTrial (utility 0). Ties go to
// the earlier entry of DesignKind.
DesignSelection select_design(const Scenario& scenario, const GridConfig& grid = {});

struct FamilyOptimum {
    int n = 0;
    double alpha_S = 0.0;
    double alpha_F = 0.0;
    double expected_utility = 0.0;
    double power = 0.0;
};

struct SweepRow {
    double lambda_S = 0.0;
    FamilyOptimum classical, enrichment, stratified;
    DesignKind selected = DesignKind::NoTrial;
    double selected_utility = 0.0;

    const FamilyOptimum& family(DesignKind kind) const;
};

// Runs select_design at each prevalence (each must lie in [0.05, 0.95]).
// Cells are independent; jobs > 1 evaluates them on worker threads with
// results identical to the sequential run.
std::vector<SweepRow> sweep_prevalence(const Scenario& scenario_template,
                                       const std::vector<double>& lambda_grid,
                                       const GridConfig& grid = {}, int jobs = 1);

struct ContourCell {
    double lambda_S = 0.0;
    double delta = 0.0;
    DesignKind selected = DesignKind::NoTrial;
    int n = 0;
    double expected_utility = 0.0;
};

// Rows follow delta_grid, columns follow lambda_grid.
struct ContourResult {
    std::vector<double> lambda_grid;
    std::vector<double> delta_grid;
    std::vector<std::vector<ContourCell>> cells;
};

// The prior at each cell is builtin_prior(prior, delta). lambda values must
// lie in [0.05, 0.95] and delta values in [0, 1].
ContourResult sweep_contour(const Scenario& scenario_template, PriorKind prior,
                            const std::vector<double>& lambda_grid,
                            const std::vector<double>& delta_grid, const GridConfig& grid = {},
                            int jobs = 1);

// n points equispaced on [lo, hi], snapped to multiples of 1e-12.
std::vector<double> linspace(double lo, double hi, int n);

// Derivative-free minimization by the Nelder-Mead simplex method.
struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> start, const std::vector<double>& step,
                          double tol, int max_iterations);

}  // namespace trialopt
