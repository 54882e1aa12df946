#include "trialopt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "trialopt/errors.hpp"
#include "trialopt/mc_oracle.hpp"
#include "trialopt/optimizer.hpp"
#include "trialopt/utility.hpp"

namespace trialopt::cli {

using nlohmann::json;
using config::format_number;

nlohmann::json to_json(const RunManifest& m) {
    return json{{"command", m.command},
                {"scenario", m.scenario},
                {"grid", m.grid},
                {"seed", m.seed},
                {"version", m.version},
                {"wall_clock_seconds", m.wall_clock_seconds},
                {"outputs", m.outputs},
                {"results", m.results}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    j.at("command").get_to(m.command);
    j.at("scenario").get_to(m.scenario);
    j.at("grid").get_to(m.grid);
    j.at("seed").get_to(m.seed);
    j.at("version").get_to(m.version);
    j.at("wall_clock_seconds").get_to(m.wall_clock_seconds);
    j.at("outputs").get_to(m.outputs);
    m.results = j.at("results");
    return m;
}

std::string schema_line(const std::string& command, const std::string& table) {
    const auto& name = table.empty() ? command : table;
    return "#schema=trialopt." + name + ".v1 manifest=" + command + "_manifest.json";
}

namespace {

// Small CSV writer: numbers are shortest round-trip, never locale-formatted.
class Csv {
public:
    explicit Csv(const std::string& command, const std::string& table = {}) {
        text_ << schema_line(command, table) << '\n';
    }

    Csv& header(std::initializer_list<std::string_view> cols) {
        for (auto c : cols) cell(c);
        return end();
    }
    Csv& cell(std::string_view s) {
        if (!first_) text_ << ',';
        text_ << s;
        first_ = false;
        return *this;
    }
    Csv& num(double x) { return cell(format_number(x)); }
    Csv& integer(long long x) { return cell(std::to_string(x)); }
    Csv& end() {
        text_ << '\n';
        first_ = true;
        return *this;
    }
    std::string str() const { return text_.str(); }

private:
    std::ostringstream text_;
    bool first_ = true;
};

struct Context {
    std::string command;
    config::RunConfig rc;
    config::KeyValues doc;
    std::filesystem::path out_dir;
    bool figures = false;
    int jobs = 1;
    RunManifest manifest;
};

void write_file(Context& ctx, const std::string& name, const std::string& content) {
    const auto path = ctx.out_dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("", "cannot write '" + path.string() + "'");
    f << content;
    ctx.manifest.outputs.push_back(path.string());
}

std::string design_name(DesignKind k) { return std::string(to_string(k)); }

json result_json(const EvaluationResult& r) {
    return json{{"expected_utility", r.expected_utility},
                {"prob_reject_S_only", r.prob_reject_S_only},
                {"prob_reject_F", r.prob_reject_F},
                {"power_any", r.power_any},
                {"expected_reward_S", r.expected_reward_S},
                {"expected_reward_F", r.expected_reward_F},
                {"cost", r.cost}};
}

void result_cells(Csv& csv, const EvaluationResult& r) {
    csv.num(r.expected_utility)
        .num(r.prob_reject_S_only)
        .num(r.prob_reject_F)
        .num(r.power_any)
        .num(r.expected_reward_S)
        .num(r.expected_reward_F)
        .num(r.cost);
}

void run_evaluate(Context& ctx) {
    const auto& s = ctx.rc.scenario;
    const auto& d = ctx.rc.design;
    const auto r = eu_prior_averaged(d, s);
    const double alpha_F = d.kind == DesignKind::Stratified
                               ? testing::alpha_F_given_alpha_S(d.alpha_S, s.lambda_S, s.alpha)
                               : 0.0;
    Csv csv(ctx.command);
    csv.header({"design", "n", "alpha_S", "alpha_F", "expected_utility", "prob_reject_S_only",
                "prob_reject_F", "power_any", "expected_reward_S", "expected_reward_F", "cost"});
    csv.cell(design_name(d.kind)).integer(d.n).num(d.alpha_S).num(alpha_F);
    result_cells(csv, r);
    csv.end();
    write_file(ctx, "evaluate.csv", csv.str());
    json j = result_json(r);
    j["design"] = design_name(d.kind);
    j["n"] = d.n;
    j["alpha_S"] = d.alpha_S;
    j["alpha_F"] = alpha_F;
    ctx.manifest.results = j;
}

json outcome_json(const OptimizationOutcome& o) {
    json j = result_json(o.result);
    j["design"] = design_name(o.best_design.kind);
    j["n"] = o.best_design.n;
    j["alpha_S"] = o.best_design.alpha_S;
    j["alpha_F"] = o.derived_alpha_F;
    return j;
}

void run_optimize(Context& ctx) {
    const auto sel = select_design(ctx.rc.scenario, ctx.rc.grid);
    Csv csv(ctx.command);
    csv.header({"role", "design", "n", "alpha_S", "alpha_F", "expected_utility",
                "prob_reject_S_only", "prob_reject_F", "power_any", "expected_reward_S",
                "expected_reward_F", "cost"});
    json fam = json::array();
    auto row = [&](std::string_view role, const OptimizationOutcome& o) {
        csv.cell(role)
            .cell(design_name(o.best_design.kind))
            .integer(o.best_design.n)
            .num(o.best_design.alpha_S)
            .num(o.derived_alpha_F);
        result_cells(csv, o.result);
        csv.end();
    };
    for (const auto& o : sel.families) {
        row("family", o);
        fam.push_back(outcome_json(o));
    }
    row("selected", sel.selected);
    write_file(ctx, "optimize.csv", csv.str());
    ctx.manifest.results = json{{"families", fam}, {"selected", outcome_json(sel.selected)}};
}

constexpr std::array<std::pair<DesignKind, std::string_view>, 3> kFamilies = {{
    {DesignKind::Classical, "classical"},
    {DesignKind::Enrichment, "enrichment"},
    {DesignKind::Stratified, "stratified"},
}};

json optimum_json(const FamilyOptimum& f) {
    return json{{"n_opt", f.n},
                {"alpha_S_opt", f.alpha_S},
                {"alpha_F", f.alpha_F},
                {"eu", f.expected_utility},
                {"power", f.power}};
}

void run_sweep(Context& ctx) {
    const auto rows = sweep_prevalence(ctx.rc.scenario, ctx.rc.sweep_lambdas, ctx.rc.grid, ctx.jobs);
    Csv csv(ctx.command);
    csv.cell("lambda_S");
    for (const auto& [kind, name] : kFamilies) {
        for (std::string_view col : {"n_opt", "alpha_S_opt", "alpha_F", "eu", "power"}) {
            csv.cell(std::string(name) + "_" + std::string(col));
        }
    }
    csv.cell("selected").end();

    Csv longform(ctx.command, "sweep_long");
    longform.header({"lambda_S", "design", "n_opt", "alpha_S_opt", "alpha_F", "eu", "power", "selected"});

    json out = json::array();
    for (const auto& r : rows) {
        csv.num(r.lambda_S);
        json jr{{"lambda_S", r.lambda_S}, {"selected", design_name(r.selected)}};
        for (const auto& [kind, name] : kFamilies) {
            const auto& f = r.family(kind);
            csv.integer(f.n).num(f.alpha_S).num(f.alpha_F).num(f.expected_utility).num(f.power);
            longform.num(r.lambda_S)
                .cell(name)
                .integer(f.n)
                .num(f.alpha_S)
                .num(f.alpha_F)
                .num(f.expected_utility)
                .num(f.power)
                .integer(r.selected == kind ? 1 : 0)
                .end();
            jr[std::string(name)] = optimum_json(f);
        }
        csv.cell(design_name(r.selected)).end();
        out.push_back(jr);
    }
    write_file(ctx, "sweep.csv", csv.str());
    if (ctx.figures) write_file(ctx, "sweep_long.csv", longform.str());
    ctx.manifest.results = json{{"rows", out}};
}

void run_contour(Context& ctx) {
    if (!ctx.rc.prior_source.kind) {
        throw ConfigError("prior.atoms", "contour needs prior.kind, not an explicit atom list");
    }
    const auto res = sweep_contour(ctx.rc.scenario, *ctx.rc.prior_source.kind, ctx.rc.contour_lambdas,
                                   ctx.rc.contour_deltas, ctx.rc.grid, ctx.jobs);
    Csv csv(ctx.command);
    csv.cell("delta");
    for (double l : res.lambda_grid) csv.cell("lambda=" + format_number(l));
    csv.end();
    Csv longform(ctx.command, "contour_long");
    longform.header({"lambda_S", "delta", "selected", "n", "eu"});
    json cells = json::array();
    for (std::size_t i = 0; i < res.delta_grid.size(); ++i) {
        csv.num(res.delta_grid[i]);
        for (const auto& c : res.cells[i]) {
            csv.cell(design_name(c.selected));
            longform.num(c.lambda_S).num(c.delta).cell(design_name(c.selected)).integer(c.n).num(c.expected_utility).end();
            cells.push_back(json{{"lambda_S", c.lambda_S},
                                 {"delta", c.delta},
                                 {"selected", design_name(c.selected)},
                                 {"n", c.n},
                                 {"eu", c.expected_utility}});
        }
        csv.end();
    }
    write_file(ctx, "contour.csv", csv.str());
    if (ctx.figures) write_file(ctx, "contour_long.csv", longform.str());
    ctx.manifest.results = json{{"lambda_grid", res.lambda_grid}, {"delta_grid", res.delta_grid}, {"cells", cells}};
}

void run_simulate(Context& ctx) {
    const auto& rc = ctx.rc;
    auto sim = rc.sim;
    sim.jobs = ctx.jobs;
    std::vector<std::pair<std::string, mc::McEstimate>> rows;
    if (sim.estimand == mc::Estimand::FWER) {
        rows.emplace_back("fwer", mc::mc_fwer(rc.design, rc.scenario, rc.null_effects, sim));
    } else {
        const auto summary = mc::mc_simulate(rc.design, rc.scenario.prior, rc.scenario, sim);
        if (sim.estimand == mc::Estimand::Utility) rows.emplace_back("utility", summary.utility);
        rows.emplace_back("reject_S_only", summary.reject_S_only);
        rows.emplace_back("reject_F", summary.reject_F);
        rows.emplace_back("any_rejection", summary.any_rejection);
    }
    Csv csv(ctx.command);
    csv.header({"design", "n", "alpha_S", "strata_mode", "estimand", "mean", "std_error", "replicates"});
    json out = json::array();
    for (const auto& [name, est] : rows) {
        csv.cell(design_name(rc.design.kind))
            .integer(rc.design.n)
            .num(rc.design.alpha_S)
            .cell(config::to_string(sim.strata_mode))
            .cell(name)
            .num(est.mean)
            .num(est.std_error)
            .integer(static_cast<long long>(est.replicates))
            .end();
        out.push_back(json{{"estimand", name},
                           {"mean", est.mean},
                           {"std_error", est.std_error},
                           {"replicates", est.replicates}});
    }
    write_file(ctx, "simulate.csv", csv.str());
    ctx.manifest.results = json{{"design", design_name(rc.design.kind)},
                                {"n", rc.design.n},
                                {"alpha_S", rc.design.alpha_S},
                                {"strata_mode", std::string(config::to_string(sim.strata_mode))},
                                {"estimates", out}};
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Expected-utility optimization of subgroup trial designs", "trialopt"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = ".";
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    bool figures = false;

    struct Spec {
        const char* name;
        const char* help;
        void (*run)(Context&);
    };
    const Spec specs[] = {
        {"evaluate", "Expected utility of design.* under the scenario", run_evaluate},
        {"optimize", "Optimize each design family and select the best", run_optimize},
        {"sweep", "Optimized designs across prevalences", run_sweep},
        {"contour", "Selected design over a (prevalence, effect) grid", run_contour},
        {"simulate", "Monte Carlo estimates for design.*", run_simulate},
    };
    for (const auto& sp : specs) {
        auto* sub = app.add_subcommand(sp.name, sp.help);
        sub->add_option("--config", config_path, "Config document (key = value)");
        sub->add_option("--set", overrides, "Override key=value (repeatable)");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Monte Carlo seed (overrides sim.seed)");
        if (std::string_view(sp.name) == "sweep" || std::string_view(sp.name) == "contour") {
            sub->add_flag("--figures", figures, "Also write long-format CSV for plotting");
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    const auto* sub = app.get_subcommands().front();
    const auto& spec = *std::find_if(std::begin(specs), std::end(specs),
                                     [&](const Spec& s) { return sub->get_name() == s.name; });

    const auto t0 = std::chrono::steady_clock::now();
    try {
        Context ctx;
        ctx.command = spec.name;
        if (!config_path.empty()) ctx.doc = config::load_document(config_path);
        for (const auto& o : overrides) config::apply_override(ctx.doc, o);
        ctx.rc = config::decode(ctx.doc);
        if (seed) ctx.rc.sim.seed = *seed;
        ctx.jobs = jobs > 0 ? jobs : ctx.rc.sim.jobs;
        ctx.figures = figures;
        ctx.out_dir = out_dir;
        std::error_code ec;
        std::filesystem::create_directories(ctx.out_dir, ec);
        if (ec) throw ConfigError("", "cannot create output directory '" + out_dir + "'");

        ctx.manifest.command = spec.name;
        ctx.manifest.scenario = config::encode_scenario(ctx.rc.scenario);
        ctx.manifest.grid = config::encode_grid(ctx.rc.grid);
        ctx.manifest.seed = ctx.rc.sim.seed;

        spec.run(ctx);

        ctx.manifest.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto manifest_path = ctx.out_dir / (std::string(spec.name) + "_manifest.json");
        std::ofstream mf(manifest_path, std::ios::binary);
        if (!mf) throw ConfigError("", "cannot write '" + manifest_path.string() + "'");
        mf << to_json(ctx.manifest).dump(2) << '\n';
        for (const auto& p : ctx.manifest.outputs) out << p << '\n';
        out << manifest_path.string() << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << " (best estimate " << e.best_estimate()
            << ", error estimate " << e.error_estimate() << ")\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace trialopt::cli
