#include "trialopt/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <cmath>
#include <sstream>

#include "trialopt/errors.hpp"

namespace trialopt::config {

namespace {

constexpr std::array<std::string_view, 38> kKnownKeys = {
    "lambda_S",          "sigma",          "alpha",              "tau_S",
    "tau_Sc",            "n_min",          "cost.setup",         "cost.per_patient",
    "cost.biomarker",    "cost.screening", "reward.perspective", "reward.NrS",
    "reward.NrF",        "reward.mu_S",    "reward.mu_F",        "prior.kind",
    "prior.atoms",       "prior.delta",    "design.kind",        "design.n",
    "design.alpha_S",    "grid.n_points",  "grid.alpha_points",  "refine.enabled",
    "refine.tol",        "sweep.lambda",   "sweep.lambda_points", "contour.lambda",
    "contour.lambda_points", "contour.delta", "contour.delta_points", "sim.replicates",
    "sim.seed",          "sim.strata_mode", "sim.estimand",      "sim.null_delta_S",
    "sim.null_delta_Sc", "jobs",
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

bool is_known_key(std::string_view key) {
    return std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end();
}

KeyValues parse_document(std::string_view text) {
    KeyValues kv;
    int line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        const auto hash = raw.find('#');
        const auto line = trim(raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (!is_known_key(key)) throw ConfigError(key, "unknown key");
        if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }
    return kv;
}

KeyValues load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_document(buffer.str());
}

std::string write_document(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

void apply_override(KeyValues& kv, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("", "override '" + std::string(assignment) + "' is not key=value");
    }
    std::string key(trim(assignment.substr(0, eq)));
    if (!is_known_key(key)) throw ConfigError(key, "unknown key");
    kv[key] = std::string(trim(assignment.substr(eq + 1)));
}

std::string format_number(double x) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

double parse_number(const std::string& key, std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(key, "expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

int parse_int(const std::string& key, std::string_view text) {
    text = trim(text);
    int value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError(key, "expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

bool parse_bool(const std::string& key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + std::string(text) + "'");
}

std::vector<double> parse_number_list(const std::string& key, std::string_view text) {
    std::vector<double> out;
    for (auto part : split(text, ',')) out.push_back(parse_number(key, part));
    return out;
}

std::string_view to_string(mc::StrataMode mode) {
    return mode == mc::StrataMode::FixedProportional ? "fixed" : "binomial";
}

std::string_view to_string(mc::Estimand estimand) {
    switch (estimand) {
        case mc::Estimand::Utility: return "utility";
        case mc::Estimand::RejectionProbs: return "rejection";
        case mc::Estimand::FWER: return "fwer";
    }
    return "?";
}

namespace {

PriorKind prior_kind_from(const std::string& key, std::string_view v) {
    if (v == "weak") return PriorKind::Weak;
    if (v == "strong") return PriorKind::Strong;
    throw ConfigError(key, "expected weak or strong, got '" + std::string(v) + "'");
}

std::vector<PriorAtom> parse_atoms(const std::string& key, std::string_view text) {
    std::vector<PriorAtom> atoms;
    for (auto item : split(text, ';')) {
        if (item.empty()) continue;
        const auto fields = parse_number_list(key, item);
        if (fields.size() == 3) {
            atoms.push_back({{fields[0], fields[1], 0.0}, fields[2]});
        } else if (fields.size() == 4) {
            atoms.push_back({{fields[0], fields[1], fields[2]}, fields[3]});
        } else {
            throw ConfigError(key, "atom '" + std::string(item) + "' needs 3 or 4 fields");
        }
    }
    return atoms;
}

// Runs fn, turning DomainError into ConfigError attributed to key.
template <class Fn>
auto attributed(const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        throw ConfigError(key, e.what());
    }
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

std::vector<double> lambda_list(const KeyValues& kv, const std::string& list_key,
                                const std::string& count_key, const std::vector<double>& fallback,
                                double lo, double hi) {
    if (kv.count(list_key) && kv.count(count_key)) {
        throw ConfigError(list_key, "conflicts with " + count_key);
    }
    std::vector<double> values = fallback;
    if (auto it = kv.find(list_key); it != kv.end()) values = parse_number_list(list_key, it->second);
    if (auto it = kv.find(count_key); it != kv.end()) {
        const int count = parse_int(count_key, it->second);
        require(count >= 1, count_key, "must be >= 1");
        values = linspace(lo, hi, count);
    }
    const std::string& key = kv.count(list_key) ? list_key : count_key;
    for (double v : values) require(v >= lo - 1e-12 && v <= hi + 1e-12, key, "values must lie in [" +
                                    format_number(lo) + ", " + format_number(hi) + "]");
    return values;
}

}  // namespace

RunConfig decode(const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
        if (!is_known_key(k)) throw ConfigError(k, "unknown key");
    }
    RunConfig rc;
    rc.scenario = reference_scenario(CostCase::Case1, Perspective::Sponsor, PriorKind::Weak, 0.3, 0.5);
    Scenario& s = rc.scenario;

    auto number = [&](const std::string& key, double& target) {
        if (auto it = kv.find(key); it != kv.end()) target = parse_number(key, it->second);
    };
    auto integer = [&](const std::string& key, int& target) {
        if (auto it = kv.find(key); it != kv.end()) target = parse_int(key, it->second);
    };

    number("lambda_S", s.lambda_S);
    number("sigma", s.sigma);
    number("alpha", s.alpha);
    number("tau_S", s.tau_S);
    number("tau_Sc", s.tau_Sc);
    integer("n_min", s.n_min);
    number("cost.setup", s.costs.setup);
    number("cost.per_patient", s.costs.per_patient);
    number("cost.biomarker", s.costs.biomarker);
    number("cost.screening", s.costs.screening);
    if (auto it = kv.find("reward.perspective"); it != kv.end()) {
        s.rewards.perspective = attributed("reward.perspective",
                                           [&] { return perspective_from_string(it->second); });
    }
    number("reward.NrS", s.rewards.NrS);
    number("reward.NrF", s.rewards.NrF);
    number("reward.mu_S", s.rewards.mu_S);
    number("reward.mu_F", s.rewards.mu_F);

    // Scenario-level validation, attributed to the first failing key.
    const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
        {"lambda_S", [&] { return s.lambda_S > 0.0 && s.lambda_S < 1.0; }},
        {"sigma", [&] { return s.sigma > 0.0 && std::isfinite(s.sigma); }},
        {"alpha", [&] { return s.alpha > 0.0 && s.alpha < 0.5; }},
        {"tau_S", [&] { return s.tau_S >= 0.0 && s.tau_S <= 1.0; }},
        {"tau_Sc", [&] { return s.tau_Sc >= 0.0 && s.tau_Sc <= 1.0; }},
        {"n_min", [&] { return s.n_min >= 1; }},
        {"cost.setup", [&] { return s.costs.setup >= 0.0; }},
        {"cost.per_patient", [&] { return s.costs.per_patient >= 0.0; }},
        {"cost.biomarker", [&] { return s.costs.biomarker >= 0.0; }},
        {"cost.screening", [&] { return s.costs.screening >= 0.0; }},
        {"reward.NrS", [&] { return s.rewards.NrS >= 0.0; }},
        {"reward.NrF", [&] { return s.rewards.NrF >= 0.0; }},
        {"reward.mu_S", [&] { return s.rewards.mu_S >= 0.0; }},
        {"reward.mu_F", [&] { return s.rewards.mu_F >= 0.0; }},
    };
    for (const auto& [key, ok] : checks) require(ok(), key, "value out of range");

    // Prior.
    if (kv.count("prior.atoms")) {
        require(!kv.count("prior.kind"), "prior.atoms", "conflicts with prior.kind");
        require(!kv.count("prior.delta"), "prior.atoms", "conflicts with prior.delta");
        s.prior = attributed("prior.atoms", [&] {
            return DiscretePrior(parse_atoms("prior.atoms", kv.at("prior.atoms")));
        });
        rc.prior_source.kind.reset();
    } else {
        PriorKind kind = PriorKind::Weak;
        if (auto it = kv.find("prior.kind"); it != kv.end()) kind = prior_kind_from("prior.kind", it->second);
        number("prior.delta", rc.prior_source.delta);
        rc.prior_source.kind = kind;
        s.prior = attributed("prior.delta", [&] { return builtin_prior(kind, rc.prior_source.delta); });
    }

    // Design for evaluate/simulate.
    if (auto it = kv.find("design.kind"); it != kv.end()) {
        rc.design.kind = attributed("design.kind", [&] { return design_kind_from_string(it->second); });
    }
    integer("design.n", rc.design.n);
    number("design.alpha_S", rc.design.alpha_S);
    if (rc.design.kind != DesignKind::Stratified) rc.design.alpha_S = 0.0;
    if (rc.design.kind == DesignKind::NoTrial) rc.design.n = 0;
    require(!rc.design.is_trial() || rc.design.n >= s.n_min, "design.n", "must be >= n_min");
    require(rc.design.alpha_S >= 0.0 && rc.design.alpha_S <= s.alpha, "design.alpha_S",
            "must lie in [0, alpha]");

    // Optimizer grid.
    if (auto it = kv.find("grid.n_points"); it != kv.end()) {
        rc.grid.n_points.clear();
        for (auto part : split(it->second, ',')) rc.grid.n_points.push_back(parse_int("grid.n_points", part));
        for (int n : rc.grid.n_points) require(n >= 1, "grid.n_points", "values must be >= 1");
    }
    integer("grid.alpha_points", rc.grid.alpha_points);
    require(rc.grid.alpha_points >= 1, "grid.alpha_points", "must be >= 1");
    if (auto it = kv.find("refine.enabled"); it != kv.end()) rc.grid.refine = parse_bool("refine.enabled", it->second);
    number("refine.tol", rc.grid.refine_tol);
    require(rc.grid.refine_tol > 0.0, "refine.tol", "must be > 0");

    rc.sweep_lambdas = lambda_list(kv, "sweep.lambda", "sweep.lambda_points", rc.sweep_lambdas, 0.05, 0.95);
    rc.contour_lambdas =
        lambda_list(kv, "contour.lambda", "contour.lambda_points", rc.contour_lambdas, 0.05, 0.95);
    rc.contour_deltas = lambda_list(kv, "contour.delta", "contour.delta_points", rc.contour_deltas, 0.0, 1.0);

    // Simulation.
    if (auto it = kv.find("sim.replicates"); it != kv.end()) {
        const double reps = parse_number("sim.replicates", it->second);
        require(reps >= 1.0 && reps == std::floor(reps), "sim.replicates", "must be a positive integer");
        rc.sim.replicates = static_cast<std::uint64_t>(reps);
    }
    if (auto it = kv.find("sim.seed"); it != kv.end()) {
        std::uint64_t seed = 0;
        const auto& t = it->second;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), seed);
        require(res.ec == std::errc() && res.ptr == t.data() + t.size(), "sim.seed",
                "expected an unsigned integer");
        rc.sim.seed = seed;
    }
    if (auto it = kv.find("sim.strata_mode"); it != kv.end()) {
        if (it->second == "fixed") rc.sim.strata_mode = mc::StrataMode::FixedProportional;
        else if (it->second == "binomial") rc.sim.strata_mode = mc::StrataMode::BinomialRandom;
        else throw ConfigError("sim.strata_mode", "expected fixed or binomial");
    }
    if (auto it = kv.find("sim.estimand"); it != kv.end()) {
        if (it->second == "utility") rc.sim.estimand = mc::Estimand::Utility;
        else if (it->second == "rejection") rc.sim.estimand = mc::Estimand::RejectionProbs;
        else if (it->second == "fwer") rc.sim.estimand = mc::Estimand::FWER;
        else throw ConfigError("sim.estimand", "expected utility, rejection or fwer");
    }
    number("sim.null_delta_S", rc.null_effects.delta_S);
    number("sim.null_delta_Sc", rc.null_effects.delta_Sc);
    if (auto it = kv.find("jobs"); it != kv.end()) {
        rc.sim.jobs = parse_int("jobs", it->second);
        require(rc.sim.jobs >= 1, "jobs", "must be >= 1");
    }
    return rc;
}

KeyValues encode_scenario(const Scenario& s) {
    KeyValues kv;
    kv["lambda_S"] = format_number(s.lambda_S);
    kv["sigma"] = format_number(s.sigma);
    kv["alpha"] = format_number(s.alpha);
    kv["tau_S"] = format_number(s.tau_S);
    kv["tau_Sc"] = format_number(s.tau_Sc);
    kv["n_min"] = std::to_string(s.n_min);
    kv["cost.setup"] = format_number(s.costs.setup);
    kv["cost.per_patient"] = format_number(s.costs.per_patient);
    kv["cost.biomarker"] = format_number(s.costs.biomarker);
    kv["cost.screening"] = format_number(s.costs.screening);
    kv["reward.perspective"] = std::string(to_string(s.rewards.perspective));
    kv["reward.NrS"] = format_number(s.rewards.NrS);
    kv["reward.NrF"] = format_number(s.rewards.NrF);
    kv["reward.mu_S"] = format_number(s.rewards.mu_S);
    kv["reward.mu_F"] = format_number(s.rewards.mu_F);
    std::string atoms;
    for (const auto& a : s.prior.atoms()) {
        if (!atoms.empty()) atoms += "; ";
        atoms += format_number(a.effects.delta_S) + "," + format_number(a.effects.delta_Sc) + "," +
                 format_number(a.effects.prognostic_offset) + "," + format_number(a.weight);
    }
    kv["prior.atoms"] = atoms;
    return kv;
}

KeyValues encode_grid(const GridConfig& g) {
    KeyValues kv;
    std::string ns;
    for (int n : g.n_points) {
        if (!ns.empty()) ns += ",";
        ns += std::to_string(n);
    }
    kv["grid.n_points"] = ns;
    kv["grid.alpha_points"] = std::to_string(g.alpha_points);
    kv["refine.enabled"] = g.refine ? "true" : "false";
    kv["refine.tol"] = format_number(g.refine_tol);
    return kv;
}

}  // namespace trialopt::config
