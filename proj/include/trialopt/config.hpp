#pragma once
// Flat key = value configuration documents.
//
//   # comment
//   lambda_S = 0.5
//   reward.perspective = sponsor
//   prior.kind = weak
//   prior.delta = 0.3
//
// Keys are case-sensitive. Unknown keys and duplicate keys are errors.
// Missing keys take the defaults of the reference scenario (Case 1 costs
// and rewards, sponsor view, weak prior with delta 0.3, lambda_S 0.5).
//
// prior.atoms lists atoms separated by ';', each "delta_S,delta_Sc,weight"
// or "delta_S,delta_Sc,prognostic_offset,weight". It excludes prior.kind.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialopt/mc_oracle.hpp"
#include "trialopt/model.hpp"
#include "trialopt/optimizer.hpp"

namespace trialopt::config {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_document(std::string_view text);
KeyValues load_document(const std::string& path);
std::string write_document(const KeyValues& kv);

// "key=value" override from the command line. Overrides replace document
// entries.
void apply_override(KeyValues& kv, std::string_view assignment);

// Locale-independent shortest round-trip formatting.
std::string format_number(double x);
double parse_number(const std::string& key, std::string_view text);
int parse_int(const std::string& key, std::string_view text);
bool parse_bool(const std::string& key, std::string_view text);
std::vector<double> parse_number_list(const std::string& key, std::string_view text);

struct PriorSource {
    std::optional<PriorKind> kind;  // set when built from prior.kind
    double delta = 0.3;
};

// Everything a run may need, decoded from one document.
struct RunConfig {
    Scenario scenario;
    PriorSource prior_source;
    DesignSpec design = DesignSpec::classical(100);
    GridConfig grid;
    std::vector<double> sweep_lambdas = linspace(0.05, 0.95, 19);
    std::vector<double> contour_lambdas = linspace(0.05, 0.95, 10);
    std::vector<double> contour_deltas = linspace(0.0, 1.0, 10);
    mc::SimConfig sim;
    EffectPair null_effects{0.0, 0.0, 0.0};
};

// Throws ConfigError naming the key on unknown keys, bad values and domain
// violations.
RunConfig decode(const KeyValues& kv);

// Flat keys describing a scenario; decode(encode_scenario(s)).scenario == s
// for every valid scenario.
KeyValues encode_scenario(const Scenario& s);
KeyValues encode_grid(const GridConfig& g);

bool is_known_key(std::string_view key);

std::string_view to_string(mc::StrataMode mode);
std::string_view to_string(mc::Estimand estimand);

}  // namespace trialopt::config
