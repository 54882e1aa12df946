#pragma once
// Command-line driver. Each run reads one config document (plus --set
// overrides), writes its CSV tables into the output directory and a
// <command>_manifest.json describing the run.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "trialopt/config.hpp"

namespace trialopt::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitNumeric = 3,
};

struct RunManifest {
    std::string command;
    config::KeyValues scenario;  // flat keys, same schema as the config document
    config::KeyValues grid;
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
    double wall_clock_seconds = 0.0;
    std::vector<std::string> outputs;
    nlohmann::json results;  // every number written to the CSV outputs

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

// First line of every CSV output. table names the schema when a command
// writes more than one table.
std::string schema_line(const std::string& command, const std::string& table = {});

// Runs one command. args excludes the program name. Diagnostics go to err,
// a short summary to out.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trialopt::cli
