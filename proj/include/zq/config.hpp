#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "zq/model.hpp"
#include "zq/sim.hpp"

namespace zq {

/// Raised on malformed configuration input (exit code 2 at the CLI).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutputConfig {
    std::string out_dir = "out";
    bool dump_trajectory = false;
    std::uint64_t ring_capacity = 4096;
};

struct RunConfig {
    int N = 100;                  // single-trial commands
    std::vector<int> N_list;      // sweep rows
    int seeds_per_N = 1;
    std::uint64_t seed = 1;
    double stop_eps = 1e-4;
    std::uint64_t settle_T = 10000;
    std::uint64_t max_T = 50000000;
    std::uint64_t burn_in = 0;

    TrialSettings trial_settings() const {
        return TrialSettings{stop_eps, settle_T, max_T, burn_in};
    }
};

/// Typed experiment configuration; parses from a strict JSON document
/// (unknown keys rejected) and serializes back canonically.
struct ExperimentConfig {
    SystemModel model;
    SchemeParams scheme;
    RunConfig run;
    OutputConfig output;

    SchemeParams scheme_with_N(int N) const { return scheme.with_N(N); }
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Built-in presets: "reproduce-paper" carries the published scalar
/// experiment; "smoke" is a seconds-scale shakeout.
std::string preset_config_text(const std::string& name);

} // namespace zq
