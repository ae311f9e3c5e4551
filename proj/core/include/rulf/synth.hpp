#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rulf/scada.hpp"

namespace rulf {

// Deterministic generator of desk-scale multi-failure fixtures with
// correlated degradation signatures.
struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t n_failures = 4;
    std::size_t n_min = 800; // logs per run, inclusive bounds
    std::size_t n_max = 1200;
    std::size_t m = 10;            // sensor parameters per log
    std::size_t n_informative = 6; // leading columns carrying the degradation signal
    double noise_sigma = 0.05;
    std::int64_t start_timestamp = 1483228800; // 2017-01-01T00:00:00Z
    std::int64_t step_seconds = 600;
};

// Reads a flat JSON document using the SynthConfig field names; every key is
// optional, unknown keys are rejected.
SynthConfig load_synth_config(const std::filesystem::path& path);

struct SynthOutput {
    std::vector<ScadaRecord> records; // sorted by (turbine, timestamp)
    std::vector<FailureEvent> events; // one per run, at its final log
    std::vector<std::string> param_names;
};

// The hidden degradation profile of run `index` over `n` logs: zero through
// the healthy region, then a quadratic climb that reaches 1 at the final log.
// Runs assigned the same component label share one ramp onset.
std::vector<double> synth_ramp(const SynthConfig& cfg, std::size_t index, std::size_t n);

// Each run lives on its own turbine (T01, T02, ...) and ends in a failure at
// its last log. Informative columns mix the hidden ramp with one signed
// weight per column shared by every run, plus per-run amplitude jitter; the
// remaining columns are pure stationary noise. Fully deterministic in
// cfg.seed.
SynthOutput generate(const SynthConfig& cfg);

// scada.csv + failures.csv in the formats parse_scada/parse_failures read.
void write_synth_csvs(const SynthOutput& out, const std::filesystem::path& dir);

} // namespace rulf
