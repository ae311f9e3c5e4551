#include "rulf/synth.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "rulf/error.hpp"
#include "rulf/rng.hpp"
#include "rulf/util.hpp"

namespace rulf {

namespace {

constexpr double kTau = 6.28318530717958647692;

// Components are cycled over the failure vocabulary in enum order.
constexpr Component kVocab[] = {Component::Transformer, Component::HydraulicGroup,
                                Component::Gearbox, Component::GeneratorBearing,
                                Component::Generator};
constexpr std::size_t kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);

// Stream tags keep the component, weight, run, and cell draws independent.
constexpr std::uint64_t kComponentStream = 101;
constexpr std::uint64_t kRunStream = 202;
constexpr std::uint64_t kWeightStream = 303;

void validate(const SynthConfig& cfg) {
    if (cfg.n_failures < 1 || cfg.n_failures > 99)
        raise(ErrorCode::InvalidConfig,
              "n_failures must be in [1, 99], got " + std::to_string(cfg.n_failures));
    if (cfg.m < 1) raise(ErrorCode::InvalidConfig, "m must be at least 1");
    if (cfg.n_informative < 1 || cfg.n_informative > cfg.m)
        raise(ErrorCode::InvalidConfig,
              "n_informative must be in [1, m]; got " + std::to_string(cfg.n_informative) +
                  " with m=" + std::to_string(cfg.m));
    if (cfg.n_min < 2 || cfg.n_min > cfg.n_max)
        raise(ErrorCode::InvalidConfig,
              "need 2 <= n_min <= n_max, got [" + std::to_string(cfg.n_min) + ", " +
                  std::to_string(cfg.n_max) + "]");
    if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma))
        raise(ErrorCode::InvalidConfig, "noise_sigma must be finite and non-negative");
    if (cfg.step_seconds < 1) raise(ErrorCode::InvalidConfig, "step_seconds must be at least 1");
}

double ramp_onset(const SynthConfig& cfg, std::size_t comp_idx) {
    Rng rng(mix_seed(mix_seed(cfg.seed, kComponentStream), comp_idx));
    return rng.uniform(0.65, 0.75);
}

std::string turbine_label(std::size_t run) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "T%02zu", run + 1);
    return buf;
}

} // namespace

std::vector<double> synth_ramp(const SynthConfig& cfg, std::size_t index, std::size_t n) {
    const double onset = ramp_onset(cfg, index % kVocabSize);
    std::vector<double> ramp(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
        if (t > onset) {
            const double u = (t - onset) / (1.0 - onset);
            ramp[i] = u * u;
        }
    }
    return ramp;
}

SynthOutput generate(const SynthConfig& cfg) {
    validate(cfg);

    SynthOutput out;
    out.param_names.reserve(cfg.m);
    for (std::size_t j = 0; j < cfg.m; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "param_%02zu", j + 1);
        out.param_names.push_back(buf);
    }

    // One signed weight per informative column, shared by every run so the
    // degradation geometry transfers across failures; only the ramp onset is
    // component-conditioned.
    std::vector<double> weights(cfg.n_informative);
    {
        Rng rng(mix_seed(cfg.seed, kWeightStream));
        for (std::size_t j = 0; j < cfg.n_informative; ++j) {
            const double w = rng.uniform(0.6, 1.0);
            weights[j] = rng.next_below(2) ? -w : w;
        }
    }

    for (std::size_t d = 0; d < cfg.n_failures; ++d) {
        const std::size_t comp_idx = d % kVocabSize;
        const std::string turbine = turbine_label(d);
        Rng rng(mix_seed(mix_seed(cfg.seed, kRunStream), d));

        const std::size_t n =
            cfg.n_min + static_cast<std::size_t>(rng.next_below(cfg.n_max - cfg.n_min + 1));
        const double amplitude = rng.uniform(0.9, 1.1);

        std::vector<double> mean(cfg.m), freq(cfg.m), phase(cfg.m);
        for (std::size_t j = 0; j < cfg.m; ++j) {
            mean[j] = rng.uniform(0.0, 1.0);
            freq[j] = 1.0 + static_cast<double>(rng.next_below(3));
            phase[j] = rng.next_double();
        }

        const std::vector<double> ramp = synth_ramp(cfg, d, n);
        for (std::size_t i = 0; i < n; ++i) {
            ScadaRecord rec;
            rec.timestamp = cfg.start_timestamp + static_cast<std::int64_t>(i) * cfg.step_seconds;
            rec.turbine = turbine;
            rec.values.resize(cfg.m);
            const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 1.0;
            for (std::size_t j = 0; j < cfg.m; ++j) {
                const double eps = rng.uniform(-1.0, 1.0);
                double v = mean[j] + cfg.noise_sigma * eps;
                if (j < cfg.n_informative) {
                    v += amplitude * weights[j] * ramp[i];
                    v += cfg.noise_sigma * 0.5 * std::sin(kTau * (freq[j] * t + phase[j]));
                }
                rec.values[j] = v;
            }
            out.records.push_back(std::move(rec));
        }

        FailureEvent event;
        event.turbine = turbine;
        event.timestamp = out.records.back().timestamp;
        event.component = kVocab[comp_idx];
        event.component_raw = component_name(kVocab[comp_idx]);
        event.remarks = "seeded synthetic run " + std::to_string(d + 1);
        event.failure_tag = static_cast<int>(d) + 1;
        out.events.push_back(std::move(event));
    }
    return out;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::InvalidConfig, path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object())
        raise(ErrorCode::InvalidConfig, path.string() + " must hold a JSON object");

    SynthConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "n_failures") cfg.n_failures = value.get<std::size_t>();
            else if (key == "n_min") cfg.n_min = value.get<std::size_t>();
            else if (key == "n_max") cfg.n_max = value.get<std::size_t>();
            else if (key == "m") cfg.m = value.get<std::size_t>();
            else if (key == "n_informative") cfg.n_informative = value.get<std::size_t>();
            else if (key == "noise_sigma") cfg.noise_sigma = value.get<double>();
            else if (key == "start_timestamp") cfg.start_timestamp = value.get<std::int64_t>();
            else if (key == "step_seconds") cfg.step_seconds = value.get<std::int64_t>();
            else
                raise(ErrorCode::InvalidConfig, "unknown key \"" + key + "\" in " + path.string());
        } catch (const nlohmann::json::exception&) {
            raise(ErrorCode::InvalidConfig,
                  "key \"" + key + "\" in " + path.string() + " has the wrong type");
        }
    }
    validate(cfg);
    return cfg;
}

void write_synth_csvs(const SynthOutput& out, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    std::string scada = "timestamp,turbine";
    for (const std::string& name : out.param_names) scada += "," + name;
    scada += "\n";
    for (const ScadaRecord& rec : out.records) {
        scada += format_iso8601(rec.timestamp) + "," + rec.turbine;
        for (double v : rec.values) scada += "," + format_double(v);
        scada += "\n";
    }
    write_file_atomic(dir / "scada.csv", scada);

    std::string failures = "turbine,timestamp,component,remarks\n";
    for (const FailureEvent& event : out.events)
        failures += event.turbine + "," + format_iso8601(event.timestamp) + "," +
                    component_name(event.component, event.component_raw) + "," + event.remarks +
                    "\n";
    write_file_atomic(dir / "failures.csv", failures);
}

} // namespace rulf
