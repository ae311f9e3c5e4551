#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rulf/error.hpp"
#include "rulf/eval.hpp"
#include "rulf/scada.hpp"
#include "rulf/synth.hpp"
#include "rulf/tensor.hpp"
#include "rulf/util.hpp"
#include "support/helpers.hpp"

using testsup::TempDir;

namespace {

// Pearson correlation between one generated column and a reference series.
double corr_with(const std::vector<double>& column, const std::vector<double>& reference) {
    REQUIRE(column.size() == reference.size());
    rulf::Tensor two({column.size(), 2});
    for (std::size_t i = 0; i < column.size(); ++i) {
        two.at(i, 0) = column[i];
        two.at(i, 1) = reference[i];
    }
    return rulf::correlation_matrix(two).at(0, 1);
}

std::map<std::string, std::vector<rulf::ScadaRecord>> by_turbine(const rulf::SynthOutput& out) {
    std::map<std::string, std::vector<rulf::ScadaRecord>> runs;
    for (const rulf::ScadaRecord& rec : out.records) runs[rec.turbine].push_back(rec);
    return runs;
}

std::vector<double> column_of(const std::vector<rulf::ScadaRecord>& records, std::size_t j) {
    std::vector<double> col;
    col.reserve(records.size());
    for (const rulf::ScadaRecord& rec : records) col.push_back(rec.values[j]);
    return col;
}

} // namespace

TEST_CASE("a fixture is deterministic in its seed") {
    rulf::SynthConfig cfg;
    cfg.seed = 99;
    cfg.n_failures = 3;
    cfg.n_min = 60;
    cfg.n_max = 90;
    cfg.m = 5;
    cfg.n_informative = 3;

    const rulf::SynthOutput a = rulf::generate(cfg);
    const rulf::SynthOutput b = rulf::generate(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].timestamp == b.records[i].timestamp);
        CHECK(a.records[i].turbine == b.records[i].turbine);
        CHECK(a.records[i].values == b.records[i].values);
    }
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].timestamp == b.events[i].timestamp);
        CHECK(a.events[i].remarks == b.events[i].remarks);
    }
    CHECK(a.param_names == b.param_names);

    cfg.seed = 100;
    const rulf::SynthOutput c = rulf::generate(cfg);
    bool differs = c.records.size() != a.records.size();
    for (std::size_t i = 0; !differs && i < a.records.size(); ++i)
        differs = a.records[i].values != c.records[i].values;
    CHECK(differs);
}

TEST_CASE("the fixture matches its configuration") {
    rulf::SynthConfig cfg;
    cfg.seed = 7;
    cfg.n_failures = 6;
    cfg.n_min = 80;
    cfg.n_max = 120;
    cfg.m = 10;

    const rulf::SynthOutput out = rulf::generate(cfg);
    REQUIRE(out.events.size() == 6);
    REQUIRE(out.param_names.size() == 10);
    CHECK(out.param_names[0] == "param_01");
    CHECK(out.param_names[9] == "param_10");

    // Components cycle the failure vocabulary; the sixth run wraps around.
    const std::vector<rulf::Component> expected = {
        rulf::Component::Transformer,      rulf::Component::HydraulicGroup,
        rulf::Component::Gearbox,          rulf::Component::GeneratorBearing,
        rulf::Component::Generator,        rulf::Component::Transformer,
    };
    const auto runs = by_turbine(out);
    REQUIRE(runs.size() == 6);
    for (std::size_t d = 0; d < 6; ++d) {
        const rulf::FailureEvent& event = out.events[d];
        CHECK(event.failure_tag == static_cast<int>(d) + 1);
        CHECK(event.component == expected[d]);
        CHECK(event.remarks == "seeded synthetic run " + std::to_string(d + 1));

        const auto& records = runs.at(event.turbine);
        CHECK(records.size() >= 80);
        CHECK(records.size() <= 120);
        CHECK(event.timestamp == records.back().timestamp);
        for (std::size_t i = 0; i < records.size(); ++i) {
            CHECK(records[i].timestamp ==
                  cfg.start_timestamp + static_cast<std::int64_t>(i) * cfg.step_seconds);
            CHECK(records[i].values.size() == 10);
        }
    }
    CHECK(out.events[0].turbine == "T01");
    CHECK(out.events[5].turbine == "T06");
}

TEST_CASE("noiseless informative columns are affine in the hidden ramp") {
    rulf::SynthConfig cfg;
    cfg.seed = 21;
    cfg.n_failures = 2;
    cfg.n_min = 100;
    cfg.n_max = 100;
    cfg.m = 5;
    cfg.n_informative = 5;
    cfg.noise_sigma = 0.0;

    const rulf::SynthOutput out = rulf::generate(cfg);
    const auto runs = by_turbine(out);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& records = runs.at(out.events[d].turbine);
        const std::vector<double> ramp = rulf::synth_ramp(cfg, d, records.size());
        for (std::size_t j = 0; j < cfg.m; ++j) {
            const double r = corr_with(column_of(records, j), ramp);
            CHECK(std::fabs(r) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("informative columns track the ramp under noise, noise columns do not") {
    rulf::SynthConfig cfg;
    cfg.seed = 5;
    cfg.n_failures = 5; // one run per component label
    cfg.n_min = 800;
    cfg.n_max = 1000;
    cfg.m = 10;
    cfg.n_informative = 6;
    cfg.noise_sigma = 0.1;

    const rulf::SynthOutput out = rulf::generate(cfg);
    const auto runs = by_turbine(out);
    for (std::size_t d = 0; d < 5; ++d) {
        const auto& records = runs.at(out.events[d].turbine);
        const std::vector<double> ramp = rulf::synth_ramp(cfg, d, records.size());
        for (std::size_t j = 0; j < cfg.m; ++j) {
            const double r = corr_with(column_of(records, j), ramp);
            CAPTURE(d);
            CAPTURE(j);
            if (j < cfg.n_informative)
                CHECK(std::fabs(r) >= 0.5);
            else
                CHECK(std::fabs(r) <= 0.2);
        }
    }
}

TEST_CASE("runs of one component share a ramp onset") {
    rulf::SynthConfig cfg;
    cfg.seed = 77;
    const std::vector<double> first = rulf::synth_ramp(cfg, 0, 200);
    CHECK(rulf::synth_ramp(cfg, 5, 200) == first); // indices 0 and 5 share a component

    bool any_differs = false;
    const std::vector<double> other = rulf::synth_ramp(cfg, 1, 200);
    for (std::size_t i = 0; i < first.size(); ++i)
        if (first[i] != other[i]) any_differs = true;
    CHECK(any_differs);

    // The ramp is flat through the healthy region and reaches 1 at the end.
    CHECK(first.front() == 0.0);
    CHECK(first.back() == 1.0);
    for (std::size_t i = 1; i < first.size(); ++i) CHECK(first[i] >= first[i - 1]);
}

TEST_CASE("the CSV round trip is bit-exact") {
    TempDir dir("synth_csv");
    rulf::SynthConfig cfg;
    cfg.seed = 31;
    cfg.n_failures = 3;
    cfg.n_min = 50;
    cfg.n_max = 80;
    cfg.m = 4;
    cfg.n_informative = 2;

    const rulf::SynthOutput out = rulf::generate(cfg);
    rulf::write_synth_csvs(out, dir.path());

    const rulf::ScadaParseResult parsed = rulf::parse_scada(dir.path() / "scada.csv");
    CHECK(parsed.dropped_rows == 0);
    CHECK(parsed.param_names == out.param_names);
    REQUIRE(parsed.records.size() == out.records.size());
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        CHECK(parsed.records[i].timestamp == out.records[i].timestamp);
        CHECK(parsed.records[i].turbine == out.records[i].turbine);
        CHECK(parsed.records[i].values == out.records[i].values);
    }

    const std::vector<rulf::FailureEvent> events =
        rulf::parse_failures(dir.path() / "failures.csv");
    REQUIRE(events.size() == out.events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events[i].turbine == out.events[i].turbine);
        CHECK(events[i].timestamp == out.events[i].timestamp);
        CHECK(events[i].component == out.events[i].component);
        CHECK(events[i].remarks == out.events[i].remarks);
        CHECK(events[i].failure_tag == out.events[i].failure_tag);
    }

    const rulf::BuildResult built = rulf::build_failure_datasets(parsed.records, events, 10);
    REQUIRE(built.datasets.size() == 3);
    const auto runs = by_turbine(out);
    for (const rulf::FailureDataset& ds : built.datasets) {
        CHECK(ds.valid);
        const auto& records = runs.at(ds.turbine);
        REQUIRE(ds.n() == records.size());
        for (std::size_t i = 0; i < ds.n(); ++i)
            for (std::size_t j = 0; j < ds.m(); ++j)
                CHECK(ds.matrix.at(i, j) == records[i].values[j]);
    }
}

TEST_CASE("invalid fixture configurations are rejected") {
    auto expect_invalid = [](rulf::SynthConfig cfg) {
        try {
            rulf::generate(cfg);
            FAIL("expected a config error");
        } catch (const rulf::Error& e) {
            CHECK(e.code() == rulf::ErrorCode::InvalidConfig);
        }
    };

    rulf::SynthConfig cfg;
    cfg.n_failures = 0;
    expect_invalid(cfg);
    cfg = {};
    cfg.n_failures = 100; // turbine labels stop at T99
    expect_invalid(cfg);
    cfg = {};
    cfg.n_informative = 0;
    expect_invalid(cfg);
    cfg = {};
    cfg.n_informative = cfg.m + 1;
    expect_invalid(cfg);
    cfg = {};
    cfg.n_min = 1;
    expect_invalid(cfg);
    cfg = {};
    cfg.n_min = 50;
    cfg.n_max = 40;
    expect_invalid(cfg);
    cfg = {};
    cfg.noise_sigma = -0.1;
    expect_invalid(cfg);
    cfg = {};
    cfg.step_seconds = 0;
    expect_invalid(cfg);
}

TEST_CASE("the JSON config names every field and rejects strangers") {
    TempDir dir("synth_json");
    const auto path = dir.path() / "synth.json";

    rulf::write_file_atomic(path, R"({
        "seed": 42,
        "n_failures": 5,
        "n_min": 300,
        "n_max": 400,
        "m": 8,
        "n_informative": 4,
        "noise_sigma": 0.02,
        "start_timestamp": 1500000000,
        "step_seconds": 300
    })");
    const rulf::SynthConfig cfg = rulf::load_synth_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.n_failures == 5);
    CHECK(cfg.n_min == 300);
    CHECK(cfg.n_max == 400);
    CHECK(cfg.m == 8);
    CHECK(cfg.n_informative == 4);
    CHECK(cfg.noise_sigma == 0.02);
    CHECK(cfg.start_timestamp == 1500000000);
    CHECK(cfg.step_seconds == 300);

    rulf::write_file_atomic(path, R"({})");
    const rulf::SynthConfig defaults = rulf::load_synth_config(path);
    CHECK(defaults.n_failures == 4);
    CHECK(defaults.n_min == 800);
    CHECK(defaults.n_max == 1200);
    CHECK(defaults.m == 10);
    CHECK(defaults.n_informative == 6);
    CHECK(defaults.noise_sigma == 0.05);

    rulf::write_file_atomic(path, R"({"sigma": 0.1})");
    try {
        rulf::load_synth_config(path);
        FAIL("expected an unknown-key error");
    } catch (const rulf::Error& e) {
        CHECK(e.code() == rulf::ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("sigma") != std::string::npos);
    }

    rulf::write_file_atomic(path, R"({"m": "ten"})");
    try {
        rulf::load_synth_config(path);
        FAIL("expected a type error");
    } catch (const rulf::Error& e) {
        CHECK(e.code() == rulf::ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("wrong type") != std::string::npos);
    }

    rulf::write_file_atomic(path, R"([1, 2])");
    CHECK_THROWS_AS(rulf::load_synth_config(path), rulf::Error);

    rulf::write_file_atomic(path, R"({"n_min": 5, "n_max": 3})");
    CHECK_THROWS_AS(rulf::load_synth_config(path), rulf::Error);
}
