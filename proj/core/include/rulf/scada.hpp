#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rulf/preprocess.hpp"
#include "rulf/tensor.hpp"

namespace rulf {

enum class Component {
    Transformer,
    HydraulicGroup,
    Gearbox,
    GeneratorBearing,
    Generator,
    Other,
};

// Canonical label for a component; Other falls back to the raw text it was
// parsed from.
std::string component_name(Component c, const std::string& raw = "");
Component component_from_string(const std::string& text);

struct ScadaRecord {
    std::int64_t timestamp = 0;
    std::string turbine;
    std::vector<double> values;
};

struct ScadaParseResult {
    std::vector<ScadaRecord> records; // sorted by (turbine, timestamp)
    std::vector<std::string> param_names;
    std::size_t dropped_rows = 0;
};

struct FailureEvent {
    std::string turbine;
    std::int64_t timestamp = 0;
    Component component = Component::Other;
    std::string component_raw;
    std::string remarks;
    int failure_tag = 0; // 1-based, assigned in (turbine, timestamp) order
};

// All logs of one turbine from just after its previous failure up to and
// including the failure timestamp.
struct FailureDataset {
    int failure_tag = 0;
    std::string turbine;
    Component component = Component::Other;
    std::string component_raw;
    std::string remarks;
    Tensor matrix; // {N, M}
    std::vector<std::int64_t> timestamps;
    bool valid = false;

    std::size_t n() const { return timestamps.size(); }
    std::size_t m() const { return matrix.rank() > 1 ? matrix.dim(1) : 0; }
};

struct IngestReportEntry {
    int failure_tag = 0;
    std::string turbine;
    std::string component;
    std::size_t logs = 0;
    bool valid = false;
    std::string note;
};

// Reads a SCADA CSV with header "timestamp,turbine,<p1>,...". Rows with a
// missing or unparseable cell are dropped and counted, never fatal. Two logs
// of one turbine sharing a timestamp are an error.
ScadaParseResult parse_scada(const std::filesystem::path& path, std::size_t expected_m = 0);

// Reads a failure CSV with header "turbine,timestamp,component,remarks" and
// assigns failure tags in (turbine, timestamp) order. Unknown component
// labels become Other. An empty file yields an empty list.
std::vector<FailureEvent> parse_failures(const std::filesystem::path& path);

struct BuildResult {
    std::vector<FailureDataset> datasets;
    std::vector<IngestReportEntry> report;
};

// Splits the record stream into one dataset per failure event. Events whose
// window holds no records produce a report entry but no dataset.
BuildResult build_failure_datasets(const std::vector<ScadaRecord>& records,
                                   const std::vector<FailureEvent>& events, std::size_t min_logs);

LabeledDataset make_labeled(const FailureDataset& ds);

void save_failure_dataset(const FailureDataset& ds, const std::filesystem::path& dir);
FailureDataset load_failure_dataset(const std::filesystem::path& dir);
// Loads every failure_<tag> subdirectory, ordered by tag.
std::vector<FailureDataset> load_failure_datasets(const std::filesystem::path& dir);

void write_ingest_report(const std::vector<IngestReportEntry>& report,
                         const std::filesystem::path& path);

} // namespace rulf
