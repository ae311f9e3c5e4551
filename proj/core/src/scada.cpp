#include "rulf/scada.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"
#include "rulf/error.hpp"
#include "rulf/util.hpp"

namespace rulf {

std::string component_name(Component c, const std::string& raw) {
    switch (c) {
    case Component::Transformer: return "Transformer";
    case Component::HydraulicGroup: return "Hydraulic group";
    case Component::Gearbox: return "Gearbox";
    case Component::GeneratorBearing: return "Generator bearing";
    case Component::Generator: return "Generator";
    case Component::Other: return raw.empty() ? "Other" : raw;
    }
    return "Other";
}

Component component_from_string(const std::string& text) {
    const std::string t = trim(text);
    if (t == "Transformer") return Component::Transformer;
    if (t == "Hydraulic group") return Component::HydraulicGroup;
    if (t == "Gearbox") return Component::Gearbox;
    if (t == "Generator bearing") return Component::GeneratorBearing;
    if (t == "Generator") return Component::Generator;
    return Component::Other;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

} // namespace

ScadaParseResult parse_scada(const std::filesystem::path& path, std::size_t expected_m) {
    auto lines = read_lines(path);
    if (lines.empty()) raise(ErrorCode::EmptyFile, path.string() + " holds no data");

    auto header = split_csv_line(trim(lines[0]));
    if (header.size() < 3 || trim(header[0]) != "timestamp" || trim(header[1]) != "turbine")
        raise(ErrorCode::MalformedHeader,
              path.string() + " must start with 'timestamp,turbine,<params...>'");
    const std::size_t m = header.size() - 2;
    if (expected_m != 0 && m != expected_m)
        raise(ErrorCode::MalformedHeader, path.string() + " carries " + std::to_string(m) +
                                              " parameter columns, expected " +
                                              std::to_string(expected_m));

    ScadaParseResult result;
    result.param_names.assign(header.begin() + 2, header.end());
    for (auto& name : result.param_names) name = trim(name);
    result.records.reserve(lines.size() - 1);

    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != m + 2) {
            ++result.dropped_rows;
            continue;
        }
        auto ts = parse_iso8601(fields[0]);
        const std::string turbine = trim(fields[1]);
        if (!ts || turbine.empty()) {
            ++result.dropped_rows;
            continue;
        }
        ScadaRecord rec;
        rec.timestamp = *ts;
        rec.turbine = turbine;
        rec.values.reserve(m);
        bool ok = true;
        for (std::size_t j = 0; j < m; ++j) {
            auto v = parse_double(fields[2 + j]);
            if (!v) {
                ok = false;
                break;
            }
            rec.values.push_back(*v);
        }
        if (!ok) {
            ++result.dropped_rows;
            continue;
        }
        result.records.push_back(std::move(rec));
    }

    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const ScadaRecord& a, const ScadaRecord& b) {
                         if (a.turbine != b.turbine) return a.turbine < b.turbine;
                         return a.timestamp < b.timestamp;
                     });
    for (std::size_t i = 1; i < result.records.size(); ++i) {
        const auto& prev = result.records[i - 1];
        const auto& cur = result.records[i];
        if (prev.turbine == cur.turbine && prev.timestamp == cur.timestamp)
            raise(ErrorCode::NonMonotonicTimestamps,
                  "turbine " + cur.turbine + " logs " + format_iso8601(cur.timestamp) + " twice");
    }
    return result;
}

std::vector<FailureEvent> parse_failures(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) return {};

    auto header = split_csv_line(trim(lines[0]));
    if (header.size() < 4 || trim(header[0]) != "turbine" || trim(header[1]) != "timestamp" ||
        trim(header[2]) != "component" || trim(header[3]) != "remarks")
        raise(ErrorCode::MalformedHeader,
              path.string() + " must start with 'turbine,timestamp,component,remarks'");

    std::vector<FailureEvent> events;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty()) continue;
        // remarks is free text: keep any commas it contains
        auto fields = split_csv_line(line, 4);
        if (fields.size() < 4)
            raise(ErrorCode::MalformedHeader,
                  path.string() + " row " + std::to_string(li + 1) + " has too few columns");
        FailureEvent ev;
        ev.turbine = trim(fields[0]);
        auto ts = parse_iso8601(fields[1]);
        if (!ts)
            raise(ErrorCode::MalformedTimestamp, path.string() + " row " + std::to_string(li + 1) +
                                                     ": cannot parse '" + trim(fields[1]) + "'");
        ev.timestamp = *ts;
        ev.component_raw = trim(fields[2]);
        ev.component = component_from_string(ev.component_raw);
        ev.remarks = trim(fields[3]);
        events.push_back(std::move(ev));
    }

    std::stable_sort(events.begin(), events.end(), [](const FailureEvent& a, const FailureEvent& b) {
        if (a.turbine != b.turbine) return a.turbine < b.turbine;
        return a.timestamp < b.timestamp;
    });
    for (std::size_t i = 0; i < events.size(); ++i) events[i].failure_tag = static_cast<int>(i + 1);
    return events;
}

BuildResult build_failure_datasets(const std::vector<ScadaRecord>& records,
                                   const std::vector<FailureEvent>& events, std::size_t min_logs) {
    std::vector<FailureEvent> ordered = events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const FailureEvent& a, const FailureEvent& b) {
                         return a.failure_tag < b.failure_tag;
                     });

    BuildResult out;
    std::string prev_turbine;
    std::int64_t prev_failure_ts = 0;
    for (const FailureEvent& ev : ordered) {
        const bool first_of_turbine = ev.turbine != prev_turbine;
        const std::int64_t lower = first_of_turbine ? std::numeric_limits<std::int64_t>::min()
                                                    : prev_failure_ts;
        prev_turbine = ev.turbine;
        prev_failure_ts = ev.timestamp;

        // records are sorted by (turbine, timestamp); select (lower, ev.ts]
        auto lo = std::lower_bound(records.begin(), records.end(), ev.turbine,
                                   [](const ScadaRecord& r, const std::string& t) {
                                       return r.turbine < t;
                                   });
        std::vector<const ScadaRecord*> selected;
        for (auto it = lo; it != records.end() && it->turbine == ev.turbine; ++it)
            if (it->timestamp > lower && it->timestamp <= ev.timestamp) selected.push_back(&*it);

        IngestReportEntry entry;
        entry.failure_tag = ev.failure_tag;
        entry.turbine = ev.turbine;
        entry.component = component_name(ev.component, ev.component_raw);
        entry.logs = selected.size();

        if (selected.empty()) {
            entry.valid = false;
            entry.note = "no records for turbine in failure window";
            out.report.push_back(std::move(entry));
            continue;
        }

        FailureDataset ds;
        ds.failure_tag = ev.failure_tag;
        ds.turbine = ev.turbine;
        ds.component = ev.component;
        ds.component_raw = ev.component_raw;
        ds.remarks = ev.remarks;
        const std::size_t n = selected.size();
        const std::size_t m = selected.front()->values.size();
        ds.matrix = Tensor({n, m});
        ds.timestamps.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            ds.timestamps[i] = selected[i]->timestamp;
            for (std::size_t j = 0; j < m; ++j) ds.matrix.at(i, j) = selected[i]->values[j];
        }
        ds.valid = n >= min_logs;

        entry.valid = ds.valid;
        if (!ds.valid)
            entry.note = "fewer than " + std::to_string(min_logs) + " logs";
        else if (ev.timestamp - ds.timestamps.back() > 600)
            entry.note = "failure is " + std::to_string(ev.timestamp - ds.timestamps.back()) +
                         "s past the last log";
        out.report.push_back(std::move(entry));
        out.datasets.push_back(std::move(ds));
    }
    return out;
}

LabeledDataset make_labeled(const FailureDataset& ds) {
    LabeledDataset out = make_labeled(ds.matrix);
    out.failure_tag = ds.failure_tag;
    out.turbine = ds.turbine;
    out.component = component_name(ds.component, ds.component_raw);
    return out;
}

void save_failure_dataset(const FailureDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["failure_tag"] = ds.failure_tag;
    meta["turbine"] = ds.turbine;
    meta["component"] = component_name(ds.component, ds.component_raw);
    meta["remarks"] = ds.remarks;
    meta["n"] = ds.n();
    meta["m"] = ds.m();
    meta["valid"] = ds.valid;
    if (!ds.timestamps.empty()) {
        meta["first_timestamp"] = format_iso8601(ds.timestamps.front());
        meta["last_timestamp"] = format_iso8601(ds.timestamps.back());
    }
    write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");

    std::string matrix;
    matrix.reserve(ds.matrix.size() * 8);
    for (std::size_t i = 0; i < ds.matrix.size(); ++i) append_f64(matrix, ds.matrix[i]);
    write_file_atomic(dir / "matrix.bin", matrix);

    std::string ts;
    ts.reserve(ds.timestamps.size() * 8);
    for (std::int64_t v : ds.timestamps) append_i64(ts, v);
    write_file_atomic(dir / "timestamps.bin", ts);
}

FailureDataset load_failure_dataset(const std::filesystem::path& dir) {
    FailureDataset ds;
    try {
        auto meta = nlohmann::json::parse(read_text_file(dir / "meta.json"));
        ds.failure_tag = meta.at("failure_tag").get<int>();
        ds.turbine = meta.at("turbine").get<std::string>();
        ds.component_raw = meta.at("component").get<std::string>();
        ds.component = component_from_string(ds.component_raw);
        ds.remarks = meta.at("remarks").get<std::string>();
        ds.valid = meta.at("valid").get<bool>();
        const std::size_t n = meta.at("n").get<std::size_t>();
        const std::size_t m = meta.at("m").get<std::size_t>();

        const std::string matrix = read_text_file(dir / "matrix.bin");
        if (matrix.size() != n * m * 8)
            raise(ErrorCode::IoError, "matrix.bin has wrong size in " + dir.string());
        ds.matrix = Tensor({n, m});
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n * m; ++i) ds.matrix[i] = read_f64(matrix, pos);

        const std::string ts = read_text_file(dir / "timestamps.bin");
        if (ts.size() != n * 8)
            raise(ErrorCode::IoError, "timestamps.bin has wrong size in " + dir.string());
        ds.timestamps.resize(n);
        pos = 0;
        for (std::size_t i = 0; i < n; ++i) ds.timestamps[i] = read_i64(ts, pos);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, "bad meta.json in " + dir.string() + ": " + e.what());
    }
    return ds;
}

std::vector<FailureDataset> load_failure_datasets(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        raise(ErrorCode::IoError, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> subdirs;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("failure_", 0) == 0)
            subdirs.push_back(entry.path());
    std::vector<FailureDataset> out;
    out.reserve(subdirs.size());
    for (const auto& sub : subdirs) out.push_back(load_failure_dataset(sub));
    std::sort(out.begin(), out.end(), [](const FailureDataset& a, const FailureDataset& b) {
        return a.failure_tag < b.failure_tag;
    });
    return out;
}

void write_ingest_report(const std::vector<IngestReportEntry>& report,
                         const std::filesystem::path& path) {
    std::string csv = "failure_tag,turbine,component,logs,valid,note\n";
    for (const auto& e : report) {
        csv += std::to_string(e.failure_tag) + "," + e.turbine + "," + e.component + "," +
               std::to_string(e.logs) + "," + (e.valid ? "true" : "false") + "," + e.note + "\n";
    }
    write_file_atomic(path, csv);
}

} // namespace rulf
