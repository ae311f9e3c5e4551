#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rulf/model.hpp"
#include "rulf/preprocess.hpp"
#include "rulf/tensor.hpp"

namespace rulf {

// Per-pair predictions over one failure run, on the scaled degradation axis.
// Pair q speaks about log coordinate q*stride + l - 1 + f.
struct ForecastTrace {
    std::vector<double> predictions;
    std::vector<double> targets;
    std::size_t l = 0;
    std::size_t f = 0;
    std::size_t stride = 1;
    std::size_t actual_failure_index = 0; // last log of the source run

    std::size_t count() const { return predictions.size(); }
    std::size_t log_index(std::size_t q) const { return q * stride + l - 1 + f; }
};

ForecastTrace forecast(const Model& model, const WindowedDataset& data);

// Log coordinate of the first prediction at or below the threshold; empty when
// the trace never reaches it. Crossings are never interpolated.
std::optional<std::size_t> detect_crossing(const ForecastTrace& trace, double threshold = 0.0);

struct DkResult {
    std::int64_t forecast_index = 0;
    std::int64_t actual_index = 0;
    std::int64_t dk_logs = 0;    // negative: forecast precedes the actual failure
    std::int64_t dk_minutes = 0; // ten minutes per log
    std::string rendered;
};

// Temporal disparity between the forecasted and the actual end of life, both
// in log coordinates.
DkResult compute_dk(std::int64_t forecast_index, std::int64_t actual_index);

// Human form of a signed minute count: "40 minutes behind", "2.7 hours after",
// "1 day behind", "0 minutes". Hours and days are rendered to one decimal.
std::string render_duration(std::int64_t dk_minutes);

// Pearson correlation of the columns of an {N, M} matrix. Constant columns
// correlate 0 with everything and 1 with themselves. Needs N >= 2.
Tensor correlation_matrix(const Tensor& matrix);

struct ExperimentResult {
    int failure_tag = 0;
    std::string model;
    std::size_t data_logs_available = 0;
    std::string component;
    std::optional<DkResult> dk; // absent: no forecasted failure
    ForecastTrace trace;
};

// Writes dk_table.csv plus one trace_<failure>_<model>.csv (and .svg chart
// unless disabled) per experiment.
void emit_report(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir, bool svg = true);

} // namespace rulf
