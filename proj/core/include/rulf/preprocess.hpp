#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rulf/tensor.hpp"

namespace rulf {

struct ScalingParams {
    std::vector<double> col_min;
    std::vector<double> col_max;
};

// A failure run ready for windowing: per-column min-max scaled sensor matrix
// and the degradation labels divided by label_scale so every dataset shares
// the same [0,1] axis regardless of its length.
struct LabeledDataset {
    Tensor matrix; // {N, M}, scaled
    std::vector<double> labels;
    ScalingParams scaling;
    double label_scale = 1.0;

    int failure_tag = 0;
    std::string turbine;
    std::string component;

    std::size_t n() const { return matrix.rank() ? matrix.dim(0) : 0; }
    std::size_t m() const { return matrix.rank() > 1 ? matrix.dim(1) : 0; }
};

// Raw sliding-window pairs before the forecast shift. Window z covers rows
// z..z+l-1 and carries the label of row z+l, the first row after the window.
struct SlidePairs {
    Tensor windows; // {R, l, M}
    std::vector<double> labels;
    std::size_t l = 0;
    std::size_t m = 0;

    std::size_t count() const { return labels.size(); }
    Tensor window_at(std::size_t z) const;
};

// Supervised forecasting set. Pair q covers rows q*stride .. q*stride+l-1 and
// targets the label f logs after the window's last row, so the final pair
// targets the label at the last log. For stride 1, g = N - l - f + 1.
struct WindowedDataset {
    Tensor inputs; // {g, l, M}
    std::vector<double> targets;
    std::size_t l = 0;
    std::size_t f = 0;
    std::size_t stride = 1;
    std::size_t n_source = 0;
    ScalingParams scaling;
    double label_scale = 1.0;

    int failure_tag = 0;
    std::string turbine;
    std::string component;

    std::size_t count() const { return targets.size(); }
    std::size_t m() const { return inputs.rank() > 2 ? inputs.dim(2) : 0; }
    Tensor window_at(std::size_t q) const;
    // Log coordinate of pair q's target in the source dataset.
    std::size_t log_index(std::size_t q) const { return q * stride + l - 1 + f; }
};

// Remaining-log-count labels N-1, N-2, ..., 1, 0 before target scaling.
std::vector<double> linear_degradation(std::size_t n);

// Per-column rescale to [0,1]; constant columns map to all zeros.
std::pair<Tensor, ScalingParams> minmax_fit_transform(const Tensor& matrix);

// Rescales with frozen parameters; out-of-range rows are clamped to [-1, 2].
Tensor minmax_apply(const Tensor& matrix, const ScalingParams& params);

// All stride-spaced windows with their first-row-after-window labels.
SlidePairs slide_window(const Tensor& scaled, const std::vector<double>& labels, std::size_t l,
                        std::size_t stride = 1);

// Shifts each window's label f places down the slide-pair label stream.
SlidePairs apply_forecast_window(const SlidePairs& pairs, std::size_t f);

// Adds a trailing depth-1 axis: {l, M} -> {l, M, 1}.
Tensor expand_depth(const Tensor& window);

// Builds the scaled, labeled form of a raw sensor matrix.
LabeledDataset make_labeled(const Tensor& raw_matrix);

// Windows a labeled dataset for the given horizon. Returns an empty set
// (g = 0) when the run is too short to place a single pair.
WindowedDataset build_windowed(const LabeledDataset& labeled, std::size_t l, std::size_t f,
                               std::size_t stride = 1);

// Directory layout: meta.json + windows.bin + targets.bin, floats little-endian.
void save_windowed(const WindowedDataset& ds, const std::filesystem::path& dir);
WindowedDataset load_windowed(const std::filesystem::path& dir);

} // namespace rulf
