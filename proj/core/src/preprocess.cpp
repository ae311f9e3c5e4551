#include "rulf/preprocess.hpp"

#include <cmath>
#include <cstring>

#include "json.hpp"
#include "rulf/error.hpp"
#include "rulf/util.hpp"

namespace rulf {

Tensor SlidePairs::window_at(std::size_t z) const {
    Tensor out({l, m});
    std::memcpy(out.data(), windows.data() + z * l * m, l * m * sizeof(double));
    return out;
}

Tensor WindowedDataset::window_at(std::size_t q) const {
    const std::size_t lm = l * inputs.dim(2);
    Tensor out({l, inputs.dim(2)});
    std::memcpy(out.data(), inputs.data() + q * lm, lm * sizeof(double));
    return out;
}

std::vector<double> linear_degradation(std::size_t n) {
    if (n == 0) raise(ErrorCode::EmptyDataset, "cannot label a dataset with zero logs");
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<double>(n - 1 - i);
    return labels;
}

std::pair<Tensor, ScalingParams> minmax_fit_transform(const Tensor& matrix) {
    if (matrix.rank() != 2)
        raise(ErrorCode::ShapeMismatch, "minmax expects a {N,M} matrix, got " + matrix.shape_string());
    const std::size_t n = matrix.dim(0), m = matrix.dim(1);
    if (n == 0) raise(ErrorCode::EmptyDataset, "minmax on an empty matrix");

    ScalingParams params;
    params.col_min.assign(m, 0.0);
    params.col_max.assign(m, 0.0);
    const double* p = matrix.data();
    for (std::size_t j = 0; j < m; ++j) {
        params.col_min[j] = p[j];
        params.col_max[j] = p[j];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double v = p[i * m + j];
            if (!std::isfinite(v))
                raise(ErrorCode::NonFiniteInput, "non-finite value at row " + std::to_string(i) +
                                                     ", column " + std::to_string(j));
            if (v < params.col_min[j]) params.col_min[j] = v;
            if (v > params.col_max[j]) params.col_max[j] = v;
        }

    Tensor scaled({n, m});
    double* s = scaled.data();
    for (std::size_t j = 0; j < m; ++j) {
        const double span = params.col_max[j] - params.col_min[j];
        if (span == 0.0) {
            for (std::size_t i = 0; i < n; ++i) s[i * m + j] = 0.0;
        } else {
            const double lo = params.col_min[j];
            for (std::size_t i = 0; i < n; ++i) s[i * m + j] = (p[i * m + j] - lo) / span;
        }
    }
    return {std::move(scaled), std::move(params)};
}

Tensor minmax_apply(const Tensor& matrix, const ScalingParams& params) {
    if (matrix.rank() != 2)
        raise(ErrorCode::ShapeMismatch, "minmax expects a {N,M} matrix, got " + matrix.shape_string());
    const std::size_t n = matrix.dim(0), m = matrix.dim(1);
    if (m != params.col_min.size())
        raise(ErrorCode::ShapeMismatch, "matrix has " + std::to_string(m) +
                                            " columns, scaling params have " +
                                            std::to_string(params.col_min.size()));
    Tensor scaled({n, m});
    const double* p = matrix.data();
    double* s = scaled.data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double v = p[i * m + j];
            if (!std::isfinite(v))
                raise(ErrorCode::NonFiniteInput, "non-finite value at row " + std::to_string(i) +
                                                     ", column " + std::to_string(j));
            const double span = params.col_max[j] - params.col_min[j];
            double out = (span == 0.0) ? 0.0 : (v - params.col_min[j]) / span;
            if (out < -1.0) out = -1.0;
            if (out > 2.0) out = 2.0;
            s[i * m + j] = out;
        }
    return scaled;
}

SlidePairs slide_window(const Tensor& scaled, const std::vector<double>& labels, std::size_t l,
                        std::size_t stride) {
    if (scaled.rank() != 2)
        raise(ErrorCode::ShapeMismatch, "slide_window expects a {N,M} matrix");
    const std::size_t n = scaled.dim(0), m = scaled.dim(1);
    if (labels.size() != n)
        raise(ErrorCode::ShapeMismatch, "label count " + std::to_string(labels.size()) +
                                            " does not match log count " + std::to_string(n));
    if (l == 0 || stride == 0)
        raise(ErrorCode::ShapeMismatch, "window length and stride must be positive");
    if (n < l)
        raise(ErrorCode::NotEnoughLogs, "need at least " + std::to_string(l) + " logs, have " +
                                            std::to_string(n));

    // Window z ends at row z+l-1; its label sits one row past the window, so
    // the last admissible start is n-l-1 and N == l yields an empty set.
    std::size_t count = 0;
    for (std::size_t z = 0; z + l < n; z += stride) ++count;

    SlidePairs out;
    out.l = l;
    out.m = m;
    out.windows = Tensor({count, l, m});
    out.labels.resize(count);
    const double* src = scaled.data();
    double* dst = out.windows.data();
    std::size_t idx = 0;
    for (std::size_t z = 0; z + l < n; z += stride, ++idx) {
        std::memcpy(dst + idx * l * m, src + z * m, l * m * sizeof(double));
        out.labels[idx] = labels[z + l];
    }
    return out;
}

SlidePairs apply_forecast_window(const SlidePairs& pairs, std::size_t f) {
    const std::size_t r = pairs.count();
    if (f >= r && !(f == 0 && r == 0))
        raise(ErrorCode::HorizonTooLong, "forecast shift " + std::to_string(f) +
                                             " needs more than " + std::to_string(r) + " pairs");
    if (f == 0) return pairs;

    const std::size_t g = r - f;
    SlidePairs out;
    out.l = pairs.l;
    out.m = pairs.m;
    out.windows = Tensor({g, pairs.l, pairs.m});
    out.labels.resize(g);
    const std::size_t w = pairs.l * pairs.m;
    std::memcpy(out.windows.data(), pairs.windows.data(), g * w * sizeof(double));
    for (std::size_t q = 0; q < g; ++q) out.labels[q] = pairs.labels[q + f];
    return out;
}

Tensor expand_depth(const Tensor& window) {
    if (window.rank() != 2)
        raise(ErrorCode::ShapeMismatch, "expand_depth expects a {l,M} window");
    return window.reshaped({window.dim(0), window.dim(1), 1});
}

LabeledDataset make_labeled(const Tensor& raw_matrix) {
    LabeledDataset out;
    auto [scaled, params] = minmax_fit_transform(raw_matrix);
    out.matrix = std::move(scaled);
    out.scaling = std::move(params);
    const std::size_t n = out.matrix.dim(0);
    out.labels = linear_degradation(n);
    out.label_scale = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (double& v : out.labels) v /= out.label_scale;
    return out;
}

WindowedDataset build_windowed(const LabeledDataset& labeled, std::size_t l, std::size_t f,
                               std::size_t stride) {
    if (l == 0 || stride == 0)
        raise(ErrorCode::ShapeMismatch, "window length and stride must be positive");
    const std::size_t n = labeled.n(), m = labeled.m();

    WindowedDataset out;
    out.l = l;
    out.f = f;
    out.stride = stride;
    out.n_source = n;
    out.scaling = labeled.scaling;
    out.label_scale = labeled.label_scale;
    out.failure_tag = labeled.failure_tag;
    out.turbine = labeled.turbine;
    out.component = labeled.component;

    // Pair q targets the label f logs past its window end; runs shorter than
    // l+f fit no pair and give an empty set rather than an error.
    std::size_t g = 0;
    if (n >= l + f)
        for (std::size_t q = 0; q * stride + l - 1 + f <= n - 1; ++q) ++g;

    out.inputs = Tensor({g, l, m});
    out.targets.resize(g);
    const double* src = labeled.matrix.data();
    double* dst = out.inputs.data();
    for (std::size_t q = 0; q < g; ++q) {
        const std::size_t start = q * stride;
        std::memcpy(dst + q * l * m, src + start * m, l * m * sizeof(double));
        out.targets[q] = labeled.labels[start + l - 1 + f];
    }
    return out;
}

void save_windowed(const WindowedDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["n_source"] = ds.n_source;
    meta["m"] = ds.m();
    meta["l"] = ds.l;
    meta["f"] = ds.f;
    meta["stride"] = ds.stride;
    meta["g"] = ds.count();
    meta["label_scale"] = ds.label_scale;
    meta["scaling"]["min"] = ds.scaling.col_min;
    meta["scaling"]["max"] = ds.scaling.col_max;
    meta["failure_tag"] = ds.failure_tag;
    meta["turbine"] = ds.turbine;
    meta["component"] = ds.component;
    write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");

    std::string windows;
    windows.reserve(ds.inputs.size() * 8);
    for (std::size_t i = 0; i < ds.inputs.size(); ++i) append_f64(windows, ds.inputs[i]);
    write_file_atomic(dir / "windows.bin", windows);

    std::string targets;
    targets.reserve(ds.targets.size() * 8);
    for (double v : ds.targets) append_f64(targets, v);
    write_file_atomic(dir / "targets.bin", targets);
}

WindowedDataset load_windowed(const std::filesystem::path& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(dir / "meta.json"));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, "bad meta.json in " + dir.string() + ": " + e.what());
    }

    WindowedDataset ds;
    try {
        ds.n_source = meta.at("n_source").get<std::size_t>();
        ds.l = meta.at("l").get<std::size_t>();
        ds.f = meta.at("f").get<std::size_t>();
        ds.stride = meta.at("stride").get<std::size_t>();
        ds.label_scale = meta.at("label_scale").get<double>();
        ds.scaling.col_min = meta.at("scaling").at("min").get<std::vector<double>>();
        ds.scaling.col_max = meta.at("scaling").at("max").get<std::vector<double>>();
        ds.failure_tag = meta.at("failure_tag").get<int>();
        ds.turbine = meta.at("turbine").get<std::string>();
        ds.component = meta.at("component").get<std::string>();
        const std::size_t g = meta.at("g").get<std::size_t>();
        const std::size_t m = meta.at("m").get<std::size_t>();

        const std::string windows = read_text_file(dir / "windows.bin");
        if (windows.size() != g * ds.l * m * 8)
            raise(ErrorCode::IoError, "windows.bin has wrong size in " + dir.string());
        ds.inputs = Tensor({g, ds.l, m});
        std::size_t pos = 0;
        for (std::size_t i = 0; i < ds.inputs.size(); ++i) ds.inputs[i] = read_f64(windows, pos);

        const std::string targets = read_text_file(dir / "targets.bin");
        if (targets.size() != g * 8)
            raise(ErrorCode::IoError, "targets.bin has wrong size in " + dir.string());
        ds.targets.resize(g);
        pos = 0;
        for (std::size_t i = 0; i < g; ++i) ds.targets[i] = read_f64(targets, pos);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, "meta.json in " + dir.string() + " is missing fields: " + e.what());
    }
    return ds;
}

} // namespace rulf
