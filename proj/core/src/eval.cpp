#include "rulf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "rulf/error.hpp"
#include "rulf/util.hpp"

namespace rulf {

ForecastTrace forecast(const Model& model, const WindowedDataset& data) {
    ForecastTrace trace;
    trace.l = data.l;
    trace.f = data.f;
    trace.stride = data.stride;
    trace.actual_failure_index = data.n_source == 0 ? 0 : data.n_source - 1;
    trace.predictions.reserve(data.count());
    trace.targets = data.targets;
    for (std::size_t q = 0; q < data.count(); ++q)
        trace.predictions.push_back(model.predict(data.window_at(q)));
    return trace;
}

std::optional<std::size_t> detect_crossing(const ForecastTrace& trace, double threshold) {
    for (std::size_t q = 0; q < trace.predictions.size(); ++q)
        if (trace.predictions[q] <= threshold) return trace.log_index(q);
    return std::nullopt;
}

namespace {

std::string one_decimal(std::int64_t tenths, const char* unit) {
    if (tenths % 10 == 0) {
        const std::int64_t whole = tenths / 10;
        return std::to_string(whole) + " " + unit + (whole == 1 ? "" : "s");
    }
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + " " + unit + "s";
}

} // namespace

std::string render_duration(std::int64_t dk_minutes) {
    if (dk_minutes == 0) return "0 minutes";
    const std::string direction = dk_minutes < 0 ? " behind" : " after";
    const std::int64_t mins = std::llabs(dk_minutes);
    if (mins < 60)
        return std::to_string(mins) + (mins == 1 ? " minute" : " minutes") + direction;
    const std::int64_t hour_tenths = std::llround(static_cast<double>(mins) / 60.0 * 10.0);
    if (hour_tenths < 240) return one_decimal(hour_tenths, "hour") + direction;
    const std::int64_t day_tenths = std::llround(static_cast<double>(mins) / 1440.0 * 10.0);
    return one_decimal(day_tenths, "day") + direction;
}

DkResult compute_dk(std::int64_t forecast_index, std::int64_t actual_index) {
    DkResult r;
    r.forecast_index = forecast_index;
    r.actual_index = actual_index;
    r.dk_logs = forecast_index - actual_index;
    r.dk_minutes = 10 * r.dk_logs;
    r.rendered = render_duration(r.dk_minutes);
    return r;
}

Tensor correlation_matrix(const Tensor& matrix) {
    if (matrix.rank() != 2)
        raise(ErrorCode::ShapeMismatch, "correlation needs {N, M}, got " + matrix.shape_string());
    const std::size_t n = matrix.dim(0);
    const std::size_t m = matrix.dim(1);
    if (n < 2) raise(ErrorCode::NotEnoughLogs, "correlation needs at least 2 rows");

    std::vector<double> mean(m, 0.0);
    std::vector<bool> constant(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        double lo = matrix.at(0, j), hi = matrix.at(0, j), sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = matrix.at(i, j);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        mean[j] = sum / static_cast<double>(n);
        constant[j] = lo == hi;
    }

    Tensor cov({m, m});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double dj = matrix.at(i, j) - mean[j];
            for (std::size_t k = j; k < m; ++k)
                cov.at(j, k) += dj * (matrix.at(i, k) - mean[k]);
        }

    Tensor corr({m, m});
    for (std::size_t j = 0; j < m; ++j) {
        corr.at(j, j) = 1.0;
        for (std::size_t k = j + 1; k < m; ++k) {
            double r = 0.0;
            if (!constant[j] && !constant[k])
                r = cov.at(j, k) / std::sqrt(cov.at(j, j) * cov.at(k, k));
            corr.at(j, k) = r;
            corr.at(k, j) = r;
        }
    }
    return corr;
}

namespace {

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string trace_stem(const ExperimentResult& r) {
    return "trace_" + std::to_string(r.failure_tag) + "_" + r.model;
}

std::string trace_svg(const ExperimentResult& r) {
    const ForecastTrace& t = r.trace;
    const double width = 900, height = 420;
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double x_lo = static_cast<double>(t.log_index(0));
    double x_hi = static_cast<double>(t.log_index(t.count() - 1));
    if (x_hi == x_lo) x_hi = x_lo + 1;
    double y_lo = t.predictions[0], y_hi = t.predictions[0];
    for (double v : t.predictions) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
    }
    for (double v : t.targets) {
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
    }
    if (y_hi == y_lo) y_hi = y_lo + 1;

    auto px = [&](std::size_t q) {
        return left + (static_cast<double>(t.log_index(q)) - x_lo) / (x_hi - x_lo) * plot_w;
    };
    auto py = [&](double v) { return top + (y_hi - v) / (y_hi - y_lo) * plot_h; };
    auto line_points = [&](const std::vector<double>& series) {
        std::string pts;
        for (std::size_t q = 0; q < series.size(); ++q) {
            if (q) pts += ' ';
            pts += format_double(px(q)) + "," + format_double(py(series[q]));
        }
        return pts;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
           "\" height=\"" + format_double(height) + "\" viewBox=\"0 0 " + format_double(width) +
           " " + format_double(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + format_double(width / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           r.model + " forecast, failure " + std::to_string(r.failure_tag) + "</text>\n";

    // axes
    svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top) + "\" x2=\"" +
           format_double(left) + "\" y2=\"" + format_double(top + plot_h) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top + plot_h) +
           "\" x2=\"" + format_double(left + plot_w) + "\" y2=\"" + format_double(top + plot_h) +
           "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = x_lo + (x_hi - x_lo) * tick / 4.0;
        const double sx = left + plot_w * tick / 4.0;
        svg += "<line x1=\"" + format_double(sx) + "\" y1=\"" + format_double(top + plot_h) +
               "\" x2=\"" + format_double(sx) + "\" y2=\"" + format_double(top + plot_h + 5) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_double(sx) + "\" y=\"" + format_double(top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               std::to_string(static_cast<long long>(std::llround(fx))) + "</text>\n";
        const double fy = y_lo + (y_hi - y_lo) * tick / 4.0;
        const double sy = top + plot_h - plot_h * tick / 4.0;
        svg += "<line x1=\"" + format_double(left - 5) + "\" y1=\"" + format_double(sy) +
               "\" x2=\"" + format_double(left) + "\" y2=\"" + format_double(sy) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_double(left - 8) + "\" y=\"" + format_double(sy + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               format_double(std::round(fy * 1000.0) / 1000.0) + "</text>\n";
    }
    svg += "<text x=\"" + format_double(left + plot_w / 2) + "\" y=\"" +
           format_double(height - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">turbine life "
           "(logs)</text>\n";
    svg += "<text x=\"16\" y=\"" + format_double(top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " +
           format_double(top + plot_h / 2) + ")\">remaining life (scaled)</text>\n";

    svg += "<polyline fill=\"none\" stroke=\"#888888\" stroke-width=\"1.5\" points=\"" +
           line_points(t.targets) + "\"/>\n";
    svg += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"" +
           line_points(t.predictions) + "\"/>\n";
    svg += "<text x=\"" + format_double(left + plot_w - 150) + "\" y=\"" + format_double(top + 14) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0392b\">predicted</text>\n";
    svg += "<text x=\"" + format_double(left + plot_w - 150) + "\" y=\"" + format_double(top + 28) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#888888\">target</text>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace

void emit_report(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir, bool svg) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    std::string table = "failure_tag,model,data_logs_available,component,dk_logs,dk_minutes,rendered\n";
    for (const auto& r : results) {
        table += std::to_string(r.failure_tag) + "," + csv_field(r.model) + "," +
                 std::to_string(r.data_logs_available) + "," + csv_field(r.component) + ",";
        if (r.dk) {
            table += std::to_string(r.dk->dk_logs) + "," + std::to_string(r.dk->dk_minutes) + "," +
                     csv_field(r.dk->rendered);
        } else {
            table += ",,no forecasted failure";
        }
        table += "\n";
    }
    write_file_atomic(out_dir / "dk_table.csv", table);

    for (const auto& r : results) {
        std::string csv = "log_index,predicted,target\n";
        for (std::size_t q = 0; q < r.trace.count(); ++q)
            csv += std::to_string(r.trace.log_index(q)) + "," +
                   format_double(r.trace.predictions[q]) + "," +
                   format_double(r.trace.targets[q]) + "\n";
        write_file_atomic(out_dir / (trace_stem(r) + ".csv"), csv);
        if (svg && r.trace.count() > 0)
            write_file_atomic(out_dir / (trace_stem(r) + ".svg"), trace_svg(r));
    }
}

} // namespace rulf
