#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rulf/error.hpp"
#include "rulf/eval.hpp"
#include "rulf/model.hpp"
#include "rulf/preprocess.hpp"
#include "rulf/scada.hpp"
#include "rulf/synth.hpp"
#include "rulf/train.hpp"
#include "rulf/util.hpp"

namespace rulf::cli {

namespace {

namespace fs = std::filesystem;

// Every tunable of the pipeline as one flat document. A JSON config file uses
// exactly these field names; command-line flags override the file, the file
// overrides the defaults.
struct RunConfig {
    std::size_t l = 24;     // window length in logs
    std::size_t fw = 2016;  // forecast horizon in logs (two weeks of 10-minute logs)
    std::size_t stride = 1;
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double threshold = 0.0; // end-of-life crossing level on the scaled axis
    double clip_norm = 5.0; // joint gradient norm cap; zero or less disables
    std::size_t min_logs = 0; // 0 derives l + fw + 100
    bool shuffle = true;
    bool holdout = false;
    std::string selection = "absdk"; // absdk | rmse
    std::string model = "forenet2d";

    std::string data, out, scada, failures, checkpoint, traces, results;
};

RunConfig load_run_config(const fs::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::InvalidConfig, path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object())
        raise(ErrorCode::InvalidConfig, path.string() + " must hold a JSON object");

    RunConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "l") cfg.l = value.get<std::size_t>();
            else if (key == "fw") cfg.fw = value.get<std::size_t>();
            else if (key == "stride") cfg.stride = value.get<std::size_t>();
            else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
            else if (key == "batch") cfg.batch = value.get<std::size_t>();
            else if (key == "lr") cfg.lr = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "threshold") cfg.threshold = value.get<double>();
            else if (key == "clip_norm") cfg.clip_norm = value.get<double>();
            else if (key == "min_logs") cfg.min_logs = value.get<std::size_t>();
            else if (key == "shuffle") cfg.shuffle = value.get<bool>();
            else if (key == "holdout") cfg.holdout = value.get<bool>();
            else if (key == "selection") cfg.selection = value.get<std::string>();
            else if (key == "model") cfg.model = value.get<std::string>();
            else if (key == "data") cfg.data = value.get<std::string>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "scada") cfg.scada = value.get<std::string>();
            else if (key == "failures") cfg.failures = value.get<std::string>();
            else if (key == "checkpoint") cfg.checkpoint = value.get<std::string>();
            else if (key == "traces") cfg.traces = value.get<std::string>();
            else if (key == "results") cfg.results = value.get<std::string>();
            else
                raise(ErrorCode::InvalidConfig, "unknown key \"" + key + "\" in " + path.string());
        } catch (const nlohmann::json::exception&) {
            raise(ErrorCode::InvalidConfig,
                  "key \"" + key + "\" in " + path.string() + " has the wrong type");
        }
    }
    return cfg;
}

// Binds a subset of RunConfig fields to flags of one subcommand and applies
// flag > config file > default precedence after parsing.
class ConfigBinder {
public:
    explicit ConfigBinder(CLI::App& sc) {
        sc.add_option("--config", config_path_, "flat JSON run config (flags override it)");
        app_ = &sc;
    }

    void bind(const std::vector<std::string>& fields) {
        for (const std::string& f : fields) add_field(f);
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path_.empty()) cfg = load_run_config(config_path_);
        for (const auto& [opt, apply] : bound_)
            if (opt->count() > 0) apply(staged_, cfg);
        return cfg;
    }

private:
    using Apply = std::function<void(const RunConfig&, RunConfig&)>;

    void track(CLI::Option* opt, Apply apply) { bound_.push_back({opt, std::move(apply)}); }

    void add_field(const std::string& f) {
        CLI::App& sc = *app_;
        RunConfig& s = staged_;
        if (f == "l")
            track(sc.add_option("--l", s.l, "window length in logs")->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.l = a.l; });
        else if (f == "fw")
            track(sc.add_option("--fw", s.fw,
                                "forecast horizon in logs; 2016 is two weeks of 10-minute logs")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.fw = a.fw; });
        else if (f == "stride")
            track(sc.add_option("--stride", s.stride, "window stride in logs")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.stride = a.stride; });
        else if (f == "epochs")
            track(sc.add_option("--epochs", s.epochs, "training epochs")->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.epochs = a.epochs; });
        else if (f == "batch")
            track(sc.add_option("--batch", s.batch, "batch size")->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.batch = a.batch; });
        else if (f == "lr")
            track(sc.add_option("--lr", s.lr, "Adam learning rate")->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.lr = a.lr; });
        else if (f == "seed")
            track(sc.add_option("--seed", s.seed, "random seed")->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.seed = a.seed; });
        else if (f == "threshold")
            track(sc.add_option("--threshold", s.threshold,
                                "end-of-life crossing level on the scaled axis")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.threshold = a.threshold; });
        else if (f == "clip-norm")
            track(sc.add_option("--clip-norm", s.clip_norm,
                                "joint gradient norm cap; 0 disables")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.clip_norm = a.clip_norm; });
        else if (f == "min-logs")
            track(sc.add_option("--min-logs", s.min_logs,
                                "fewest logs for a failure run to count; 0 derives l + fw + 100")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.min_logs = a.min_logs; });
        else if (f == "shuffle")
            track(sc.add_flag("--shuffle,!--no-shuffle", s.shuffle,
                              "shuffle training pairs each epoch")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.shuffle = a.shuffle; });
        else if (f == "holdout")
            track(sc.add_flag("--holdout", s.holdout,
                              "select epochs on the highest-tagged non-target failure and withhold "
                              "it from training"),
                  [](const RunConfig& a, RunConfig& b) { b.holdout = a.holdout; });
        else if (f == "selection")
            track(sc.add_option("--selection", s.selection, "epoch ranking: absdk or rmse")
                      ->capture_default_str()
                      ->check(CLI::IsMember({"absdk", "rmse"})),
                  [](const RunConfig& a, RunConfig& b) { b.selection = a.selection; });
        else if (f == "model")
            track(sc.add_option("--model", s.model,
                                "forenet2d|forenet3d|cnn|lstm|cnn-lstm|cnn-am|lstm-am|cnn-m|"
                                "dense-only")
                      ->capture_default_str(),
                  [](const RunConfig& a, RunConfig& b) { b.model = a.model; });
        else if (f == "data")
            track(sc.add_option("--data", s.data, "directory of ingested failure datasets"),
                  [](const RunConfig& a, RunConfig& b) { b.data = a.data; });
        else if (f == "out")
            track(sc.add_option("--out", s.out, "output directory"),
                  [](const RunConfig& a, RunConfig& b) { b.out = a.out; });
        else if (f == "scada")
            track(sc.add_option("--scada", s.scada, "SCADA log CSV"),
                  [](const RunConfig& a, RunConfig& b) { b.scada = a.scada; });
        else if (f == "failures")
            track(sc.add_option("--failures", s.failures, "failure event CSV"),
                  [](const RunConfig& a, RunConfig& b) { b.failures = a.failures; });
        else if (f == "checkpoint")
            track(sc.add_option("--checkpoint", s.checkpoint, "model checkpoint file"),
                  [](const RunConfig& a, RunConfig& b) { b.checkpoint = a.checkpoint; });
        else if (f == "traces")
            track(sc.add_option("--traces", s.traces, "directory of forecast traces"),
                  [](const RunConfig& a, RunConfig& b) { b.traces = a.traces; });
        else if (f == "results")
            track(sc.add_option("--results", s.results, "directory of forecast traces"),
                  [](const RunConfig& a, RunConfig& b) { b.results = a.results; });
    }

    CLI::App* app_ = nullptr;
    RunConfig staged_;
    std::string config_path_;
    std::vector<std::pair<CLI::Option*, Apply>> bound_;
};

void need(const std::string& value, const std::string& what) {
    if (value.empty())
        raise(ErrorCode::InvalidConfig, "missing " + what);
}

Architecture parse_model(const std::string& name) {
    std::string normalized = name;
    std::replace(normalized.begin(), normalized.end(), '-', '_');
    return architecture_from_string(normalized);
}

std::size_t effective_min_logs(const RunConfig& cfg) {
    return cfg.min_logs ? cfg.min_logs : cfg.l + cfg.fw + 100;
}

TrainConfig to_train_config(const RunConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch;
    tc.shuffle = cfg.shuffle;
    tc.adam.learning_rate = cfg.lr;
    tc.clip_norm = cfg.clip_norm;
    tc.seed = cfg.seed;
    tc.threshold = cfg.threshold;
    tc.selection = cfg.selection == "rmse" ? TrainConfig::Selection::TestRmse
                                           : TrainConfig::Selection::AbsDk;
    tc.holdout_policy = cfg.holdout;
    return tc;
}

// --- synth -------------------------------------------------------------------

void handle_synth(const std::string& config_path, const std::string& out_dir, bool seed_given,
                  std::uint64_t seed, std::ostream& out) {
    need(out_dir, "--out <dir>");
    SynthConfig cfg = config_path.empty() ? SynthConfig{} : load_synth_config(config_path);
    if (seed_given) cfg.seed = seed;
    const SynthOutput fixture = generate(cfg);
    write_synth_csvs(fixture, out_dir);
    out << "wrote " << (fs::path(out_dir) / "scada.csv").string() << " ("
        << fixture.records.size() << " logs, " << fixture.param_names.size() << " parameters)\n";
    out << "wrote " << (fs::path(out_dir) / "failures.csv").string() << " ("
        << fixture.events.size() << " failures)\n";
}

// --- ingest ------------------------------------------------------------------

void handle_ingest(const RunConfig& cfg, std::ostream& out) {
    need(cfg.scada, "--scada <csv>");
    need(cfg.failures, "--failures <csv>");
    need(cfg.out, "--out <dir>");

    const ScadaParseResult parsed = parse_scada(cfg.scada);
    const std::vector<FailureEvent> events = parse_failures(cfg.failures);
    const BuildResult built =
        build_failure_datasets(parsed.records, events, effective_min_logs(cfg));

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create " + cfg.out + ": " + ec.message());

    for (const FailureDataset& ds : built.datasets)
        save_failure_dataset(ds, fs::path(cfg.out) /
                                     ("failure_" + std::to_string(ds.failure_tag)));
    write_ingest_report(built.report, fs::path(cfg.out) / "ingest_report.csv");

    out << "parsed " << parsed.records.size() << " logs (" << parsed.dropped_rows
        << " dropped), " << events.size() << " failure events\n";
    for (const IngestReportEntry& entry : built.report) {
        out << "failure " << entry.failure_tag << " (" << entry.turbine << ", " << entry.component
            << "): " << entry.logs << " logs, " << (entry.valid ? "valid" : "invalid");
        if (!entry.note.empty()) out << ", " << entry.note;
        out << "\n";
    }
    out << "wrote " << built.datasets.size() << " datasets and ingest_report.csv under "
        << cfg.out << "\n";
}

// --- train -------------------------------------------------------------------

std::vector<WindowedDataset> load_windowed_runs(const RunConfig& cfg) {
    const std::vector<FailureDataset> failures = load_failure_datasets(cfg.data);
    std::vector<WindowedDataset> windowed;
    for (const FailureDataset& ds : failures) {
        if (!ds.valid) continue;
        windowed.push_back(build_windowed(make_labeled(ds), cfg.l, cfg.fw, cfg.stride));
    }
    if (windowed.empty())
        raise(ErrorCode::NoTrainingData, "no valid failure datasets under " + cfg.data);
    return windowed;
}

std::string train_one_target(const std::vector<WindowedDataset>& windowed, int target,
                             const ModelSpec& spec, const TrainConfig& tc, const RunConfig& cfg) {
    const TrainOutcome outcome = train_leave_one_out(windowed, target, spec, tc);
    const std::string arch = architecture_name(spec.architecture);
    const std::string stem = std::to_string(target) + "_" + arch;

    write_training_log(outcome, fs::path(cfg.out) / ("training_log_" + stem + ".csv"));

    std::ostringstream text;
    for (const EpochRecord& rec : outcome.epochs) {
        text << "target " << target << " epoch " << rec.epoch << "/" << tc.epochs
             << ": train rmse " << format_double(rec.train_rmse);
        if (rec.eval_dk_logs)
            text << ", selection disparity " << *rec.eval_dk_logs << " logs";
        else
            text << ", no forecasted failure";
        if (rec.qualified) text << " (qualified)";
        text << "\n";
    }
    if (outcome.best_model) {
        const std::string name = "checkpoint_" + stem + ".fnet";
        save_checkpoint(*outcome.best_model, fs::path(cfg.out) / name,
                        "target " + std::to_string(target) + " best epoch " +
                            std::to_string(*outcome.best_epoch));
        const EpochRecord& best = outcome.epochs[*outcome.best_epoch - 1];
        text << "target " << target << ": best epoch " << *outcome.best_epoch << ", disparity "
             << *best.eval_dk_logs << " logs ("
             << render_duration(10 * *best.eval_dk_logs) << "), wrote " << name << "\n";
    } else {
        text << "target " << target << ": no qualified epoch; checkpoint not written\n";
    }
    return text.str();
}

void handle_train(const RunConfig& cfg, bool all_targets, bool target_given, int target,
                  std::ostream& out) {
    need(cfg.data, "--data <dir>");
    need(cfg.out, "--out <dir>");
    if (!all_targets && !target_given)
        raise(ErrorCode::InvalidConfig, "--target <tag> or --all-targets");

    const Architecture arch = parse_model(cfg.model);
    const std::vector<WindowedDataset> windowed = load_windowed_runs(cfg);
    const ModelSpec spec{arch, cfg.l, windowed.front().m(), cfg.seed};
    const TrainConfig tc = to_train_config(cfg);

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create " + cfg.out + ": " + ec.message());

    std::vector<int> targets;
    if (all_targets)
        for (const WindowedDataset& ds : windowed) targets.push_back(ds.failure_tag);
    else
        targets.push_back(target);

    if (targets.size() == 1) {
        out << train_one_target(windowed, targets[0], spec, tc, cfg);
        return;
    }

    // One worker per target; results print in tag order once all are done.
    std::vector<std::future<std::string>> workers;
    workers.reserve(targets.size());
    for (int tag : targets)
        workers.push_back(std::async(std::launch::async, [&, tag] {
            return train_one_target(windowed, tag, spec, tc, cfg);
        }));
    for (auto& worker : workers) out << worker.get();
}

// --- forecast ----------------------------------------------------------------

void handle_forecast(const RunConfig& cfg, int target, std::ostream& out) {
    need(cfg.checkpoint, "--checkpoint <file>");
    need(cfg.data, "--data <dir>");

    const Model model = load_checkpoint(cfg.checkpoint);
    const std::vector<FailureDataset> failures = load_failure_datasets(cfg.data);
    const FailureDataset* source = nullptr;
    for (const FailureDataset& ds : failures)
        if (ds.failure_tag == target) {
            source = &ds;
            break;
        }
    if (!source)
        raise(ErrorCode::TargetNotFound,
              "no dataset carries failure tag " + std::to_string(target) + " under " + cfg.data);

    const LabeledDataset labeled = make_labeled(*source);
    if (labeled.m() != model.spec().m)
        raise(ErrorCode::ShapeMismatch,
              "checkpoint expects m=" + std::to_string(model.spec().m) + ", dataset has m=" +
                  std::to_string(labeled.m()));
    const WindowedDataset windowed =
        build_windowed(labeled, model.spec().l, cfg.fw, cfg.stride);
    const ForecastTrace trace = forecast(model, windowed);

    const std::string arch = architecture_name(model.spec().architecture);
    const std::string stem = "trace_" + std::to_string(target) + "_" + arch;
    const fs::path out_dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    std::string csv = "log_index,predicted,target\n";
    for (std::size_t q = 0; q < trace.count(); ++q)
        csv += std::to_string(trace.log_index(q)) + "," + format_double(trace.predictions[q]) +
               "," + format_double(trace.targets[q]) + "\n";
    write_file_atomic(out_dir / (stem + ".csv"), csv);

    nlohmann::json meta;
    meta["failure_tag"] = target;
    meta["model"] = arch;
    meta["data_logs_available"] = source->n();
    meta["component"] = component_name(source->component, source->component_raw);
    meta["l"] = trace.l;
    meta["f"] = trace.f;
    meta["stride"] = trace.stride;
    meta["actual_failure_index"] = trace.actual_failure_index;
    write_file_atomic(out_dir / (stem + ".meta.json"), meta.dump(2) + "\n");

    out << "wrote " << (out_dir / (stem + ".csv")).string() << " (" << trace.count()
        << " pairs)\n";
}

// --- evaluate / report ---------------------------------------------------------

ForecastTrace read_trace_csv(const fs::path& path) {
    const std::string text = read_text_file(path);
    ForecastTrace trace;
    std::size_t start = 0;
    bool header = true;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = text.substr(start, nl - start);
        start = nl + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "log_index,predicted,target")
                raise(ErrorCode::IoError, path.string() + " is not a forecast trace");
            header = false;
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 3)
            raise(ErrorCode::IoError, path.string() + " has a malformed row: " + line);
        const auto predicted = parse_double(fields[1]);
        const auto target = parse_double(fields[2]);
        if (!predicted || !target)
            raise(ErrorCode::IoError, path.string() + " has a malformed row: " + line);
        trace.predictions.push_back(*predicted);
        trace.targets.push_back(*target);
    }
    return trace;
}

std::vector<ExperimentResult> load_experiments(const fs::path& dir, double threshold) {
    if (!fs::is_directory(dir))
        raise(ErrorCode::IoError, dir.string() + " is not a directory");

    std::vector<std::string> meta_names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trace_", 0) == 0 && name.size() > 10 &&
            name.substr(name.size() - 10) == ".meta.json")
            meta_names.push_back(name);
    }
    std::sort(meta_names.begin(), meta_names.end());

    std::vector<ExperimentResult> results;
    for (const std::string& name : meta_names) {
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(read_text_file(dir / name));
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::IoError, (dir / name).string() + " is not valid JSON: " + e.what());
        }
        ExperimentResult r;
        const std::string stem = name.substr(0, name.size() - 10);
        try {
            r.failure_tag = meta.at("failure_tag").get<int>();
            r.model = meta.at("model").get<std::string>();
            r.data_logs_available = meta.at("data_logs_available").get<std::size_t>();
            r.component = meta.at("component").get<std::string>();
            r.trace = read_trace_csv(dir / (stem + ".csv"));
            r.trace.l = meta.at("l").get<std::size_t>();
            r.trace.f = meta.at("f").get<std::size_t>();
            r.trace.stride = meta.at("stride").get<std::size_t>();
            r.trace.actual_failure_index = meta.at("actual_failure_index").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorCode::IoError, (dir / name).string() + " is missing fields: " + e.what());
        }
        if (const auto crossing = detect_crossing(r.trace, threshold))
            r.dk = compute_dk(static_cast<std::int64_t>(*crossing),
                              static_cast<std::int64_t>(r.trace.actual_failure_index));
        results.push_back(std::move(r));
    }
    std::sort(results.begin(), results.end(),
              [](const ExperimentResult& a, const ExperimentResult& b) {
                  return a.failure_tag != b.failure_tag ? a.failure_tag < b.failure_tag
                                                        : a.model < b.model;
              });
    return results;
}

void handle_tables(const std::string& dir, const RunConfig& cfg, bool svg, std::ostream& out) {
    const fs::path out_dir = cfg.out.empty() ? fs::path(dir) : fs::path(cfg.out);
    const std::vector<ExperimentResult> results = load_experiments(dir, cfg.threshold);
    emit_report(results, out_dir, svg);
    out << "wrote " << (out_dir / "dk_table.csv").string() << " (" << results.size()
        << " experiments)\n";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
            return 1;
        case ErrorCode::DivergedLoss:
        case ErrorCode::NonFiniteActivation:
        case ErrorCode::NonFiniteGradient:
            return 3;
        default:
            return 2;
    }
}

std::string version_text() {
    return "rulf 1.0.0\ncheckpoint format 1\ndataset format 1\nwindowed format 1";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Remaining-useful-life forecasting for turbine sensor logs"};
    app.set_version_flag("--version", version_text());
    app.require_subcommand(1);

    // synth
    CLI::App* synth = app.add_subcommand("synth", "generate a seeded multi-failure fixture");
    std::string synth_config, synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--config", synth_config, "fixture JSON config");
    synth->add_option("--out", synth_out, "output directory");
    CLI::Option* synth_seed_opt =
        synth->add_option("--seed", synth_seed, "override the config seed");
    synth->callback([&] {
        handle_synth(synth_config, synth_out, synth_seed_opt->count() > 0, synth_seed, out);
    });

    // ingest
    CLI::App* ingest = app.add_subcommand("ingest", "split SCADA logs into failure datasets");
    ConfigBinder ingest_cfg(*ingest);
    ingest_cfg.bind({"scada", "failures", "out", "l", "fw", "min-logs"});
    ingest->callback([&] { handle_ingest(ingest_cfg.resolve(), out); });

    // train
    CLI::App* train = app.add_subcommand("train", "leave-one-failure-out training");
    ConfigBinder train_cfg(*train);
    train_cfg.bind({"data", "out", "model", "l", "fw", "stride", "epochs", "batch", "lr", "seed",
                    "threshold", "clip-norm", "shuffle", "holdout", "selection"});
    int train_target = 0;
    bool all_targets = false;
    CLI::Option* train_target_opt =
        train->add_option("--target", train_target, "failure tag to hold out and evaluate");
    train->add_flag("--all-targets", all_targets, "run every failure tag as the target");
    train->callback([&] {
        handle_train(train_cfg.resolve(), all_targets, train_target_opt->count() > 0,
                     train_target, out);
    });

    // forecast
    CLI::App* forecast = app.add_subcommand("forecast", "run a checkpoint over one failure run");
    ConfigBinder forecast_cfg(*forecast);
    forecast_cfg.bind({"checkpoint", "data", "out", "fw", "stride"});
    int forecast_target = 0;
    forecast->add_option("--target", forecast_target, "failure tag to forecast")->required();
    forecast->callback([&] { handle_forecast(forecast_cfg.resolve(), forecast_target, out); });

    // evaluate
    CLI::App* evaluate = app.add_subcommand("evaluate", "score forecast traces into a table");
    ConfigBinder evaluate_cfg(*evaluate);
    evaluate_cfg.bind({"traces", "out", "threshold"});
    evaluate->callback([&] {
        const RunConfig cfg = evaluate_cfg.resolve();
        need(cfg.traces, "--traces <dir>");
        handle_tables(cfg.traces, cfg, false, out);
    });

    // report
    CLI::App* report = app.add_subcommand("report", "score traces and chart every forecast");
    ConfigBinder report_cfg(*report);
    report_cfg.bind({"results", "out", "threshold"});
    report->callback([&] {
        const RunConfig cfg = report_cfg.resolve();
        need(cfg.results, "--results <dir>");
        handle_tables(cfg.results, cfg, true, out);
    });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("rulf");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success))
            return app.exit(e, out, err);
        err << "rulf: UsageError: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        err << "rulf: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "rulf: InternalError: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace rulf::cli
