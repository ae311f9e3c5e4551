#include "rulf/train.hpp"

#include <algorithm>
#include <cmath>

#include "rulf/error.hpp"
#include "rulf/util.hpp"

namespace rulf {

TrainingPlan plan_training(const std::vector<WindowedDataset>& datasets, int target_tag,
                           const TrainConfig& cfg) {
    TrainingPlan plan;
    for (const WindowedDataset& ds : datasets)
        if (ds.failure_tag == target_tag) {
            plan.target = &ds;
            break;
        }
    if (!plan.target)
        raise(ErrorCode::TargetNotFound,
              "no dataset carries failure tag " + std::to_string(target_tag));

    plan.selection = plan.target;
    if (cfg.holdout_policy) {
        for (const WindowedDataset& ds : datasets) {
            if (&ds == plan.target) continue;
            if (!plan.selection || plan.selection == plan.target ||
                ds.failure_tag > plan.selection->failure_tag)
                plan.selection = &ds;
        }
        if (plan.selection == plan.target)
            raise(ErrorCode::NoTrainingData,
                  "holdout policy needs a non-target failure to select on");
    }

    for (const WindowedDataset& ds : datasets) {
        if (&ds == plan.target) continue;
        if (cfg.holdout_policy && &ds == plan.selection) continue;
        if (plan.target->l != ds.l || plan.target->f != ds.f || plan.target->m() != ds.m())
            raise(ErrorCode::ShapeMismatch,
                  "failure " + std::to_string(ds.failure_tag) + " is windowed as l=" +
                      std::to_string(ds.l) + " f=" + std::to_string(ds.f) + " m=" +
                      std::to_string(ds.m()) + ", target expects l=" +
                      std::to_string(plan.target->l) + " f=" + std::to_string(plan.target->f) +
                      " m=" + std::to_string(plan.target->m()));
        for (std::size_t q = 0; q < ds.count(); ++q) plan.pairs.push_back({&ds, q});
    }
    if (plan.pairs.empty())
        raise(ErrorCode::NoTrainingData,
              "no training pairs remain outside failure tag " + std::to_string(target_tag));
    return plan;
}

double train_epoch(Model& model, std::vector<PairRef>& pairs, const TrainConfig& cfg, Rng& rng,
                   AdamState& state) {
    if (pairs.empty()) raise(ErrorCode::NoTrainingData, "cannot train on zero pairs");
    if (cfg.batch_size == 0) raise(ErrorCode::InvalidConfig, "batch size must be at least 1");
    if (cfg.shuffle) rng.shuffle(pairs);

    std::vector<Tensor>& params = model.params();
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Tensor& p : params) grads.emplace_back(p.shape());

    double sum_sq = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
        const std::size_t batch = std::min(cfg.batch_size, pairs.size() - start);
        for (Tensor& g : grads) g.fill(0.0);

        for (std::size_t i = 0; i < batch; ++i) {
            const PairRef& ref = pairs[start + i];
            Tape tape;
            std::vector<ValueRef> refs;
            const ValueRef out = model.forward(tape, ref.source->window_at(ref.index), &refs);
            const double pred = tape.value(out)[0];
            const double err = pred - ref.source->targets[ref.index];
            if (!std::isfinite(err))
                raise(ErrorCode::DivergedLoss, "training loss is not finite");
            sum_sq += err * err;
            ++seen;

            Tensor seed(tape.value(out).shape());
            seed[0] = 2.0 * err / static_cast<double>(batch);
            tape.backward(out, seed);
            for (std::size_t j = 0; j < refs.size(); ++j) {
                const Tensor& g = tape.grad(refs[j]);
                if (g.size() == 0) continue;
                for (std::size_t k = 0; k < g.size(); ++k) grads[j][k] += g[k];
            }
        }

        if (cfg.clip_norm > 0.0) clip_global_norm(grads, cfg.clip_norm);
        adam_step(params, grads, state, cfg.adam);
    }

    const double epoch_rmse = std::sqrt(sum_sq / static_cast<double>(seen));
    if (!std::isfinite(epoch_rmse)) raise(ErrorCode::DivergedLoss, "training loss is not finite");
    return epoch_rmse;
}

TrainOutcome train_leave_one_out(const std::vector<WindowedDataset>& datasets, int target_tag,
                                 const ModelSpec& spec, const TrainConfig& cfg) {
    if (cfg.epochs == 0) raise(ErrorCode::InvalidConfig, "need at least one epoch");
    TrainingPlan plan = plan_training(datasets, target_tag, cfg);
    const WindowedDataset& sel = *plan.selection;
    if (spec.l != sel.l || spec.m != sel.m())
        raise(ErrorCode::ShapeMismatch,
              "model expects l=" + std::to_string(spec.l) + " m=" + std::to_string(spec.m) +
                  ", datasets are windowed as l=" + std::to_string(sel.l) + " m=" +
                  std::to_string(sel.m()));

    Model model = Model::build(spec);
    AdamState state = AdamState::like(model.params());

    TrainOutcome outcome;
    outcome.target_failure_tag = target_tag;
    outcome.spec = spec;

    double best_metric = 0.0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(mix_seed(cfg.seed, epoch));
        EpochRecord rec;
        rec.epoch = epoch;
        try {
            rec.train_rmse = train_epoch(model, plan.pairs, cfg, rng, state);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DivergedLoss ||
                e.code() == ErrorCode::NonFiniteActivation ||
                e.code() == ErrorCode::NonFiniteGradient)
                raise(ErrorCode::DivergedLoss,
                      "epoch " + std::to_string(epoch) + ": " + e.what());
            throw;
        }

        const ForecastTrace trace = forecast(model, sel);
        if (trace.count() > 0) {
            rec.eval_rmse = rmse(trace.predictions, trace.targets);
            if (const auto crossing = detect_crossing(trace, cfg.threshold)) {
                const auto dk = compute_dk(static_cast<std::int64_t>(*crossing),
                                           static_cast<std::int64_t>(trace.actual_failure_index));
                rec.eval_dk_logs = dk.dk_logs;
                rec.qualified = dk.dk_logs <= 0;
            }
        }
        outcome.epochs.push_back(rec);

        if (rec.qualified) {
            const double metric = cfg.selection == TrainConfig::Selection::AbsDk
                                      ? std::abs(static_cast<double>(*rec.eval_dk_logs))
                                      : rec.eval_rmse;
            if (!outcome.best_epoch || metric < best_metric) {
                best_metric = metric;
                outcome.best_epoch = epoch;
                outcome.best_model = model;
            }
        }
    }
    return outcome;
}

void write_training_log(const TrainOutcome& outcome, const std::filesystem::path& path) {
    std::string csv = "epoch,train_rmse,test_dk_logs,qualified\n";
    for (const EpochRecord& rec : outcome.epochs) {
        csv += std::to_string(rec.epoch) + "," + format_double(rec.train_rmse) + ",";
        if (rec.eval_dk_logs) csv += std::to_string(*rec.eval_dk_logs);
        csv += rec.qualified ? ",true\n" : ",false\n";
    }
    write_file_atomic(path, csv);
}

} // namespace rulf
