#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rulf/adam.hpp"
#include "rulf/eval.hpp"
#include "rulf/model.hpp"
#include "rulf/preprocess.hpp"
#include "rulf/rng.hpp"

namespace rulf {

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    bool shuffle = true;
    AdamConfig adam;
    double clip_norm = 5.0; // joint gradient norm cap; zero or less disables
    std::uint64_t seed = 0;
    double threshold = 0.0; // end-of-life crossing level on the scaled axis

    // What ranks qualified epochs: the disparity magnitude or the RMSE on the
    // selection failure.
    enum class Selection { AbsDk, TestRmse };
    Selection selection = Selection::AbsDk;

    // When set, epoch qualification and checkpoint selection run against the
    // highest-tagged non-target failure, which is then withheld from the
    // training pool, so the evaluation target is never consulted before the
    // final forecast. The default consults the target itself after every
    // epoch.
    bool holdout_policy = false;
};

// One supervised pair, identified by its source dataset and pair index.
struct PairRef {
    const WindowedDataset* source = nullptr;
    std::size_t index = 0;
};

// The split for one leave-one-failure-out run: every training pair, the
// evaluation target, and the failure that drives epoch selection (the target
// itself unless the holdout policy is active).
struct TrainingPlan {
    std::vector<PairRef> pairs;
    const WindowedDataset* target = nullptr;
    const WindowedDataset* selection = nullptr;
};

// Raises TargetNotFound when the tag is absent and NoTrainingData when no
// training pairs remain.
TrainingPlan plan_training(const std::vector<WindowedDataset>& datasets, int target_tag,
                           const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double train_rmse = 0.0;
    double eval_rmse = 0.0;
    std::optional<std::int64_t> eval_dk_logs; // absent: no crossing this epoch
    bool qualified = false;                   // crossing at or before the actual failure
};

struct TrainOutcome {
    int target_failure_tag = 0;
    ModelSpec spec;
    std::vector<EpochRecord> epochs;
    // Best qualified epoch (1-based) and the model as of that epoch; absent
    // when no epoch qualified.
    std::optional<std::size_t> best_epoch;
    std::optional<Model> best_model;
};

// One pass over the pairs in shuffled batches: mean-squared-error gradients,
// joint-norm clipping, Adam updates. Returns the RMSE of the online
// predictions. Raises DivergedLoss when the loss stops being finite.
double train_epoch(Model& model, std::vector<PairRef>& pairs, const TrainConfig& cfg, Rng& rng,
                   AdamState& state);

// Trains on every failure except the target, evaluating the selection failure
// after each epoch. An epoch qualifies when its forecasted failure does not
// run past the actual one; the best qualified epoch's model is returned.
TrainOutcome train_leave_one_out(const std::vector<WindowedDataset>& datasets, int target_tag,
                                 const ModelSpec& spec, const TrainConfig& cfg);

// CSV: epoch,train_rmse,test_dk_logs,qualified.
void write_training_log(const TrainOutcome& outcome, const std::filesystem::path& path);

} // namespace rulf
