#pragma once

#include <vector>

#include "rulf/tensor.hpp"

namespace rulf {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First and second moment estimates, one tensor per parameter, plus the
// shared step counter used for bias correction.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    static AdamState like(const std::vector<Tensor>& params);
};

// One bias-corrected update in place. Zero gradients leave parameters
// untouched but still advance the step counter.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& config);

// Scales all gradients by max_norm / ||g|| when the joint norm exceeds
// max_norm. Returns the norm before clipping. max_norm <= 0 disables.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

} // namespace rulf
