#include "rulf/adam.hpp"

#include <cmath>

#include "rulf/error.hpp"

namespace rulf {

AdamState AdamState::like(const std::vector<Tensor>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
        s.m.emplace_back(p.shape());
        s.v.emplace_back(p.shape());
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        raise(ErrorCode::ShapeMismatch, "adam_step: parameter, gradient and state counts differ");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].same_shape(grads[i]))
            raise(ErrorCode::ShapeMismatch, "adam_step: gradient " + std::to_string(i) +
                                                " has shape " + grads[i].shape_string() +
                                                ", parameter has " + params[i].shape_string());
        double* p = params[i].data();
        const double* g = grads[i].data();
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        const std::size_t n = params[i].size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor& g : grads) {
        const double* p = g.data();
        for (std::size_t k = 0; k < g.size(); ++k) sq += p[k] * p[k];
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (Tensor& g : grads) {
            double* p = g.data();
            for (std::size_t k = 0; k < g.size(); ++k) p[k] *= scale;
        }
    }
    return norm;
}

} // namespace rulf
