#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "rulf/rng.hpp"
#include "rulf/tensor.hpp"

namespace testsup {

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& label) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("rulf_test_" + label + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline rulf::Tensor random_tensor(std::vector<std::size_t> shape, rulf::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
    rulf::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline rulf::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed,
                                  double lo = -1.0, double hi = 1.0) {
    rulf::Rng rng(seed);
    return random_tensor(std::move(shape), rng, lo, hi);
}

// Central-difference gradient check. `eval` must recompute the scalar loss
// from the current contents of `leaves`; `analytic` holds the gradients for
// the same leaves. Coordinates where both sides sit below `floor` are treated
// as matching noise. Returns the worst relative error seen.
inline double fd_max_rel_err(std::vector<rulf::Tensor*> leaves,
                             const std::vector<rulf::Tensor>& analytic,
                             const std::function<double()>& eval, double h = 1e-5,
                             double floor_ = 1e-6) {
    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        rulf::Tensor& leaf = *leaves[li];
        for (std::size_t i = 0; i < leaf.size(); ++i) {
            const double keep = leaf[i];
            leaf[i] = keep + h;
            const double up = eval();
            leaf[i] = keep - h;
            const double down = eval();
            leaf[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic[li][i];
            const double denom = std::max(std::fabs(an), std::fabs(fd));
            if (denom < floor_) continue;
            const double rel = std::fabs(an - fd) / denom;
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

// Same, but probing only `per_leaf` sampled coordinates of each leaf.
inline double fd_max_rel_err_sampled(std::vector<rulf::Tensor*> leaves,
                                     const std::vector<rulf::Tensor>& analytic,
                                     const std::function<double()>& eval, rulf::Rng& rng,
                                     std::size_t per_leaf, double h = 1e-5,
                                     double floor_ = 1e-6) {
    double worst = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        rulf::Tensor& leaf = *leaves[li];
        const std::size_t probes = std::min(per_leaf, leaf.size());
        for (std::size_t p = 0; p < probes; ++p) {
            const std::size_t i =
                (leaf.size() <= per_leaf) ? p : static_cast<std::size_t>(rng.next_below(leaf.size()));
            const double keep = leaf[i];
            leaf[i] = keep + h;
            const double up = eval();
            leaf[i] = keep - h;
            const double down = eval();
            leaf[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic[li][i];
            const double denom = std::max(std::fabs(an), std::fabs(fd));
            if (denom < floor_) continue;
            const double rel = std::fabs(an - fd) / denom;
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

} // namespace testsup
