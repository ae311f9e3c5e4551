#include "doctest.h"

#include <cmath>
#include <limits>

#include "rulf/error.hpp"
#include "rulf/tape.hpp"
#include "support/helpers.hpp"

using namespace rulf;

namespace {

// Scalar probe of a tensor-valued op: loss = sum(r * out) with fixed random
// weights r so every output coordinate participates.
Tensor probe_weights(const std::vector<std::size_t>& shape, Rng& rng) {
    Tensor r(shape);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = rng.uniform(-1.0, 1.0);
    return r;
}

double weighted_sum(const Tensor& out, const Tensor& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * r[i];
    return acc;
}

} // namespace

TEST_CASE("conv1d gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed);
        Tensor x = testsup::random_tensor({6, 3}, rng);
        Tensor w = testsup::random_tensor({3, 3, 4}, rng, -0.5, 0.5);
        Tensor b = testsup::random_tensor({4}, rng, -0.2, 0.2);
        Tensor r = probe_weights({4, 4}, rng);

        auto eval = [&] {
            Tape t;
            auto y = t.conv1d(t.param(x), t.param(w), t.param(b), Activation::Relu);
            return weighted_sum(t.value(y), r);
        };
        Tape t;
        auto xr = t.param(x), wr = t.param(w), br = t.param(b);
        auto y = t.conv1d(xr, wr, br, Activation::Relu);
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(xr), t.grad(wr), t.grad(br)};
        CHECK(testsup::fd_max_rel_err({&x, &w, &b}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    for (std::uint64_t seed = 4; seed <= 6; ++seed) {
        Rng rng(seed);
        Tensor x = testsup::random_tensor({5, 4, 2}, rng);
        Tensor w = testsup::random_tensor({2, 2, 2, 3}, rng, -0.5, 0.5);
        Tensor b = testsup::random_tensor({3}, rng, -0.2, 0.2);
        Tensor r = probe_weights({4, 3, 3}, rng);

        auto eval = [&] {
            Tape t;
            auto y = t.conv2d(t.param(x), t.param(w), t.param(b), Activation::Relu);
            return weighted_sum(t.value(y), r);
        };
        Tape t;
        auto xr = t.param(x), wr = t.param(w), br = t.param(b);
        auto y = t.conv2d(xr, wr, br, Activation::Relu);
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(xr), t.grad(wr), t.grad(br)};
        CHECK(testsup::fd_max_rel_err({&x, &w, &b}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("lstm gradients match finite differences through time") {
    for (std::uint64_t seed = 7; seed <= 9; ++seed) {
        Rng rng(seed);
        Tensor x = testsup::random_tensor({4, 3}, rng);
        Tensor w = testsup::random_tensor({3, 8}, rng, -0.6, 0.6);
        Tensor u = testsup::random_tensor({2, 8}, rng, -0.6, 0.6);
        Tensor b = testsup::random_tensor({8}, rng, -0.2, 0.2);
        Tensor r = probe_weights({4, 2}, rng);

        auto eval = [&] {
            Tape t;
            auto y = t.lstm(t.param(x), t.param(w), t.param(u), t.param(b));
            return weighted_sum(t.value(y), r);
        };
        Tape t;
        auto xr = t.param(x), wr = t.param(w), ur = t.param(u), br = t.param(b);
        auto y = t.lstm(xr, wr, ur, br);
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(xr), t.grad(wr), t.grad(ur), t.grad(br)};
        CHECK(testsup::fd_max_rel_err({&x, &w, &u, &b}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("dot attention gradients match finite differences") {
    for (std::uint64_t seed = 10; seed <= 12; ++seed) {
        Rng rng(seed);
        Tensor h = testsup::random_tensor({4, 3}, rng);
        Tensor r = probe_weights({4, 3}, rng);

        auto eval = [&] {
            Tape t;
            auto y = t.dot_attention(t.param(h));
            return weighted_sum(t.value(y), r);
        };
        Tape t;
        auto hr = t.param(h);
        auto y = t.dot_attention(hr);
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(hr)};
        CHECK(testsup::fd_max_rel_err({&h}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("spatial softmax and broadcast multiply gradients match finite differences") {
    for (std::uint64_t seed = 13; seed <= 15; ++seed) {
        Rng rng(seed);
        Tensor m = testsup::random_tensor({3, 4, 1}, rng);
        Tensor f = testsup::random_tensor({3, 4, 5}, rng);
        Tensor r = probe_weights({3, 4, 5}, rng);

        auto eval = [&] {
            Tape t;
            auto wmap = t.spatial_softmax(t.param(m));
            auto y = t.broadcast_multiply(t.param(f), wmap);
            return weighted_sum(t.value(y), r);
        };
        Tape t;
        auto mr = t.param(m), fr = t.param(f);
        auto y = t.broadcast_multiply(fr, t.spatial_softmax(mr));
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(mr), t.grad(fr)};
        CHECK(testsup::fd_max_rel_err({&m, &f}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("dense gradient of a linear map is the input") {
    Tensor x({3}, {1.0, -2.0, 0.5});
    Tensor w({3, 1}, {0.1, 0.2, 0.3});
    Tensor b({1}, {0.0});
    Tape t;
    auto xr = t.param(x), wr = t.param(w), br = t.param(b);
    auto y = t.dense(xr, wr, br);
    t.backward(y);
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.grad(wr)[i] == doctest::Approx(x[i]));
    CHECK(t.grad(br)[0] == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.grad(xr)[i] == doctest::Approx(w[i]));
}

TEST_CASE("a chained graph reuses a node twice and still differentiates") {
    // The attention branch and the residual-style reuse both pull gradients
    // into the same parent; accumulation must add, not overwrite.
    for (std::uint64_t seed = 16; seed <= 18; ++seed) {
        Rng rng(seed);
        Tensor m = testsup::random_tensor({3, 3, 1}, rng);
        Tensor f = testsup::random_tensor({3, 3, 2}, rng);
        Tensor r = probe_weights({3, 3, 2}, rng);

        auto eval = [&] {
            Tape t;
            auto wmap = t.spatial_softmax(t.param(m));
            auto fr = t.param(f);
            auto y1 = t.broadcast_multiply(fr, wmap);
            auto y2 = t.broadcast_multiply(y1, wmap);
            auto y3 = t.broadcast_multiply(y2, wmap);
            return weighted_sum(t.value(y3), r);
        };
        Tape t;
        auto mr = t.param(m), fr = t.param(f);
        auto wmap = t.spatial_softmax(mr);
        auto y = t.broadcast_multiply(t.broadcast_multiply(t.broadcast_multiply(fr, wmap), wmap), wmap);
        t.backward(y, r);
        std::vector<Tensor> analytic{t.grad(mr), t.grad(fr)};
        CHECK(testsup::fd_max_rel_err({&m, &f}, analytic, eval) <= 1e-4);
    }
}

TEST_CASE("backward is deterministic bit for bit") {
    Rng rng(33);
    Tensor x = testsup::random_tensor({6, 3}, rng);
    Tensor w = testsup::random_tensor({3, 3, 4}, rng);
    Tensor b = testsup::random_tensor({4}, rng);
    Tensor dflat = testsup::random_tensor({16, 1}, rng);
    Tensor dbias({1}, {0.1});

    auto run = [&] {
        Tape t;
        auto xr = t.param(x);
        auto y = t.conv1d(xr, t.param(w), t.param(b), Activation::Relu);
        auto p = t.dense(t.flatten(y), t.param(dflat), t.param(dbias));
        t.backward(p);
        return t.grad(xr);
    };
    Tensor g1 = run(), g2 = run();
    REQUIRE(g1.size() == g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("backward rejects a mis-shaped seed and non-finite gradients") {
    Tensor held({2, 2}, {1, 2, 3, 4});
    Tape t;
    auto x = t.param(held);
    auto y = t.flatten(x);
    CHECK_THROWS_AS(t.backward(y, Tensor({2}, {1, 1})), Error);

    Tensor bad({4});
    bad.fill(std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(t.backward(y, bad), Error);
}
