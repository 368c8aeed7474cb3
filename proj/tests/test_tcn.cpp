#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mtc/rng.hpp"
#include "mtc/tcn.hpp"

namespace {

mtc::ModelSpec default_tcn(int window = 8) {
    mtc::ModelSpec spec;
    spec.kind = mtc::ModelKind::tcn;
    spec.window = window;
    return spec;
}

std::vector<double> random_params(const mtc::ModelSpec& spec, std::uint64_t seed) {
    const auto m = mtc::build_manifest(spec);
    std::vector<double> p(m.total);
    mtc::Rng rng(seed);
    for (auto& v : p) v = rng.uniform(-0.8, 0.8);
    return p;
}

} // namespace

TEST_CASE("dilated convolution hand evaluation") {
    // f = (0.5, 0.25), x_{t-1} = 4, x_t = 2 -> D(t) = 0.5*2 + 0.25*4 = 2
    const std::vector<double> x{4.0, 2.0};
    const std::vector<double> f{0.5, 0.25};
    REQUIRE(mtc::dilated_conv_at(x, 1, f, 1) == 2.0);
    // causal padding: at t = 0 the lagged tap falls off the left edge
    REQUIRE(mtc::dilated_conv_at(x, 0, f, 1) == 0.5 * 4.0);
}

TEST_CASE("identity filters pass the input through unchanged") {
    // f(0)=1, f(j>0)=0 at dilations 1, 2, 4: composing the raw convolutions
    // reproduces the input exactly
    const std::vector<double> f{1.0, 0.0};
    std::vector<double> x{0.3, -1.2, 2.0, 0.0, 5.5, -0.7};
    std::vector<double> cur = x;
    for (int dilation : {1, 2, 4}) {
        std::vector<double> next(cur.size());
        for (int t = 0; t < static_cast<int>(cur.size()); ++t)
            next[static_cast<std::size_t>(t)] = mtc::dilated_conv_at(cur, t, f, dilation);
        cur = std::move(next);
    }
    REQUIRE(cur == x);
}

TEST_CASE("tcn forward is causal bit-exactly") {
    const auto spec = default_tcn(16);
    const auto params = random_params(spec, 21);
    mtc::Rng data_rng(33);
    std::vector<double> x(16);
    for (auto& v : x) v = data_rng.uniform(-1, 1);

    const auto base = mtc::tcn_forward(x, spec, params);
    const int F = spec.tcn_filters;
    for (int t = 0; t < 15; ++t) {
        auto perturbed = x;
        perturbed[static_cast<std::size_t>(t) + 1] += 7.5; // change strictly future input
        const auto out = mtc::tcn_forward(perturbed, spec, params);
        for (int pos = 0; pos <= t; ++pos) {
            for (int c = 0; c < F; ++c) {
                REQUIRE(out[static_cast<std::size_t>(pos) * F + c] ==
                        base[static_cast<std::size_t>(pos) * F + c]);
            }
        }
    }
}

TEST_CASE("tcn output depends on exactly the last 8 inputs") {
    const auto spec = default_tcn(32);
    const auto params = random_params(spec, 77);
    mtc::Rng data_rng(34);
    std::vector<double> x(32);
    for (auto& v : x) v = data_rng.uniform(-1, 1);
    const auto base = mtc::tcn_forward(x, spec, params);
    const int F = spec.tcn_filters;
    const int last = 31;
    auto last_out = [&](const std::vector<double>& out, int c) {
        return out[static_cast<std::size_t>(last) * F + c];
    };
    for (int offset = 0; offset < 16; ++offset) {
        auto perturbed = x;
        perturbed[static_cast<std::size_t>(last - offset)] += 3.25;
        const auto out = mtc::tcn_forward(perturbed, spec, params);
        bool changed = false;
        for (int c = 0; c < F; ++c)
            if (last_out(out, c) != last_out(base, c)) changed = true;
        if (offset < spec.receptive_field()) {
            REQUIRE(changed); // inside the receptive field
        } else {
            REQUIRE_FALSE(changed); // beyond it, bit-identical
        }
    }
}

TEST_CASE("inference output ignores the dropout stream") {
    const auto spec = default_tcn(8);
    const auto params = random_params(spec, 5);
    std::vector<double> x{1, 0, 0, 1, 0, 1, 1, 0};
    const auto a = mtc::tcn_forward(x, spec, params, false, nullptr);
    mtc::Rng r1(100), r2(9999);
    const auto b = mtc::tcn_forward(x, spec, params, false, &r1);
    const auto c = mtc::tcn_forward(x, spec, params, false, &r2);
    REQUIRE(a == b);
    REQUIRE(a == c);
}

TEST_CASE("train-mode dropout is deterministic given the stream seed") {
    const auto spec = default_tcn(8);
    const auto params = random_params(spec, 5);
    std::vector<double> x{1, 0, 1, 1, 0, 0, 1, 0};
    mtc::Rng r1(42), r2(42), r3(43);
    const auto a = mtc::tcn_forward(x, spec, params, true, &r1);
    const auto b = mtc::tcn_forward(x, spec, params, true, &r2);
    const auto c = mtc::tcn_forward(x, spec, params, true, &r3);
    REQUIRE(a == b);
    REQUIRE(a != c); // a different stream draws different masks
}

TEST_CASE("empty input is rejected") {
    const auto spec = default_tcn(8);
    const auto params = random_params(spec, 5);
    REQUIRE_THROWS_AS(mtc::tcn_forward({}, spec, params), std::invalid_argument);
}
