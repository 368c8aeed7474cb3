#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mtc/errors.hpp"

namespace mtc {

struct TrainConfig {
    double lr = 1e-3;
    int epochs = 50;
    int batch = 64;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("train config: lr must be > 0");
        if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
        if (batch < 1) throw ConfigError("train config: batch must be >= 1");
    }
};

struct AdamState {
    std::vector<double> m, v;
    std::int64_t step = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One Adam update with bias correction. Throws on non-finite gradients.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grad,
                      AdamState& state, const TrainConfig& config) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        if (!std::isfinite(g)) throw TrainError("adam_step: non-finite gradient component");
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
}

} // namespace mtc
