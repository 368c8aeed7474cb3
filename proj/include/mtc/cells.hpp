#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mtc/nn_math.hpp"

namespace mtc {

// Single-step recurrent cell updates. The batched training path in
// network.hpp uses the same gate algebra after block matrix products; these
// entry points are the reference single-sample form.

struct RnnCellParams {
    const double* w_x; // hidden x input
    const double* w_h; // hidden x hidden
    const double* b;   // hidden
    int input_dim;
    int hidden;
};

/// h_t = tanh(W_x x + W_h h_prev + b)
inline void rnn_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                             const RnnCellParams& p, std::span<double> h_out) {
    if (static_cast<int>(x.size()) != p.input_dim ||
        static_cast<int>(h_prev.size()) != p.hidden ||
        static_cast<int>(h_out.size()) != p.hidden)
        throw std::invalid_argument("rnn_cell_forward: dimension mismatch");
    for (int i = 0; i < p.hidden; ++i) {
        double acc = p.b[i];
        const double* wx = p.w_x + static_cast<std::size_t>(i) * p.input_dim;
        for (int j = 0; j < p.input_dim; ++j) acc += wx[j] * x[j];
        const double* wh = p.w_h + static_cast<std::size_t>(i) * p.hidden;
        for (int j = 0; j < p.hidden; ++j) acc += wh[j] * h_prev[j];
        h_out[i] = std::tanh(acc);
    }
}

/// Gate blocks are stacked row-wise in the order input, forget, output,
/// candidate: w_x is (4*hidden) x input, w_h is (4*hidden) x hidden.
struct LstmCellParams {
    const double* w_x;
    const double* w_h;
    const double* b;
    int input_dim;
    int hidden;
};

inline void lstm_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                              std::span<const double> c_prev, const LstmCellParams& p,
                              std::span<double> h_out, std::span<double> c_out) {
    if (static_cast<int>(x.size()) != p.input_dim ||
        static_cast<int>(h_prev.size()) != p.hidden ||
        static_cast<int>(c_prev.size()) != p.hidden ||
        static_cast<int>(h_out.size()) != p.hidden ||
        static_cast<int>(c_out.size()) != p.hidden)
        throw std::invalid_argument("lstm_cell_forward: dimension mismatch");
    const int n = p.hidden;
    for (int i = 0; i < n; ++i) {
        double pre[4];
        for (int g = 0; g < 4; ++g) {
            const int row = g * n + i;
            double acc = p.b[row];
            const double* wx = p.w_x + static_cast<std::size_t>(row) * p.input_dim;
            for (int j = 0; j < p.input_dim; ++j) acc += wx[j] * x[j];
            const double* wh = p.w_h + static_cast<std::size_t>(row) * n;
            for (int j = 0; j < n; ++j) acc += wh[j] * h_prev[j];
            pre[g] = acc;
        }
        const double gi = sigmoid(pre[0]);
        const double gf = sigmoid(pre[1]);
        const double go = sigmoid(pre[2]);
        const double gc = std::tanh(pre[3]);
        c_out[i] = gf * c_prev[i] + gi * gc;
        h_out[i] = go * std::tanh(c_out[i]);
    }
}

/// Gate blocks stacked row-wise in the order update, reset, candidate. The
/// candidate's recurrent term uses the reset-gated state r (*) h_prev.
struct GruCellParams {
    const double* w_x;
    const double* w_h;
    const double* b;
    int input_dim;
    int hidden;
};

inline void gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                             const GruCellParams& p, std::span<double> h_out) {
    if (static_cast<int>(x.size()) != p.input_dim ||
        static_cast<int>(h_prev.size()) != p.hidden ||
        static_cast<int>(h_out.size()) != p.hidden)
        throw std::invalid_argument("gru_cell_forward: dimension mismatch");
    const int n = p.hidden;
    std::vector<double> z(n), rh(n);
    for (int i = 0; i < n; ++i) {
        double pre[2];
        for (int g = 0; g < 2; ++g) {
            const int row = g * n + i;
            double acc = p.b[row];
            const double* wx = p.w_x + static_cast<std::size_t>(row) * p.input_dim;
            for (int j = 0; j < p.input_dim; ++j) acc += wx[j] * x[j];
            const double* wh = p.w_h + static_cast<std::size_t>(row) * n;
            for (int j = 0; j < n; ++j) acc += wh[j] * h_prev[j];
            pre[g] = acc;
        }
        z[i] = sigmoid(pre[0]);
        rh[i] = sigmoid(pre[1]) * h_prev[i];
    }
    for (int i = 0; i < n; ++i) {
        const int row = 2 * n + i;
        double acc = p.b[row];
        const double* wx = p.w_x + static_cast<std::size_t>(row) * p.input_dim;
        for (int j = 0; j < p.input_dim; ++j) acc += wx[j] * x[j];
        const double* wh = p.w_h + static_cast<std::size_t>(row) * n;
        for (int j = 0; j < n; ++j) acc += wh[j] * rh[j];
        const double cand = std::tanh(acc);
        h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand;
    }
}

} // namespace mtc
