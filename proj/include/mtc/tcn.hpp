#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mtc/model_spec.hpp"
#include "mtc/rng.hpp"

namespace mtc {

/// Dilated causal convolution at one position, single channel:
/// D(t) = sum_{j=0}^{z-1} f(j) * x[t - dilation*j], zero-padded on the left.
inline double dilated_conv_at(const std::vector<double>& x, int t,
                              const std::vector<double>& f, int dilation) {
    if (t < 0 || t >= static_cast<int>(x.size()))
        throw std::invalid_argument("dilated_conv_at: position out of range");
    if (dilation < 1) throw std::invalid_argument("dilated_conv_at: dilation must be >= 1");
    double acc = 0.0;
    for (int j = 0; j < static_cast<int>(f.size()); ++j) {
        const int src = t - dilation * j;
        if (src < 0) continue;
        acc += f[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(src)];
    }
    return acc;
}

/// Stacked dilated causal convolutions. Layer i uses dilation 2^i; the output
/// at position t reads inputs at positions t, t-dilation, ... only, with zero
/// padding on the left. tanh nonlinearity, inverted dropout between layers
/// (train mode only, never after the last layer).
class TcnStack {
public:
    TcnStack(const ModelSpec& spec, const Manifest& manifest)
        : layers_(spec.tcn_layers), filters_(spec.tcn_filters), kernel_(spec.tcn_kernel),
          dropout_(spec.tcn_dropout) {
        w_off_.resize(layers_);
        b_off_.resize(layers_);
        in_ch_.resize(layers_);
        int in_ch = 1;
        for (int l = 0; l < layers_; ++l) {
            const std::string tag = "conv" + std::to_string(l);
            w_off_[l] = manifest.find(tag + ".w").offset;
            b_off_[l] = manifest.find(tag + ".b").offset;
            in_ch_[l] = in_ch;
            in_ch = filters_;
        }
    }

    int filters() const { return filters_; }

    /// Forward over one sequence of length T (input channel count 1).
    /// Returns the last layer's activations, T x filters row-major. When
    /// `cache` is set, keeps intermediates for a following backward().
    std::vector<double> forward(const double* x, int T, const double* params,
                                bool training, Rng* drop_rng, bool cache = false) {
        if (T < 1) throw std::invalid_argument("tcn forward: empty input sequence");
        t_len_ = T;
        cached_ = cache;
        if (cache) {
            inputs_.assign(layers_, {});
            tanh_out_.assign(layers_, {});
            masks_.assign(layers_, {});
        }
        std::vector<double> cur(x, x + T); // T x 1
        for (int l = 0; l < layers_; ++l) {
            const int in_ch = in_ch_[l];
            const int dilation = 1 << l;
            const double* w = params + w_off_[l];
            const double* b = params + b_off_[l];
            if (cache) inputs_[l] = cur;
            std::vector<double> next(static_cast<std::size_t>(T) * filters_);
            for (int t = 0; t < T; ++t) {
                double* out_t = next.data() + static_cast<std::size_t>(t) * filters_;
                for (int o = 0; o < filters_; ++o) {
                    const double* wo = w + static_cast<std::size_t>(o) * in_ch * kernel_;
                    double acc = b[o];
                    for (int j = 0; j < kernel_; ++j) {
                        const int src = t - dilation * j;
                        if (src < 0) continue;
                        const double* in_t = cur.data() + static_cast<std::size_t>(src) * in_ch;
                        const double* wj = wo + static_cast<std::size_t>(j) * in_ch;
                        for (int c = 0; c < in_ch; ++c) acc += wj[c] * in_t[c];
                    }
                    out_t[o] = std::tanh(acc);
                }
            }
            if (cache) tanh_out_[l] = next;
            if (l + 1 < layers_ && dropout_ > 0.0 && training) {
                if (drop_rng == nullptr)
                    throw std::invalid_argument("tcn forward: train mode needs a dropout stream");
                std::vector<double> mask(next.size());
                const double keep = 1.0 - dropout_;
                for (std::size_t i = 0; i < next.size(); ++i) {
                    mask[i] = drop_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
                    next[i] *= mask[i];
                }
                if (cache) masks_[l] = std::move(mask);
            }
            cur = std::move(next);
        }
        return cur;
    }

    /// dtop: gradient on the last layer's output (T x filters). Accumulates
    /// parameter gradients into grad (flat vector, manifest layout).
    void backward(const double* dtop, const double* params, double* grad) const {
        if (!cached_) throw std::logic_error("tcn backward: no cached forward");
        const int T = t_len_;
        std::vector<double> dcur(dtop, dtop + static_cast<std::size_t>(T) * filters_);
        for (int l = layers_ - 1; l >= 0; --l) {
            const int in_ch = in_ch_[l];
            const int dilation = 1 << l;
            const double* w = params + w_off_[l];
            double* dw = grad + w_off_[l];
            double* db = grad + b_off_[l];
            const std::vector<double>& th = tanh_out_[l];
            const std::vector<double>& in = inputs_[l];
            // through dropout (if this layer's output was masked)
            if (!masks_[l].empty()) {
                for (std::size_t i = 0; i < dcur.size(); ++i) dcur[i] *= masks_[l][i];
            }
            std::vector<double> din(static_cast<std::size_t>(T) * in_ch, 0.0);
            for (int t = 0; t < T; ++t) {
                const double* th_t = th.data() + static_cast<std::size_t>(t) * filters_;
                double* d_t = dcur.data() + static_cast<std::size_t>(t) * filters_;
                for (int o = 0; o < filters_; ++o) {
                    const double dpre = d_t[o] * (1.0 - th_t[o] * th_t[o]);
                    if (dpre == 0.0) continue;
                    db[o] += dpre;
                    double* dwo = dw + static_cast<std::size_t>(o) * in_ch * kernel_;
                    const double* wo = w + static_cast<std::size_t>(o) * in_ch * kernel_;
                    for (int j = 0; j < kernel_; ++j) {
                        const int src = t - dilation * j;
                        if (src < 0) continue;
                        const double* in_t = in.data() + static_cast<std::size_t>(src) * in_ch;
                        double* din_t = din.data() + static_cast<std::size_t>(src) * in_ch;
                        double* dwj = dwo + static_cast<std::size_t>(j) * in_ch;
                        const double* wj = wo + static_cast<std::size_t>(j) * in_ch;
                        for (int c = 0; c < in_ch; ++c) {
                            dwj[c] += dpre * in_t[c];
                            din_t[c] += dpre * wj[c];
                        }
                    }
                }
            }
            dcur = std::move(din);
        }
    }

private:
    int layers_;
    int filters_;
    int kernel_;
    double dropout_;
    std::vector<std::size_t> w_off_, b_off_;
    std::vector<int> in_ch_;

    // forward cache
    int t_len_ = 0;
    bool cached_ = false;
    std::vector<std::vector<double>> inputs_;   // per layer, input sequence
    std::vector<std::vector<double>> tanh_out_; // per layer, pre-dropout output
    std::vector<std::vector<double>> masks_;    // per layer, dropout mask (may be empty)
};

/// Spec-facing helper: run a sequence through a TCN described by `spec` with
/// the given flat parameter vector. Returns the last layer's outputs,
/// T x filters. Train mode applies dropout from `drop_rng`.
inline std::vector<double> tcn_forward(const std::vector<double>& x, const ModelSpec& spec,
                                       const std::vector<double>& params, bool training = false,
                                       Rng* drop_rng = nullptr) {
    const Manifest manifest = build_manifest(spec);
    if (params.size() != manifest.total)
        throw std::invalid_argument("tcn_forward: parameter vector size mismatch");
    TcnStack stack(spec, manifest);
    return stack.forward(x.data(), static_cast<int>(x.size()), params.data(), training, drop_rng);
}

} // namespace mtc
