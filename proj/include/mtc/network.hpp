#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mtc/model_spec.hpp"
#include "mtc/nn_math.hpp"
#include "mtc/rng.hpp"
#include "mtc/tcn.hpp"

namespace mtc {

/// Shared two-head sequence model: an architecture-specific backbone maps a
/// window of W activity values to a feature vector; a sigmoid head scores the
/// next-slot activity and a softplus head estimates the next inter-arrival
/// gap (in normalised units, see TrainedModel::reg_scale).
class SequenceModel {
public:
    static std::unique_ptr<SequenceModel> create(const ModelSpec& spec);

    virtual ~SequenceModel() = default;

    const ModelSpec& spec() const { return spec_; }
    const Manifest& manifest() const { return manifest_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// Weights uniform on +-1/sqrt(fan_in), biases zero; block order fixed by
    /// the manifest, so identical seeds give identical initial vectors. The
    /// lstm forget-gate bias starts at 1 (the usual open-gate initialisation).
    void init_params(Rng& rng) {
        for (const auto& block : manifest_.blocks) {
            double* p = params_.data() + block.offset;
            const bool is_bias = block.cols == 1 && block.name.find(".b") != std::string::npos;
            if (is_bias) {
                std::memset(p, 0, block.size() * sizeof(double));
                if (spec_.kind == ModelKind::lstm && block.name.rfind("layer", 0) == 0) {
                    const std::size_t n = block.rows / 4;
                    for (std::size_t i = n; i < 2 * n; ++i) p[i] = 1.0; // forget gate block
                }
            } else {
                const double s = 1.0 / std::sqrt(static_cast<double>(block.cols));
                for (std::size_t i = 0; i < block.size(); ++i) p[i] = rng.uniform(-s, s);
            }
        }
    }

    /// x: batch * window activity values, row-major.
    void forward(const double* x, int batch, bool training = false, Rng* drop_rng = nullptr) {
        if (batch < 1) throw std::invalid_argument("forward: empty batch");
        batch_ = batch;
        features_forward(x, batch, training, drop_rng);
        score_raw_.resize(batch);
        score_.resize(batch);
        gap_raw_.resize(batch);
        gap_.resize(batch);
        const double* sw = params_.data() + sw_off_;
        const double* gw = params_.data() + gw_off_;
        const double sb = params_[sb_off_];
        const double gb = params_[gb_off_];
        for (int b = 0; b < batch; ++b) {
            const double* f = feat_.data() + static_cast<std::size_t>(b) * feature_dim_;
            double sacc = sb, gacc = gb;
            for (int i = 0; i < feature_dim_; ++i) {
                sacc += sw[i] * f[i];
                gacc += gw[i] * f[i];
            }
            score_raw_[b] = sacc;
            score_[b] = sigmoid(sacc);
            gap_raw_[b] = gacc;
            gap_[b] = softplus(gacc);
        }
    }

    const std::vector<double>& scores() const { return score_; }
    const std::vector<double>& gaps() const { return gap_; }

    /// dscore/dgap are dLoss/d(score) and dLoss/d(gap) per batch item,
    /// differentiated at the squashed outputs. Accumulates into grad.
    void backward(const double* dscore, const double* dgap, std::vector<double>& grad) {
        if (grad.size() != manifest_.total)
            throw std::invalid_argument("backward: gradient vector size mismatch");
        const int batch = batch_;
        dfeat_.assign(static_cast<std::size_t>(batch) * feature_dim_, 0.0);
        const double* sw = params_.data() + sw_off_;
        const double* gw = params_.data() + gw_off_;
        double* dsw = grad.data() + sw_off_;
        double* dgw = grad.data() + gw_off_;
        for (int b = 0; b < batch; ++b) {
            const double* f = feat_.data() + static_cast<std::size_t>(b) * feature_dim_;
            double* df = dfeat_.data() + static_cast<std::size_t>(b) * feature_dim_;
            const double dsraw = dscore[b] * score_[b] * (1.0 - score_[b]);
            const double dgraw = dgap[b] * sigmoid(gap_raw_[b]); // softplus' = sigmoid
            grad[sb_off_] += dsraw;
            grad[gb_off_] += dgraw;
            for (int i = 0; i < feature_dim_; ++i) {
                dsw[i] += dsraw * f[i];
                dgw[i] += dgraw * f[i];
                df[i] = dsraw * sw[i] + dgraw * gw[i];
            }
        }
        features_backward(dfeat_.data(), grad);
    }

protected:
    explicit SequenceModel(const ModelSpec& spec)
        : spec_(spec), manifest_(build_manifest(spec)), params_(manifest_.total, 0.0) {
        sw_off_ = manifest_.find("head.score_w").offset;
        sb_off_ = manifest_.find("head.score_b").offset;
        gw_off_ = manifest_.find("head.gap_w").offset;
        gb_off_ = manifest_.find("head.gap_b").offset;
    }

    virtual void features_forward(const double* x, int batch, bool training, Rng* drop_rng) = 0;
    virtual void features_backward(const double* dfeat, std::vector<double>& grad) = 0;

    ModelSpec spec_;
    Manifest manifest_;
    std::vector<double> params_;
    int feature_dim_ = 0;
    int batch_ = 0;
    std::vector<double> feat_; // batch x feature_dim

private:
    std::size_t sw_off_ = 0, sb_off_ = 0, gw_off_ = 0, gb_off_ = 0;
    std::vector<double> score_raw_, score_, gap_raw_, gap_, dfeat_;
};

namespace detail {

struct LayerOffsets {
    std::size_t w_x, w_h, b;
    int in_dim, hidden;
};

inline std::vector<LayerOffsets> recurrent_offsets(const ModelSpec& spec, const Manifest& m) {
    std::vector<LayerOffsets> out;
    int in_dim = 1;
    for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
        const std::string tag = "layer" + std::to_string(l);
        out.push_back({m.find(tag + ".w_x").offset, m.find(tag + ".w_h").offset,
                       m.find(tag + ".b").offset, in_dim, spec.hidden[l]});
        in_dim = spec.hidden[l];
    }
    return out;
}

inline void add_bias_rows(double* dst, const double* bias, int batch, int n) {
    for (int b = 0; b < batch; ++b) {
        double* row = dst + static_cast<std::size_t>(b) * n;
        for (int i = 0; i < n; ++i) row[i] = bias[i];
    }
}

inline void colsum_acc(const double* src, double* dst, int batch, int n) {
    for (int b = 0; b < batch; ++b) {
        const double* row = src + static_cast<std::size_t>(b) * n;
        for (int i = 0; i < n; ++i) dst[i] += row[i];
    }
}

} // namespace detail

/// Vanilla tanh recurrence, stacked.
class RnnModel final : public SequenceModel {
public:
    explicit RnnModel(const ModelSpec& spec)
        : SequenceModel(spec), layers_(detail::recurrent_offsets(spec, manifest_)) {
        feature_dim_ = spec.hidden.back();
    }

protected:
    void features_forward(const double* x, int batch, bool, Rng*) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        xcol_.assign(static_cast<std::size_t>(W) * batch, 0.0);
        for (int t = 0; t < W; ++t)
            for (int b = 0; b < batch; ++b)
                xcol_[static_cast<std::size_t>(t) * batch + b] =
                    x[static_cast<std::size_t>(b) * W + t];
        h_.assign(L, {});
        for (int l = 0; l < L; ++l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            h_[l].assign(static_cast<std::size_t>(W + 1) * batch * n, 0.0);
            std::vector<double> pre(static_cast<std::size_t>(batch) * n);
            for (int t = 0; t < W; ++t) {
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                const double* h_prev = h_[l].data() + static_cast<std::size_t>(t) * batch * n;
                double* h_t = h_[l].data() + static_cast<std::size_t>(t + 1) * batch * n;
                detail::add_bias_rows(pre.data(), params_.data() + lo.b, batch, n);
                gemm_abt(in, params_.data() + lo.w_x, pre.data(), batch, lo.in_dim, n);
                gemm_abt(h_prev, params_.data() + lo.w_h, pre.data(), batch, n, n);
                for (std::size_t i = 0; i < pre.size(); ++i) h_t[i] = std::tanh(pre[i]);
            }
        }
        const int top = L - 1;
        const int nf = layers_[top].hidden;
        feat_.assign(h_[top].begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(W) * batch * nf),
                     h_[top].end());
    }

    void features_backward(const double* dfeat, std::vector<double>& grad) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        const int batch = batch_;
        std::vector<double> dx_above; // gradient wrt this layer's inputs, W x batch x in_dim
        for (int l = L - 1; l >= 0; --l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            std::vector<double> dcarry(static_cast<std::size_t>(batch) * n, 0.0);
            std::vector<double> dx_below(static_cast<std::size_t>(W) * batch * lo.in_dim, 0.0);
            std::vector<double> dpre(static_cast<std::size_t>(batch) * n);
            for (int t = W - 1; t >= 0; --t) {
                const double* h_t = h_[l].data() + static_cast<std::size_t>(t + 1) * batch * n;
                const double* h_prev = h_[l].data() + static_cast<std::size_t>(t) * batch * n;
                // dL/dh_t: carried + (head at last step of top layer | upper layer input grads)
                for (std::size_t i = 0; i < dcarry.size(); ++i) {
                    double dh = dcarry[i];
                    if (l == L - 1 && t == W - 1) dh += dfeat[i];
                    if (l < L - 1) dh += dx_above[static_cast<std::size_t>(t) * batch * n + i];
                    dpre[i] = dh * (1.0 - h_t[i] * h_t[i]);
                }
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                gemm_atb(dpre.data(), in, grad.data() + lo.w_x, batch, n, lo.in_dim);
                gemm_atb(dpre.data(), h_prev, grad.data() + lo.w_h, batch, n, n);
                detail::colsum_acc(dpre.data(), grad.data() + lo.b, batch, n);
                std::fill(dcarry.begin(), dcarry.end(), 0.0);
                gemm_ab(dpre.data(), params_.data() + lo.w_h, dcarry.data(), batch, n, n);
                if (l > 0) {
                    gemm_ab(dpre.data(), params_.data() + lo.w_x,
                            dx_below.data() + static_cast<std::size_t>(t) * batch * lo.in_dim,
                            batch, n, lo.in_dim);
                }
            }
            dx_above = std::move(dx_below);
        }
    }

private:
    std::vector<detail::LayerOffsets> layers_;
    std::vector<double> xcol_;           // W x batch, gathered input columns
    std::vector<std::vector<double>> h_; // per layer, (W+1) x batch x n
};

/// LSTM with gate blocks ordered input, forget, output, candidate.
class LstmModel final : public SequenceModel {
public:
    explicit LstmModel(const ModelSpec& spec)
        : SequenceModel(spec), layers_(detail::recurrent_offsets(spec, manifest_)) {
        feature_dim_ = spec.hidden.back();
    }

protected:
    void features_forward(const double* x, int batch, bool, Rng*) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        xcol_.assign(static_cast<std::size_t>(W) * batch, 0.0);
        for (int t = 0; t < W; ++t)
            for (int b = 0; b < batch; ++b)
                xcol_[static_cast<std::size_t>(t) * batch + b] =
                    x[static_cast<std::size_t>(b) * W + t];
        h_.assign(L, {});
        c_.assign(L, {});
        gates_.assign(L, {});
        tc_.assign(L, {});
        for (int l = 0; l < L; ++l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            const std::size_t bn = static_cast<std::size_t>(batch) * n;
            h_[l].assign((W + 1) * bn, 0.0);
            c_[l].assign((W + 1) * bn, 0.0);
            gates_[l].assign(static_cast<std::size_t>(W) * batch * 4 * n, 0.0);
            tc_[l].assign(static_cast<std::size_t>(W) * bn, 0.0);
            std::vector<double> pre(static_cast<std::size_t>(batch) * 4 * n);
            for (int t = 0; t < W; ++t) {
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                const double* h_prev = h_[l].data() + t * bn;
                const double* c_prev = c_[l].data() + t * bn;
                double* h_t = h_[l].data() + (t + 1) * bn;
                double* c_t = c_[l].data() + (t + 1) * bn;
                double* g_t = gates_[l].data() + static_cast<std::size_t>(t) * batch * 4 * n;
                double* tc_t = tc_[l].data() + t * bn;
                detail::add_bias_rows(pre.data(), params_.data() + lo.b, batch, 4 * n);
                gemm_abt(in, params_.data() + lo.w_x, pre.data(), batch, lo.in_dim, 4 * n);
                gemm_abt(h_prev, params_.data() + lo.w_h, pre.data(), batch, n, 4 * n);
                for (int b = 0; b < batch; ++b) {
                    const double* p = pre.data() + static_cast<std::size_t>(b) * 4 * n;
                    double* g = g_t + static_cast<std::size_t>(b) * 4 * n;
                    for (int i = 0; i < n; ++i) {
                        const double gi = sigmoid(p[i]);
                        const double gf = sigmoid(p[n + i]);
                        const double go = sigmoid(p[2 * n + i]);
                        const double gc = std::tanh(p[3 * n + i]);
                        g[i] = gi;
                        g[n + i] = gf;
                        g[2 * n + i] = go;
                        g[3 * n + i] = gc;
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        c_t[k] = gf * c_prev[k] + gi * gc;
                        tc_t[k] = std::tanh(c_t[k]);
                        h_t[k] = go * tc_t[k];
                    }
                }
            }
        }
        const int top = L - 1;
        const int nf = layers_[top].hidden;
        feat_.assign(h_[top].begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(W) * batch * nf),
                     h_[top].end());
    }

    void features_backward(const double* dfeat, std::vector<double>& grad) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        const int batch = batch_;
        std::vector<double> dx_above;
        for (int l = L - 1; l >= 0; --l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            const std::size_t bn = static_cast<std::size_t>(batch) * n;
            std::vector<double> dh_carry(bn, 0.0), dc_carry(bn, 0.0);
            std::vector<double> dx_below(static_cast<std::size_t>(W) * batch * lo.in_dim, 0.0);
            std::vector<double> dpre(static_cast<std::size_t>(batch) * 4 * n);
            for (int t = W - 1; t >= 0; --t) {
                const double* c_prev = c_[l].data() + t * bn;
                const double* g_t = gates_[l].data() + static_cast<std::size_t>(t) * batch * 4 * n;
                const double* tc_t = tc_[l].data() + t * bn;
                for (int b = 0; b < batch; ++b) {
                    const double* g = g_t + static_cast<std::size_t>(b) * 4 * n;
                    double* dp = dpre.data() + static_cast<std::size_t>(b) * 4 * n;
                    for (int i = 0; i < n; ++i) {
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        double dh = dh_carry[k];
                        if (l == L - 1 && t == W - 1) dh += dfeat[k];
                        if (l < L - 1) dh += dx_above[static_cast<std::size_t>(t) * bn + k];
                        const double gi = g[i], gf = g[n + i], go = g[2 * n + i], gc = g[3 * n + i];
                        const double dc = dc_carry[k] + dh * go * (1.0 - tc_t[k] * tc_t[k]);
                        const double d_o = dh * tc_t[k];
                        dp[i] = dc * gc * gi * (1.0 - gi);
                        dp[n + i] = dc * c_prev[k] * gf * (1.0 - gf);
                        dp[2 * n + i] = d_o * go * (1.0 - go);
                        dp[3 * n + i] = dc * gi * (1.0 - gc * gc);
                        dc_carry[k] = dc * gf;
                    }
                }
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                const double* h_prev = h_[l].data() + t * bn;
                gemm_atb(dpre.data(), in, grad.data() + lo.w_x, batch, 4 * n, lo.in_dim);
                gemm_atb(dpre.data(), h_prev, grad.data() + lo.w_h, batch, 4 * n, n);
                detail::colsum_acc(dpre.data(), grad.data() + lo.b, batch, 4 * n);
                std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
                gemm_ab(dpre.data(), params_.data() + lo.w_h, dh_carry.data(), batch, 4 * n, n);
                if (l > 0) {
                    gemm_ab(dpre.data(), params_.data() + lo.w_x,
                            dx_below.data() + static_cast<std::size_t>(t) * batch * lo.in_dim,
                            batch, 4 * n, lo.in_dim);
                }
            }
            dx_above = std::move(dx_below);
        }
    }

private:
    std::vector<detail::LayerOffsets> layers_;
    std::vector<double> xcol_;
    std::vector<std::vector<double>> h_, c_;  // (W+1) x batch x n
    std::vector<std::vector<double>> gates_;  // W x batch x 4n (i, f, o, cand)
    std::vector<std::vector<double>> tc_;     // W x batch x n, tanh(c_t)
};

/// GRU with gate blocks ordered update, reset, candidate.
class GruModel final : public SequenceModel {
public:
    explicit GruModel(const ModelSpec& spec)
        : SequenceModel(spec), layers_(detail::recurrent_offsets(spec, manifest_)) {
        feature_dim_ = spec.hidden.back();
    }

protected:
    void features_forward(const double* x, int batch, bool, Rng*) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        xcol_.assign(static_cast<std::size_t>(W) * batch, 0.0);
        for (int t = 0; t < W; ++t)
            for (int b = 0; b < batch; ++b)
                xcol_[static_cast<std::size_t>(t) * batch + b] =
                    x[static_cast<std::size_t>(b) * W + t];
        h_.assign(L, {});
        zr_.assign(L, {});
        cand_.assign(L, {});
        rh_.assign(L, {});
        for (int l = 0; l < L; ++l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            const std::size_t bn = static_cast<std::size_t>(batch) * n;
            h_[l].assign((W + 1) * bn, 0.0);
            zr_[l].assign(static_cast<std::size_t>(W) * batch * 2 * n, 0.0);
            cand_[l].assign(static_cast<std::size_t>(W) * bn, 0.0);
            rh_[l].assign(static_cast<std::size_t>(W) * bn, 0.0);
            std::vector<double> pre_zr(static_cast<std::size_t>(batch) * 2 * n);
            std::vector<double> pre_c(bn);
            for (int t = 0; t < W; ++t) {
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                const double* h_prev = h_[l].data() + t * bn;
                double* h_t = h_[l].data() + (t + 1) * bn;
                double* zr_t = zr_[l].data() + static_cast<std::size_t>(t) * batch * 2 * n;
                double* cand_t = cand_[l].data() + t * bn;
                double* rh_t = rh_[l].data() + t * bn;
                detail::add_bias_rows(pre_zr.data(), params_.data() + lo.b, batch, 2 * n);
                gemm_abt(in, params_.data() + lo.w_x, pre_zr.data(), batch, lo.in_dim, 2 * n);
                gemm_abt(h_prev, params_.data() + lo.w_h, pre_zr.data(), batch, n, 2 * n);
                for (int b = 0; b < batch; ++b) {
                    const double* p = pre_zr.data() + static_cast<std::size_t>(b) * 2 * n;
                    double* zr = zr_t + static_cast<std::size_t>(b) * 2 * n;
                    for (int i = 0; i < n; ++i) {
                        zr[i] = sigmoid(p[i]);         // update gate z
                        zr[n + i] = sigmoid(p[n + i]); // reset gate r
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        rh_t[k] = zr[n + i] * h_prev[k];
                    }
                }
                // candidate: rows [2n, 3n) of the gate blocks
                detail::add_bias_rows(pre_c.data(), params_.data() + lo.b + 2 * n, batch, n);
                gemm_abt(in, params_.data() + lo.w_x + static_cast<std::size_t>(2 * n) * lo.in_dim,
                         pre_c.data(), batch, lo.in_dim, n);
                gemm_abt(rh_t, params_.data() + lo.w_h + static_cast<std::size_t>(2 * n) * n,
                         pre_c.data(), batch, n, n);
                for (int b = 0; b < batch; ++b) {
                    const double* zr = zr_t + static_cast<std::size_t>(b) * 2 * n;
                    for (int i = 0; i < n; ++i) {
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        cand_t[k] = std::tanh(pre_c[k]);
                        h_t[k] = (1.0 - zr[i]) * h_prev[k] + zr[i] * cand_t[k];
                    }
                }
            }
        }
        const int top = L - 1;
        const int nf = layers_[top].hidden;
        feat_.assign(h_[top].begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(W) * batch * nf),
                     h_[top].end());
    }

    void features_backward(const double* dfeat, std::vector<double>& grad) override {
        const int W = spec_.window;
        const int L = static_cast<int>(layers_.size());
        const int batch = batch_;
        std::vector<double> dx_above;
        for (int l = L - 1; l >= 0; --l) {
            const auto& lo = layers_[l];
            const int n = lo.hidden;
            const std::size_t bn = static_cast<std::size_t>(batch) * n;
            std::vector<double> dh_carry(bn, 0.0);
            std::vector<double> dx_below(static_cast<std::size_t>(W) * batch * lo.in_dim, 0.0);
            std::vector<double> dpre_zr(static_cast<std::size_t>(batch) * 2 * n);
            std::vector<double> dpre_c(bn), drh(bn);
            for (int t = W - 1; t >= 0; --t) {
                const double* h_prev = h_[l].data() + t * bn;
                const double* zr_t = zr_[l].data() + static_cast<std::size_t>(t) * batch * 2 * n;
                const double* cand_t = cand_[l].data() + t * bn;
                const double* rh_t = rh_[l].data() + t * bn;
                // dcand -> dpre_c, then drh via W_hc
                for (int b = 0; b < batch; ++b) {
                    const double* zr = zr_t + static_cast<std::size_t>(b) * 2 * n;
                    for (int i = 0; i < n; ++i) {
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        double dh = dh_carry[k];
                        if (l == L - 1 && t == W - 1) dh += dfeat[k];
                        if (l < L - 1) dh += dx_above[static_cast<std::size_t>(t) * bn + k];
                        dh_carry[k] = dh * (1.0 - zr[i]); // reused below as dh_prev accumulator
                        const double dcand = dh * zr[i];
                        const double dz = dh * (cand_t[k] - h_prev[k]);
                        dpre_c[k] = dcand * (1.0 - cand_t[k] * cand_t[k]);
                        dpre_zr[static_cast<std::size_t>(b) * 2 * n + i] = dz * zr[i] * (1.0 - zr[i]);
                        dpre_zr[static_cast<std::size_t>(b) * 2 * n + n + i] = 0.0; // filled after drh
                    }
                }
                std::fill(drh.begin(), drh.end(), 0.0);
                gemm_ab(dpre_c.data(), params_.data() + lo.w_h + static_cast<std::size_t>(2 * n) * n,
                        drh.data(), batch, n, n);
                for (int b = 0; b < batch; ++b) {
                    const double* zr = zr_t + static_cast<std::size_t>(b) * 2 * n;
                    for (int i = 0; i < n; ++i) {
                        const std::size_t k = static_cast<std::size_t>(b) * n + i;
                        const double r = zr[n + i];
                        const double dr = drh[k] * h_prev[k];
                        dh_carry[k] += drh[k] * r;
                        dpre_zr[static_cast<std::size_t>(b) * 2 * n + n + i] = dr * r * (1.0 - r);
                    }
                }
                const double* in = (l == 0) ? xcol_.data() + static_cast<std::size_t>(t) * batch
                                            : h_[l - 1].data() +
                                                  static_cast<std::size_t>(t + 1) * batch * layers_[l - 1].hidden;
                // parameter grads: z/r blocks then candidate block
                gemm_atb(dpre_zr.data(), in, grad.data() + lo.w_x, batch, 2 * n, lo.in_dim);
                gemm_atb(dpre_zr.data(), h_prev, grad.data() + lo.w_h, batch, 2 * n, n);
                detail::colsum_acc(dpre_zr.data(), grad.data() + lo.b, batch, 2 * n);
                gemm_atb(dpre_c.data(), in,
                         grad.data() + lo.w_x + static_cast<std::size_t>(2 * n) * lo.in_dim, batch,
                         n, lo.in_dim);
                gemm_atb(dpre_c.data(), rh_t,
                         grad.data() + lo.w_h + static_cast<std::size_t>(2 * n) * n, batch, n, n);
                detail::colsum_acc(dpre_c.data(), grad.data() + lo.b + 2 * n, batch, n);
                // recurrent-path gradient into h_prev
                gemm_ab(dpre_zr.data(), params_.data() + lo.w_h, dh_carry.data(), batch, 2 * n, n);
                if (l > 0) {
                    double* dx_t = dx_below.data() + static_cast<std::size_t>(t) * batch * lo.in_dim;
                    gemm_ab(dpre_zr.data(), params_.data() + lo.w_x, dx_t, batch, 2 * n, lo.in_dim);
                    gemm_ab(dpre_c.data(),
                            params_.data() + lo.w_x + static_cast<std::size_t>(2 * n) * lo.in_dim,
                            dx_t, batch, n, lo.in_dim);
                }
            }
            dx_above = std::move(dx_below);
        }
    }

private:
    std::vector<detail::LayerOffsets> layers_;
    std::vector<double> xcol_;
    std::vector<std::vector<double>> h_;    // (W+1) x batch x n
    std::vector<std::vector<double>> zr_;   // W x batch x 2n
    std::vector<std::vector<double>> cand_; // W x batch x n
    std::vector<std::vector<double>> rh_;   // W x batch x n, r (*) h_prev
};

/// Dilated causal convolution backbone; the feature vector is the last
/// position of the top layer.
class TcnModel final : public SequenceModel {
public:
    explicit TcnModel(const ModelSpec& spec) : SequenceModel(spec) {
        feature_dim_ = spec.tcn_filters;
    }

protected:
    void features_forward(const double* x, int batch, bool training, Rng* drop_rng) override {
        const int W = spec_.window;
        const int F = feature_dim_;
        while (static_cast<int>(stacks_.size()) < batch) stacks_.emplace_back(spec_, manifest_);
        feat_.resize(static_cast<std::size_t>(batch) * F);
        for (int b = 0; b < batch; ++b) {
            const std::vector<double> out = stacks_[b].forward(
                x + static_cast<std::size_t>(b) * W, W, params_.data(), training, drop_rng, true);
            std::copy(out.end() - F, out.end(), feat_.begin() + static_cast<std::size_t>(b) * F);
        }
    }

    void features_backward(const double* dfeat, std::vector<double>& grad) override {
        const int W = spec_.window;
        const int F = feature_dim_;
        std::vector<double> dtop(static_cast<std::size_t>(W) * F);
        for (int b = 0; b < batch_; ++b) {
            std::fill(dtop.begin(), dtop.end(), 0.0);
            std::copy(dfeat + static_cast<std::size_t>(b) * F,
                      dfeat + static_cast<std::size_t>(b + 1) * F,
                      dtop.end() - F);
            stacks_[b].backward(dtop.data(), params_.data(), grad.data());
        }
    }

private:
    std::vector<TcnStack> stacks_; // one cached stack per batch lane
};

inline std::unique_ptr<SequenceModel> SequenceModel::create(const ModelSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ModelKind::rnn: return std::make_unique<RnnModel>(spec);
        case ModelKind::lstm: return std::make_unique<LstmModel>(spec);
        case ModelKind::gru: return std::make_unique<GruModel>(spec);
        case ModelKind::tcn: return std::make_unique<TcnModel>(spec);
        case ModelKind::arima:
            throw std::invalid_argument("SequenceModel: arima is not a neural model");
    }
    throw std::invalid_argument("SequenceModel: bad kind");
}

} // namespace mtc
