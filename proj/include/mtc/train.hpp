#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mtc/adam.hpp"
#include "mtc/dataset.hpp"
#include "mtc/errors.hpp"
#include "mtc/network.hpp"

namespace mtc {

struct TrainedModel {
    ModelSpec spec;
    Manifest manifest;
    std::vector<double> params;
    std::vector<std::pair<double, double>> loss_curve; // (train, val) per epoch
    double train_seconds = 0.0;
    double infer_seconds_per_sample = 0.0; // measured by the eval stage
    std::size_t param_count = 0;
    int best_epoch = 0;
    double reg_scale = 1.0;
};

namespace detail {

/// Training pool: classification windows carry a next-slot target, regression
/// windows carry a (normalised) gap target; masks select which head each
/// sample trains.
struct SamplePool {
    int window = 0;
    std::vector<double> x;       // n * window
    std::vector<double> y_cls;
    std::vector<double> m_cls;
    std::vector<double> y_reg;
    std::vector<double> m_reg;

    std::size_t size() const { return y_cls.size(); }

    void add_cls(const double* w, int window_w, double target) {
        x.insert(x.end(), w, w + window_w);
        y_cls.push_back(target);
        m_cls.push_back(1.0);
        y_reg.push_back(0.0);
        m_reg.push_back(0.0);
    }
    void add_reg(const double* w, int window_w, double target) {
        x.insert(x.end(), w, w + window_w);
        y_cls.push_back(0.0);
        m_cls.push_back(0.0);
        y_reg.push_back(target);
        m_reg.push_back(1.0);
    }
};

inline SamplePool build_pool(const SampleSet& cls, const RegSet& reg, int window,
                             double reg_scale) {
    SamplePool pool;
    pool.window = window;
    pool.x.reserve((cls.size() + reg.size()) * static_cast<std::size_t>(window));
    for (std::size_t i = 0; i < cls.size(); ++i)
        pool.add_cls(cls.window_at(i, window), window, static_cast<double>(cls.y[i]));
    for (std::size_t i = 0; i < reg.size(); ++i)
        pool.add_reg(reg.window_at(i, window), window, reg.gap[i] / reg_scale);
    return pool;
}

struct LossAccum {
    double cls_sq = 0.0, reg_sq = 0.0;
    double cls_n = 0.0, reg_n = 0.0;

    double value() const {
        double loss = 0.0;
        if (cls_n > 0.0) loss += std::sqrt(cls_sq / cls_n);
        if (reg_n > 0.0) loss += std::sqrt(reg_sq / reg_n);
        return loss;
    }
};

/// Combined RMSE over the two heads. When grads are requested, fills
/// dL/dscore and dL/dgap for each batch item.
inline double combined_rmse(const std::vector<double>& scores, const std::vector<double>& gaps,
                            const SamplePool& pool, const std::size_t* idx, int batch,
                            std::vector<double>* dscore, std::vector<double>* dgap) {
    LossAccum acc;
    for (int b = 0; b < batch; ++b) {
        const std::size_t i = idx[b];
        if (pool.m_cls[i] > 0.0) {
            const double e = scores[b] - pool.y_cls[i];
            acc.cls_sq += e * e;
            acc.cls_n += 1.0;
        }
        if (pool.m_reg[i] > 0.0) {
            const double e = gaps[b] - pool.y_reg[i];
            acc.reg_sq += e * e;
            acc.reg_n += 1.0;
        }
    }
    const double rmse_cls = acc.cls_n > 0.0 ? std::sqrt(acc.cls_sq / acc.cls_n) : 0.0;
    const double rmse_reg = acc.reg_n > 0.0 ? std::sqrt(acc.reg_sq / acc.reg_n) : 0.0;
    if (dscore != nullptr) {
        dscore->assign(batch, 0.0);
        dgap->assign(batch, 0.0);
        for (int b = 0; b < batch; ++b) {
            const std::size_t i = idx[b];
            if (pool.m_cls[i] > 0.0 && rmse_cls > 0.0)
                (*dscore)[b] = (scores[b] - pool.y_cls[i]) / (acc.cls_n * rmse_cls);
            if (pool.m_reg[i] > 0.0 && rmse_reg > 0.0)
                (*dgap)[b] = (gaps[b] - pool.y_reg[i]) / (acc.reg_n * rmse_reg);
        }
    }
    return rmse_cls + rmse_reg;
}

inline void check_finite_grad(const std::vector<double>& grad, const Manifest& manifest) {
    for (const auto& block : manifest.blocks) {
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (!std::isfinite(grad[block.offset + i]))
                throw TrainError("non-finite gradient in block " + block.name);
        }
    }
}

/// Full-set loss, evaluated in chunks (inference mode).
inline double eval_pool_loss(SequenceModel& model, const SamplePool& pool, int chunk) {
    LossAccum acc;
    const std::size_t n = pool.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(chunk));
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(chunk)) {
        const int b = static_cast<int>(std::min<std::size_t>(chunk, n - at));
        model.forward(pool.x.data() + at * static_cast<std::size_t>(pool.window), b, false, nullptr);
        const auto& scores = model.scores();
        const auto& gaps = model.gaps();
        for (int j = 0; j < b; ++j) {
            const std::size_t i = at + static_cast<std::size_t>(j);
            if (pool.m_cls[i] > 0.0) {
                const double e = scores[j] - pool.y_cls[i];
                acc.cls_sq += e * e;
                acc.cls_n += 1.0;
            }
            if (pool.m_reg[i] > 0.0) {
                const double e = gaps[j] - pool.y_reg[i];
                acc.reg_sq += e * e;
                acc.reg_n += 1.0;
            }
        }
    }
    return acc.value();
}

} // namespace detail

/// Mini-batch Adam on the summed RMSE of the two heads. Keeps the parameters
/// from the epoch with the lowest validation loss. Deterministic given
/// (spec, config, dataset).
inline TrainedModel train(const ModelSpec& spec, const TrainConfig& config,
                          const SupervisedDataset& ds) {
    spec.validate();
    config.validate();
    detail::SamplePool pool =
        detail::build_pool(ds.cls_train, ds.reg_train, ds.window, ds.reg_scale);
    detail::SamplePool val_pool =
        detail::build_pool(ds.cls_val, ds.reg_val, ds.window, ds.reg_scale);
    if (pool.size() == 0) throw ConfigError("train: empty training set");
    if (spec.window != ds.window)
        throw ConfigError("train: model window does not match dataset window");

    const auto t0 = std::chrono::steady_clock::now();
    auto model = SequenceModel::create(spec);
    Rng init_rng = derive_stream(config.seed, "init");
    model->init_params(init_rng);

    AdamState adam(model->params().size());
    std::vector<double> grad(model->params().size(), 0.0);
    std::vector<double> bx;
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainedModel out;
    out.spec = spec;
    out.manifest = model->manifest();
    out.param_count = model->manifest().total;
    out.reg_scale = ds.reg_scale;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = model->params();
    std::vector<double> dscore, dgap;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = derive_stream(config.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j =
                static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }
        Rng drop_rng = derive_stream(config.seed, "dropout", static_cast<std::uint64_t>(epoch));

        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t at = 0; at < pool.size(); at += static_cast<std::size_t>(config.batch)) {
            const int b = static_cast<int>(
                std::min<std::size_t>(config.batch, pool.size() - at));
            bx.resize(static_cast<std::size_t>(b) * pool.window);
            for (int j = 0; j < b; ++j) {
                std::memcpy(bx.data() + static_cast<std::size_t>(j) * pool.window,
                            pool.x.data() + order[at + j] * static_cast<std::size_t>(pool.window),
                            static_cast<std::size_t>(pool.window) * sizeof(double));
            }
            model->forward(bx.data(), b, true, &drop_rng);
            const double loss = detail::combined_rmse(model->scores(), model->gaps(), pool,
                                                      order.data() + at, b, &dscore, &dgap);
            if (!std::isfinite(loss))
                throw TrainError("training diverged at epoch " + std::to_string(epoch + 1));
            std::fill(grad.begin(), grad.end(), 0.0);
            model->backward(dscore.data(), dgap.data(), grad);
            detail::check_finite_grad(grad, model->manifest());
            adam_step(model->params(), grad, adam, config);
            epoch_loss += loss;
            ++batches;
        }
        const double train_loss = batches > 0 ? epoch_loss / batches : 0.0;
        const double val_loss =
            val_pool.size() > 0 ? detail::eval_pool_loss(*model, val_pool, config.batch) : train_loss;
        if (!std::isfinite(val_loss))
            throw TrainError("validation loss diverged at epoch " + std::to_string(epoch + 1));
        out.loss_curve.emplace_back(train_loss, val_loss);
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = model->params();
            out.best_epoch = epoch;
        }
    }
    out.params = std::move(best_params);
    out.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct Prediction {
    double activity_score = 0.0;     // in [0, 1]
    double interarrival_slots = 0.0; // > 0
};

/// Inference wrapper over a trained model. predict() is pure: identical
/// windows give identical outputs, dropout stays off.
class Predictor {
public:
    explicit Predictor(const TrainedModel& trained)
        : model_(SequenceModel::create(trained.spec)), scale_(trained.reg_scale) {
        if (trained.params.size() != model_->manifest().total)
            throw std::invalid_argument("Predictor: parameter vector size mismatch");
        model_->params() = trained.params;
    }

    Prediction predict(std::span<const double> window) {
        if (static_cast<int>(window.size()) != model_->spec().window)
            throw std::invalid_argument("predict: window length mismatch");
        model_->forward(window.data(), 1, false, nullptr);
        return {model_->scores()[0], model_->gaps()[0] * scale_};
    }

    /// Batched scoring; gaps come back in slots.
    void predict_batch(const double* x, int n, std::vector<double>& scores,
                       std::vector<double>& gaps, int chunk = 256) {
        scores.clear();
        gaps.clear();
        const int W = model_->spec().window;
        for (int at = 0; at < n; at += chunk) {
            const int b = std::min(chunk, n - at);
            model_->forward(x + static_cast<std::size_t>(at) * W, b, false, nullptr);
            for (int j = 0; j < b; ++j) {
                scores.push_back(model_->scores()[j]);
                gaps.push_back(model_->gaps()[j] * scale_);
            }
        }
    }

    const ModelSpec& spec() const { return model_->spec(); }

private:
    std::unique_ptr<SequenceModel> model_;
    double scale_;
};

/// Versioned binary model file: magic, key=value spec block, then the flat
/// parameter vector as little-endian 64-bit floats.
inline void save_model(const TrainedModel& tm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot write " + path);
    out.write("MTCM0001", 8);
    std::string txt;
    txt += "kind=" + to_string(tm.spec.kind) + "\n";
    txt += "hidden=";
    for (std::size_t i = 0; i < tm.spec.hidden.size(); ++i)
        txt += (i ? "," : "") + std::to_string(tm.spec.hidden[i]);
    txt += "\n";
    txt += "tcn_layers=" + std::to_string(tm.spec.tcn_layers) + "\n";
    txt += "tcn_filters=" + std::to_string(tm.spec.tcn_filters) + "\n";
    txt += "tcn_kernel=" + std::to_string(tm.spec.tcn_kernel) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "tcn_dropout=%.17g\n", tm.spec.tcn_dropout);
    txt += buf;
    txt += "window=" + std::to_string(tm.spec.window) + "\n";
    std::snprintf(buf, sizeof buf, "reg_scale=%.17g\n", tm.reg_scale);
    txt += buf;
    txt += "param_count=" + std::to_string(tm.params.size()) + "\n";
    const std::uint32_t len = static_cast<std::uint32_t>(txt.size());
    unsigned char len_le[4] = {static_cast<unsigned char>(len & 0xff),
                               static_cast<unsigned char>((len >> 8) & 0xff),
                               static_cast<unsigned char>((len >> 16) & 0xff),
                               static_cast<unsigned char>((len >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(len_le), 4);
    out.write(txt.data(), static_cast<std::streamsize>(txt.size()));
    for (double value : tm.params) {
        std::uint64_t bits;
        std::memcpy(&bits, &value, 8);
        unsigned char le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(le), 8);
    }
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot read " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, "MTCM0001", 8) != 0)
        throw std::runtime_error("load_model: bad magic in " + path);
    unsigned char len_le[4];
    in.read(reinterpret_cast<char*>(len_le), 4);
    const std::uint32_t len = static_cast<std::uint32_t>(len_le[0]) |
                              (static_cast<std::uint32_t>(len_le[1]) << 8) |
                              (static_cast<std::uint32_t>(len_le[2]) << 16) |
                              (static_cast<std::uint32_t>(len_le[3]) << 24);
    std::string txt(len, '\0');
    in.read(txt.data(), len);
    TrainedModel tm;
    std::size_t param_count = 0;
    std::stringstream ss(txt);
    std::string line;
    while (std::getline(ss, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "kind") tm.spec.kind = model_kind_from_string(val);
        else if (key == "hidden") {
            tm.spec.hidden.clear();
            std::stringstream hs(val);
            std::string tok;
            while (std::getline(hs, tok, ',')) tm.spec.hidden.push_back(std::stoi(tok));
        } else if (key == "tcn_layers") tm.spec.tcn_layers = std::stoi(val);
        else if (key == "tcn_filters") tm.spec.tcn_filters = std::stoi(val);
        else if (key == "tcn_kernel") tm.spec.tcn_kernel = std::stoi(val);
        else if (key == "tcn_dropout") tm.spec.tcn_dropout = std::stod(val);
        else if (key == "window") tm.spec.window = std::stoi(val);
        else if (key == "reg_scale") tm.reg_scale = std::stod(val);
        else if (key == "param_count") param_count = std::stoull(val);
    }
    tm.manifest = build_manifest(tm.spec);
    if (param_count != tm.manifest.total)
        throw std::runtime_error("load_model: parameter count does not match spec");
    tm.param_count = param_count;
    tm.params.resize(param_count);
    for (std::size_t i = 0; i < param_count; ++i) {
        unsigned char le[8];
        in.read(reinterpret_cast<char*>(le), 8);
        if (in.gcount() != 8) throw std::runtime_error("load_model: truncated parameter vector");
        std::uint64_t bits = 0;
        for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(le[j]) << (8 * j);
        double value;
        std::memcpy(&value, &bits, 8);
        tm.params[i] = value;
    }
    return tm;
}

inline void save_loss_curve(const TrainedModel& tm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_loss_curve: cannot write " + path);
    out << "epoch,train_loss,val_loss\n";
    out.precision(12);
    for (std::size_t e = 0; e < tm.loss_curve.size(); ++e)
        out << (e + 1) << ',' << tm.loss_curve[e].first << ',' << tm.loss_curve[e].second << "\n";
}

} // namespace mtc
