#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtc/errors.hpp"

namespace mtc {

struct RecallResult {
    double value = 0.0;
    bool clamped = false; // bracket went negative and was clamped to zero
};

/// R = (1 - (1/M) * sum (1 - ghat_i/g_i)^2)^(1/2), clamped at zero when the
/// bracket is negative.
inline RecallResult recall_metric(const std::vector<double>& estimates,
                                  const std::vector<double>& truths) {
    if (estimates.size() != truths.size())
        throw std::invalid_argument("recall_metric: length mismatch");
    if (truths.empty()) throw std::invalid_argument("recall_metric: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (!(truths[i] > 0.0)) throw std::domain_error("recall_metric: truths must be > 0");
        const double r = 1.0 - estimates[i] / truths[i];
        acc += r * r;
    }
    const double bracket = 1.0 - acc / static_cast<double>(truths.size());
    if (bracket < 0.0) return {0.0, true};
    return {std::sqrt(bracket), false};
}

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(const std::vector<std::uint8_t>& pred,
                                 const std::vector<std::uint8_t>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("confusion: length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            pred[i] ? ++c.tp : ++c.fn;
        } else {
            pred[i] ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

/// tpr/tnr are empty when their class is absent, never silently zero.
struct Rates {
    std::optional<double> tpr;
    std::optional<double> tnr;
    double accuracy = 0.0;
};

inline Rates rates(const ConfusionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("rates: empty counts");
    Rates r;
    if (c.tp + c.fn > 0) r.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0) r.tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return r;
}

struct RocCurve {
    std::vector<double> fpr;
    std::vector<double> tpr;
    double auc = 0.0;
};

/// Threshold sweep over every distinct score (score >= threshold => positive),
/// anchored at (0,0) and (1,1); auc is the trapezoidal integral. Ties are
/// grouped, which makes the auc exactly the midrank Mann-Whitney statistic.
inline RocCurve roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc: length mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (std::uint8_t l : labels) l ? ++n_pos : ++n_neg;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc: need at least one positive and one negative label");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    std::int64_t tp = 0, fp = 0;
    double auc = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        // consume the whole tie group at this score
        const double s = scores[idx[i]];
        std::int64_t d_tp = 0, d_fp = 0;
        while (i < idx.size() && scores[idx[i]] == s) {
            labels[idx[i]] ? ++d_tp : ++d_fp;
            ++i;
        }
        const double x0 = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double y0 = static_cast<double>(tp) / static_cast<double>(n_pos);
        tp += d_tp;
        fp += d_fp;
        const double x1 = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double y1 = static_cast<double>(tp) / static_cast<double>(n_pos);
        auc += (x1 - x0) * (y0 + y1) * 0.5;
        if (x1 != curve.fpr.back() || y1 != curve.tpr.back()) {
            curve.fpr.push_back(x1);
            curve.tpr.push_back(y1);
        }
    }
    if (curve.fpr.back() != 1.0 || curve.tpr.back() != 1.0) {
        curve.fpr.push_back(1.0);
        curve.tpr.push_back(1.0);
    }
    curve.auc = auc;
    return curve;
}

inline void save_roc(const RocCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_roc: cannot write " + path);
    out.precision(12);
    out << "fpr,tpr\n";
    for (std::size_t i = 0; i < curve.fpr.size(); ++i)
        out << curve.fpr[i] << ',' << curve.tpr[i] << "\n";
}

/// Raw cost triple of one trained model.
struct CostTriple {
    double inference_seconds = 0.0; // per sample
    double training_seconds = 0.0;
    double size_bytes = 0.0;
};

/// Normalises each cost kind by its sum over the compared models, so every
/// kind sums to one across the set.
inline std::vector<CostTriple> cost_report(const std::vector<CostTriple>& raw) {
    if (raw.size() < 2) throw std::invalid_argument("cost_report: need at least 2 models");
    CostTriple sum;
    for (const auto& c : raw) {
        if (!(c.inference_seconds > 0.0) || !(c.training_seconds > 0.0) || !(c.size_bytes > 0.0))
            throw std::invalid_argument("cost_report: raw costs must be positive");
        sum.inference_seconds += c.inference_seconds;
        sum.training_seconds += c.training_seconds;
        sum.size_bytes += c.size_bytes;
    }
    std::vector<CostTriple> out;
    out.reserve(raw.size());
    for (const auto& c : raw) {
        out.push_back({c.inference_seconds / sum.inference_seconds,
                       c.training_seconds / sum.training_seconds,
                       c.size_bytes / sum.size_bytes});
    }
    return out;
}

/// Quality metrics and raw costs of one model on one run's test split.
struct EvalReport {
    std::string model;
    double r_metric = 0.0;
    bool r_clamped = false;
    bool r_defined = false;
    std::optional<double> tpr;
    std::optional<double> tnr;
    double accuracy = 0.0;
    double auc = 0.0;
    bool auc_defined = false;
    CostTriple costs;
};

inline void save_eval_report_kv(const EvalReport& r, std::ofstream& out) {
    out.precision(12);
    out << "model=" << r.model << "\n";
    out << "r_metric=" << r.r_metric << "\n";
    out << "r_clamped=" << (r.r_clamped ? 1 : 0) << "\n";
    out << "tpr=" << (r.tpr ? std::to_string(*r.tpr) : "undefined") << "\n";
    out << "tnr=" << (r.tnr ? std::to_string(*r.tnr) : "undefined") << "\n";
    out << "accuracy=" << r.accuracy << "\n";
    out << "auc=" << r.auc << "\n";
    out << "inference_seconds=" << r.costs.inference_seconds << "\n";
    out << "training_seconds=" << r.costs.training_seconds << "\n";
    out << "size_bytes=" << r.costs.size_bytes << "\n";
}

} // namespace mtc
