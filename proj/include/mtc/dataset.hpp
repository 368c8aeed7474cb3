#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mtc/errors.hpp"
#include "mtc/traffic.hpp"

namespace mtc {

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;

    void validate() const {
        if (!(train > 0.0 && val > 0.0 && test > 0.0))
            throw ConfigError("split fractions must all be positive");
        if (std::fabs(train + val + test - 1.0) > 1e-9)
            throw ConfigError("split fractions must sum to 1");
    }
};

/// Next-slot classification samples: window of W activity bits, target bit.
struct SampleSet {
    std::vector<double> x;            // size * window, row-major
    std::vector<std::uint8_t> y;      // next-slot activity
    std::vector<int> device;
    std::vector<std::int64_t> target_slot;

    std::size_t size() const { return y.size(); }
    const double* window_at(std::size_t i, int window) const {
        return x.data() + i * static_cast<std::size_t>(window);
    }
};

/// Inter-arrival regression samples, anchored at an activation start: window
/// of W activity bits ending at the arrival, target = gap to the next start.
struct RegSet {
    std::vector<double> x;            // size * window
    std::vector<double> gap;          // slots, > 0
    std::vector<int> device;
    std::vector<std::int64_t> anchor_slot;

    std::size_t size() const { return gap.size(); }
    const double* window_at(std::size_t i, int window) const {
        return x.data() + i * static_cast<std::size_t>(window);
    }
};

/// Per-device activation starts and inter-arrival gaps, split chronologically.
/// The gap series feeds the ARIMA baseline directly.
struct DeviceSeries {
    std::vector<std::int64_t> train_starts, val_starts, test_starts;
    std::vector<double> train_gaps, val_gaps, test_gaps;
};

struct SupervisedDataset {
    int window = 8;
    int n_devices = 0;
    std::int64_t n_slots = 0;
    std::int64_t train_end = 0; // b1 = floor(f_train * n_slots)
    std::int64_t val_end = 0;   // b2 = floor((f_train + f_val) * n_slots)
    double reg_scale = 1.0;     // mean training gap, used to normalise targets

    SampleSet cls_train, cls_val, cls_test;
    RegSet reg_train, reg_val, reg_test;
    std::vector<DeviceSeries> device_series;
    std::vector<int> regression_excluded; // devices with < 2 activations
    std::vector<std::string> warnings;

    std::size_t total_samples() const {
        return cls_train.size() + cls_val.size() + cls_test.size() +
               reg_train.size() + reg_val.size() + reg_test.size();
    }
};

namespace detail {

inline void push_window(std::vector<double>& dst, const std::uint8_t* row,
                        std::int64_t first_slot, int window) {
    for (int i = 0; i < window; ++i) {
        dst.push_back(static_cast<double>(row[first_slot + i]));
    }
}

} // namespace detail

/// Builds the supervised views of a trace. Split boundaries are computed on
/// the time axis before windowing, so no sample's window straddles a segment
/// boundary and no window ever contains a slot at or past its target.
inline SupervisedDataset make_dataset(const TrafficTrace& trace, int window_w,
                                      const SplitFractions& split = {}) {
    if (window_w < 1) throw ConfigError("make_dataset: window must be >= 1");
    split.validate();
    const std::int64_t n = trace.n_slots;
    SupervisedDataset ds;
    ds.window = window_w;
    ds.n_devices = trace.n_devices;
    ds.n_slots = n;
    ds.train_end = static_cast<std::int64_t>(std::floor(split.train * static_cast<double>(n)));
    ds.val_end = static_cast<std::int64_t>(
        std::floor((split.train + split.val) * static_cast<double>(n)));

    const std::int64_t seg_start[3] = {0, ds.train_end, ds.val_end};
    const std::int64_t seg_end[3] = {ds.train_end, ds.val_end, n};
    for (int s = 0; s < 3; ++s) {
        if (seg_end[s] - seg_start[s] <= window_w)
            throw ConfigError("make_dataset: trace too short for one window per split");
    }

    ds.device_series.resize(static_cast<std::size_t>(trace.n_devices));
    for (int d = 0; d < trace.n_devices; ++d) {
        const std::uint8_t* row = trace.row(d);
        SampleSet* cls[3] = {&ds.cls_train, &ds.cls_val, &ds.cls_test};
        for (int s = 0; s < 3; ++s) {
            for (std::int64_t t = seg_start[s] + window_w; t < seg_end[s]; ++t) {
                detail::push_window(cls[s]->x, row, t - window_w, window_w);
                cls[s]->y.push_back(row[t]);
                cls[s]->device.push_back(d);
                cls[s]->target_slot.push_back(t);
            }
        }

        const auto starts = trace.activation_starts(d);
        if (starts.size() < 2) {
            ds.regression_excluded.push_back(d);
            continue;
        }
        DeviceSeries& series = ds.device_series[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const std::int64_t t = starts[i];
            if (t < ds.train_end) series.train_starts.push_back(t);
            else if (t < ds.val_end) series.val_starts.push_back(t);
            else series.test_starts.push_back(t);
        }
        auto gaps_of = [](const std::vector<std::int64_t>& v) {
            std::vector<double> g;
            for (std::size_t i = 1; i < v.size(); ++i)
                g.push_back(static_cast<double>(v[i] - v[i - 1]));
            return g;
        };
        series.train_gaps = gaps_of(series.train_starts);
        series.val_gaps = gaps_of(series.val_starts);
        series.test_gaps = gaps_of(series.test_starts);

        RegSet* reg[3] = {&ds.reg_train, &ds.reg_val, &ds.reg_test};
        for (std::size_t i = 0; i + 1 < starts.size(); ++i) {
            const std::int64_t anchor = starts[i];
            const std::int64_t next = starts[i + 1];
            for (int s = 0; s < 3; ++s) {
                // Window [anchor-W+1, anchor] and the next start must both
                // sit inside the segment.
                if (anchor - window_w + 1 >= seg_start[s] && next < seg_end[s] &&
                    anchor < seg_end[s]) {
                    detail::push_window(reg[s]->x, row, anchor - window_w + 1, window_w);
                    reg[s]->gap.push_back(static_cast<double>(next - anchor));
                    reg[s]->device.push_back(d);
                    reg[s]->anchor_slot.push_back(anchor);
                    break;
                }
            }
        }
    }

    if (!ds.regression_excluded.empty()) {
        std::ostringstream msg;
        msg << ds.regression_excluded.size()
            << " device(s) with fewer than 2 activations excluded from regression targets";
        ds.warnings.push_back(msg.str());
    }

    if (!ds.reg_train.gap.empty()) {
        const double sum = std::accumulate(ds.reg_train.gap.begin(), ds.reg_train.gap.end(), 0.0);
        ds.reg_scale = sum / static_cast<double>(ds.reg_train.gap.size());
        if (!(ds.reg_scale > 0.0)) ds.reg_scale = 1.0;
    }
    return ds;
}

/// Sidecar metadata, key=value lines.
inline void save_dataset_meta(const SupervisedDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset_meta: cannot write " + path);
    out.precision(17);
    out << "n_devices=" << ds.n_devices << "\n"
        << "n_slots=" << ds.n_slots << "\n"
        << "window=" << ds.window << "\n"
        << "train_end=" << ds.train_end << "\n"
        << "val_end=" << ds.val_end << "\n"
        << "reg_scale=" << ds.reg_scale << "\n"
        << "cls_train=" << ds.cls_train.size() << "\n"
        << "cls_val=" << ds.cls_val.size() << "\n"
        << "cls_test=" << ds.cls_test.size() << "\n"
        << "reg_train=" << ds.reg_train.size() << "\n"
        << "reg_val=" << ds.reg_val.size() << "\n"
        << "reg_test=" << ds.reg_test.size() << "\n"
        << "regression_excluded=" << ds.regression_excluded.size() << "\n";
}

} // namespace mtc
