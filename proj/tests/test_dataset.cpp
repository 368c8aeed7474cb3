#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mtc/dataset.hpp"

namespace {

mtc::TrafficTrace manual_trace(int n_devices, std::int64_t n_slots) {
    mtc::TrafficTrace t;
    t.n_devices = n_devices;
    t.n_slots = n_slots;
    t.model = "manual";
    t.activity.assign(static_cast<std::size_t>(n_devices) * static_cast<std::size_t>(n_slots), 0);
    return t;
}

} // namespace

TEST_CASE("split boundaries use floor on the time axis") {
    auto t100 = manual_trace(1, 100);
    // give the device some activity so regression paths exist
    for (std::int64_t s = 2; s < 100; s += 10) t100.row(0)[s] = 1;
    const auto ds100 = mtc::make_dataset(t100, 4, {0.70, 0.15, 0.15});
    REQUIRE(ds100.train_end == 70);
    REQUIRE(ds100.val_end == 85);

    auto t101 = manual_trace(1, 101);
    for (std::int64_t s = 2; s < 101; s += 10) t101.row(0)[s] = 1;
    const auto ds101 = mtc::make_dataset(t101, 4, {0.70, 0.15, 0.15});
    REQUIRE(ds101.train_end == 70); // floor(70.7)
    REQUIRE(ds101.val_end == 85);   // floor(85.85)
}

TEST_CASE("an all-idle device yields zero regression samples and zero targets") {
    auto trace = manual_trace(1, 120);
    const auto ds = mtc::make_dataset(trace, 6, {0.70, 0.15, 0.15});
    REQUIRE(ds.reg_train.size() == 0);
    REQUIRE(ds.reg_val.size() == 0);
    REQUIRE(ds.reg_test.size() == 0);
    REQUIRE(ds.regression_excluded.size() == 1);
    REQUIRE_FALSE(ds.warnings.empty());
    for (auto y : ds.cls_train.y) REQUIRE(y == 0);
    REQUIRE(ds.cls_train.size() == 70 - 6);
}

TEST_CASE("windows never contain their target slot or anything after it") {
    auto trace = manual_trace(3, 200);
    // period-9 activity with distinct phases
    for (int d = 0; d < 3; ++d)
        for (std::int64_t s = d; s < 200; s += 9) trace.row(d)[s] = 1;
    const int W = 5;
    const auto ds = mtc::make_dataset(trace, W, {0.70, 0.15, 0.15});

    auto audit = [&](const mtc::SampleSet& set, std::int64_t seg_start, std::int64_t seg_end) {
        for (std::size_t i = 0; i < set.size(); ++i) {
            const std::int64_t t = set.target_slot[i];
            REQUIRE(t >= seg_start + W);
            REQUIRE(t < seg_end);
            const double* w = set.window_at(i, W);
            for (int j = 0; j < W; ++j) {
                // window slot t-W+j strictly precedes the target
                const std::int64_t slot = t - W + j;
                REQUIRE(slot < t);
                REQUIRE(w[j] == (trace.active(set.device[i], slot) ? 1.0 : 0.0));
            }
            REQUIRE(set.y[i] == (trace.active(set.device[i], t) ? 1 : 0));
        }
    };
    audit(ds.cls_train, 0, ds.train_end);
    audit(ds.cls_val, ds.train_end, ds.val_end);
    audit(ds.cls_test, ds.val_end, 200);
    REQUIRE(ds.cls_train.size() > 0);
    REQUIRE(ds.cls_val.size() > 0);
    REQUIRE(ds.cls_test.size() > 0);
}

TEST_CASE("regression gaps are start-to-start distances within one segment") {
    auto trace = manual_trace(1, 300);
    for (std::int64_t s = 10; s < 300; s += 20) {
        trace.row(0)[s] = 1;
        trace.row(0)[s + 1] = 1; // two-slot bursts; gaps count starts only
    }
    const int W = 8;
    const auto ds = mtc::make_dataset(trace, W, {0.70, 0.15, 0.15});
    REQUIRE(ds.reg_train.size() > 0);
    for (std::size_t i = 0; i < ds.reg_train.size(); ++i) {
        REQUIRE(ds.reg_train.gap[i] == 20.0);
        const std::int64_t anchor = ds.reg_train.anchor_slot[i];
        REQUIRE(anchor - W + 1 >= 0);
        REQUIRE(anchor + 20 < ds.train_end);
    }
    // device gap series match
    const auto& series = ds.device_series[0];
    for (double g : series.train_gaps) REQUIRE(g == 20.0);
    REQUIRE(ds.reg_scale == Catch::Approx(20.0));
}

TEST_CASE("short traces are rejected") {
    auto trace = manual_trace(1, 30);
    REQUIRE_THROWS_AS(mtc::make_dataset(trace, 8, {0.70, 0.15, 0.15}), mtc::ConfigError);
}

TEST_CASE("bad split fractions are rejected") {
    auto trace = manual_trace(1, 200);
    REQUIRE_THROWS_AS(mtc::make_dataset(trace, 4, {0.8, 0.1, 0.2}), mtc::ConfigError);
    REQUIRE_THROWS_AS(mtc::make_dataset(trace, 4, {1.0, 0.0, 0.0}), mtc::ConfigError);
    REQUIRE_THROWS_AS(mtc::make_dataset(trace, 0, {0.7, 0.15, 0.15}), mtc::ConfigError);
}

TEST_CASE("dataset metadata sidecar is written") {
    auto trace = manual_trace(2, 150);
    for (std::int64_t s = 3; s < 150; s += 11) trace.row(0)[s] = trace.row(1)[s] = 1;
    const auto ds = mtc::make_dataset(trace, 4, {0.70, 0.15, 0.15});
    const auto path = std::filesystem::temp_directory_path() / "mtc_meta_test.txt";
    mtc::save_dataset_meta(ds, path.string());
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(text.find("train_end=105") != std::string::npos);
    REQUIRE(text.find("val_end=127") != std::string::npos);
    std::filesystem::remove(path);
}
