#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "mtc/geometry.hpp"
#include "support/stats.hpp"

using mtc::kPi;

TEST_CASE("influence hits the anchor values") {
    REQUIRE(mtc::influence(0.0) == 1.0);
    REQUIRE(mtc::influence(1.0) == Catch::Approx(0.36787944117144233).epsilon(1e-12));
    REQUIRE(mtc::influence(50.0) < 1e-21);
}

TEST_CASE("influence is non-increasing and rejects negative distance") {
    double prev = mtc::influence(0.0);
    for (double d = 0.1; d <= 20.0; d += 0.1) {
        const double v = mtc::influence(d);
        REQUIRE(v <= prev);
        prev = v;
    }
    REQUIRE_THROWS_AS(mtc::influence(-0.001), std::domain_error);
}

TEST_CASE("activation probability anchor values") {
    REQUIRE(mtc::activation_probability(0.0) == 0.0);
    REQUIRE(mtc::activation_probability(std::log(2.0) / (2.0 * kPi)) ==
            Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE_THROWS_AS(mtc::activation_probability(-1e-9), std::domain_error);
}

TEST_CASE("activation probability matches the quadrature oracle at lambda=1") {
    // independent route: integrate the influence numerically, then apply the
    // activation formula
    const double h = 1e-4;
    double integral = 0.0;
    for (double d = 0.0; d < 60.0; d += h) {
        integral += h * 0.5 * (std::exp(-d) + std::exp(-(d + h)));
    }
    REQUIRE(integral == Catch::Approx(1.0).epsilon(1e-6));
    const double expected = 1.0 - std::exp(-2.0 * kPi * 1.0 * integral);
    REQUIRE(mtc::activation_probability(1.0) == Catch::Approx(expected).epsilon(1e-6));
    REQUIRE(mtc::activation_probability(1.0) == Catch::Approx(0.99813352).epsilon(1e-7));
}

TEST_CASE("activation probability is strictly increasing and bounded") {
    double prev = -1.0;
    for (double lt = 0.0; lt <= 2.0; lt += 0.01) {
        const double p = mtc::activation_probability(lt);
        REQUIRE(p > prev);
        REQUIRE(p >= 0.0);
        REQUIRE(p < 1.0);
        prev = p;
    }
}

TEST_CASE("zero-intensity ppp is empty") {
    mtc::Rng rng(3);
    REQUIRE(mtc::sample_ppp(0.0, 100.0, rng).empty());
}

TEST_CASE("ppp rejects bad configuration") {
    mtc::Rng rng(3);
    REQUIRE_THROWS_AS(mtc::sample_ppp(-0.1, 100.0, rng), mtc::ConfigError);
    REQUIRE_THROWS_AS(mtc::sample_ppp(0.1, 0.0, rng), mtc::ConfigError);
}

TEST_CASE("same seed gives bitwise-identical point lists") {
    mtc::Rng a(77), b(77);
    const auto pa = mtc::sample_ppp(0.05, 30.0, a);
    const auto pb = mtc::sample_ppp(0.05, 30.0, b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i].x == pb[i].x);
        REQUIRE(pa[i].y == pb[i].y);
    }
}

TEST_CASE("ppp count distribution matches Poisson(10)") {
    // area 100 m^2 at density 0.1 => mean count 10
    const double radius = std::sqrt(100.0 / kPi);
    mtc::Rng rng(123);
    const int draws = 10000;
    double sum = 0.0;
    std::vector<std::int64_t> hist(60, 0);
    for (int i = 0; i < draws; ++i) {
        const auto pts = mtc::sample_ppp(0.1, radius, rng);
        sum += static_cast<double>(pts.size());
        if (pts.size() < hist.size()) ++hist[pts.size()];
    }
    REQUIRE(std::fabs(sum / draws - 10.0) < 0.3);
    const double p = testsupport::chi_square_gof_pvalue(
        hist, [](int k) { return testsupport::poisson_pmf(k, 10.0); }, draws);
    REQUIRE(p > 0.01);
}

TEST_CASE("ppp count mean and variance agree within 3 sigma") {
    const double radius = std::sqrt(100.0 / kPi);
    mtc::Rng rng(321);
    const int draws = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto n = static_cast<double>(mtc::sample_ppp(0.1, radius, rng).size());
        sum += n;
        sq += n * n;
    }
    const double mean = 10.0;
    const double m = sum / draws;
    const double var = sq / draws - m * m;
    const double se_mean = std::sqrt(mean / draws);
    const double mu4 = mean + 3.0 * mean * mean;
    const double se_var = std::sqrt((mu4 - mean * mean) / draws);
    REQUIRE(std::fabs(m - mean) < 3.0 * se_mean);
    REQUIRE(std::fabs(var - mean) < 3.0 * se_var);
}

TEST_CASE("points land inside the disk, uniformly") {
    mtc::Rng rng(9);
    const double radius = 20.0;
    const auto pts = mtc::sample_ppp(1.0, radius, rng);
    REQUIRE(pts.size() > 800);
    int inner = 0;
    for (const auto& p : pts) {
        const double r = std::hypot(p.x, p.y);
        REQUIRE(r <= radius);
        if (r <= radius / std::sqrt(2.0)) ++inner;
    }
    // half the area lies within radius/sqrt(2)
    const double frac = static_cast<double>(inner) / static_cast<double>(pts.size());
    REQUIRE(std::fabs(frac - 0.5) < 0.05);
}

TEST_CASE("explicit spatial simulation reproduces the closed-form activation") {
    // Per-slot events form a planar PPP of intensity lambda_t; a device at the
    // origin is triggered by an event at distance d with probability exp(-d).
    const double lambda_t = 0.05;
    const double big_radius = 30.0; // exp(-30) leaves no measurable mass outside
    mtc::Rng rng(2024);
    const int trials = 100000;
    int activations = 0;
    for (int i = 0; i < trials; ++i) {
        const auto events = mtc::sample_ppp(lambda_t, big_radius, rng);
        bool triggered = false;
        for (const auto& e : events) {
            const double d = std::hypot(e.x, e.y);
            if (rng.uniform() < std::exp(-d)) {
                triggered = true;
                break;
            }
        }
        if (triggered) ++activations;
    }
    const double freq = static_cast<double>(activations) / trials;
    REQUIRE(std::fabs(freq - mtc::activation_probability(lambda_t)) < 0.01);
}

TEST_CASE("deployment invariants and serialization round trip") {
    mtc::DeploymentConfig cfg;
    cfg.lambda_m = 0.05;
    cfg.lambda_e = 0.002;
    cfg.region_radius = 25.0;
    const auto dep = mtc::make_deployment(cfg, 444);
    REQUIRE(dep.coordinator.x == 0.0);
    REQUIRE(dep.coordinator.y == 0.0);
    for (const auto& p : dep.mtd_positions) REQUIRE(std::hypot(p.x, p.y) <= cfg.region_radius);
    for (const auto& p : dep.epicenter_positions) REQUIRE(std::hypot(p.x, p.y) <= cfg.region_radius);

    const auto path = std::filesystem::temp_directory_path() / "mtc_dep_test.csv";
    mtc::save_deployment(dep, path.string());
    const auto loaded = mtc::load_deployment(path.string());
    REQUIRE(loaded.mtd_positions.size() == dep.mtd_positions.size());
    REQUIRE(loaded.epicenter_positions.size() == dep.epicenter_positions.size());
    REQUIRE(loaded.seed == dep.seed);
    for (std::size_t i = 0; i < dep.mtd_positions.size(); ++i) {
        REQUIRE(loaded.mtd_positions[i].x == dep.mtd_positions[i].x);
        REQUIRE(loaded.mtd_positions[i].y == dep.mtd_positions[i].y);
    }
    std::filesystem::remove(path);
}
