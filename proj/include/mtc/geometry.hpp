#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtc/errors.hpp"
#include "mtc/rng.hpp"

namespace mtc {

inline constexpr double kPi = 3.14159265358979323846;

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2D& a, const Point2D& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Spatial deployment parameters: device/epicenter densities (points per m^2)
/// on a disk of the given radius centred at the coordinator.
struct DeploymentConfig {
    double lambda_m = 0.1;     // devices per m^2
    double lambda_e = 0.001;   // event epicenters per m^2
    double region_radius = 50; // metres

    void validate() const {
        if (!(lambda_m >= 0.0)) throw ConfigError("deployment: lambda_m must be >= 0");
        if (!(lambda_e >= 0.0)) throw ConfigError("deployment: lambda_e must be >= 0");
        if (!(region_radius > 0.0)) throw ConfigError("deployment: region_radius must be > 0");
    }
};

struct Deployment {
    DeploymentConfig config;
    std::uint64_t seed = 0;
    std::vector<Point2D> mtd_positions;
    std::vector<Point2D> epicenter_positions;
    Point2D coordinator{0.0, 0.0};
};

/// Homogeneous planar PPP on a disk: count ~ Poisson(density * pi * r^2),
/// positions independently uniform on the disk.
inline std::vector<Point2D> sample_ppp(double density, double region_radius, Rng& rng) {
    if (!(density >= 0.0)) throw ConfigError("sample_ppp: density must be >= 0");
    if (!(region_radius > 0.0)) throw ConfigError("sample_ppp: region_radius must be > 0");
    const double mean = density * kPi * region_radius * region_radius;
    const std::int64_t n = rng.poisson(mean);
    std::vector<Point2D> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = region_radius * std::sqrt(rng.uniform());
        const double theta = 2.0 * kPi * rng.uniform();
        pts.push_back({r * std::cos(theta), r * std::sin(theta)});
    }
    return pts;
}

/// Event influence on a device at distance d: p(d) = exp(-d).
/// Non-increasing with p(0) = 1.
inline double influence(double d) {
    if (!(d >= 0.0)) throw std::domain_error("influence: distance must be >= 0");
    return std::exp(-d);
}

/// Per-slot probability that an idle device turns active when events arrive
/// with temporal density lambda_t:  P_A = 1 - exp(-2*pi*lambda_t * I), with
/// I = integral of exp(-d) over [0, inf) = 1.
inline double activation_probability(double lambda_t) {
    if (!(lambda_t >= 0.0)) throw std::domain_error("activation_probability: lambda_t must be >= 0");
    return 1.0 - std::exp(-2.0 * kPi * lambda_t);
}

inline Deployment make_deployment(const DeploymentConfig& config, std::uint64_t seed) {
    config.validate();
    Deployment dep;
    dep.config = config;
    dep.seed = seed;
    Rng mtd_rng = derive_stream(seed, "deploy-mtd");
    Rng epi_rng = derive_stream(seed, "deploy-epicenter");
    dep.mtd_positions = sample_ppp(config.lambda_m, config.region_radius, mtd_rng);
    dep.epicenter_positions = sample_ppp(config.lambda_e, config.region_radius, epi_rng);
    return dep;
}

/// Plain-text tabular form: a header row with the densities/radius/seed, then
/// one `kind,id,x,y` row per point.
inline void save_deployment(const Deployment& dep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_deployment: cannot write " + path);
    out.precision(17);
    out << "# lambda_m=" << dep.config.lambda_m
        << ",lambda_e=" << dep.config.lambda_e
        << ",region_radius=" << dep.config.region_radius
        << ",seed=" << dep.seed << "\n";
    out << "kind,id,x,y\n";
    for (std::size_t i = 0; i < dep.mtd_positions.size(); ++i) {
        out << "mtd," << i << ',' << dep.mtd_positions[i].x << ','
            << dep.mtd_positions[i].y << "\n";
    }
    for (std::size_t i = 0; i < dep.epicenter_positions.size(); ++i) {
        out << "epicenter," << i << ',' << dep.epicenter_positions[i].x << ','
            << dep.epicenter_positions[i].y << "\n";
    }
}

inline Deployment load_deployment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_deployment: cannot read " + path);
    Deployment dep;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("load_deployment: missing header row");
    {
        std::stringstream ss(line.substr(2));
        std::string kv;
        while (std::getline(ss, kv, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = kv.substr(0, eq);
            const std::string val = kv.substr(eq + 1);
            if (key == "lambda_m") dep.config.lambda_m = std::stod(val);
            else if (key == "lambda_e") dep.config.lambda_e = std::stod(val);
            else if (key == "region_radius") dep.config.region_radius = std::stod(val);
            else if (key == "seed") dep.seed = std::stoull(val);
        }
    }
    std::getline(in, line); // column names
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string kind, id, xs, ys;
        std::getline(ss, kind, ',');
        std::getline(ss, id, ',');
        std::getline(ss, xs, ',');
        std::getline(ss, ys, ',');
        Point2D p{std::stod(xs), std::stod(ys)};
        if (kind == "mtd") dep.mtd_positions.push_back(p);
        else if (kind == "epicenter") dep.epicenter_positions.push_back(p);
        else throw std::runtime_error("load_deployment: unknown point kind " + kind);
    }
    return dep;
}

} // namespace mtc
