#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtc/errors.hpp"
#include "mtc/geometry.hpp"
#include "mtc/rng.hpp"

namespace mtc {

/// Event-driven (Poisson) traffic: idle devices turn active with the per-slot
/// activation probability derived from lambda_t, then stay active for a
/// geometrically distributed burst.
struct PoissonTrafficConfig {
    double lambda_t = 0.05; // events per TTI
    double q = 0.5;         // burstiness, [0, 1)
    int n_devices = 10;
    std::int64_t n_slots = 1000;
    int rate_r = 1; // packets per TTI while active

    void validate() const {
        if (!(lambda_t >= 0.0)) throw ConfigError("poisson traffic: lambda_t must be >= 0");
        if (!(q >= 0.0 && q < 1.0)) throw ConfigError("poisson traffic: q must be in [0, 1)");
        if (n_devices < 1) throw ConfigError("poisson traffic: n_devices must be >= 1");
        if (n_slots < 1) throw ConfigError("poisson traffic: n_slots must be >= 1");
        if (rate_r < 1) throw ConfigError("poisson traffic: rate_r must be >= 1");
    }
};

/// Quasi-periodic traffic: per device a base transfer interval T_j (drawn in
/// ms, 1 ms = 1 slot), a uniform start phase, Bernoulli-gated transmission
/// opportunities and per-opportunity interval jitter of +-jitter_fraction.
struct QuasiPeriodicConfig {
    double t_min_ms = 50.0;
    double t_max_ms = 1000.0;
    double jitter_fraction = 0.05; // beta in [0, 1)
    double p_active_min = 0.5;     // P_A_j sampled uniformly from this range
    double p_active_max = 1.0;
    double q = 0.0; // burst parameter for transmission duration
    int n_devices = 10;
    std::int64_t n_slots = 1000;
    int rate_r = 1;
    /// When set, pins every device's start phase to this slot (otherwise the
    /// phase is uniform on [0, T_j)).
    std::optional<std::int64_t> fixed_start_offset;

    void validate() const {
        if (!(t_min_ms > 0.0) || !(t_max_ms >= t_min_ms))
            throw ConfigError("quasiperiodic traffic: need 0 < t_min <= t_max");
        if (!(jitter_fraction >= 0.0 && jitter_fraction < 1.0))
            throw ConfigError("quasiperiodic traffic: jitter_fraction must be in [0, 1)");
        if (!(p_active_min >= 0.0 && p_active_max <= 1.0 && p_active_min <= p_active_max))
            throw ConfigError("quasiperiodic traffic: activation probability range must be within [0, 1]");
        if (!(q >= 0.0 && q < 1.0)) throw ConfigError("quasiperiodic traffic: q must be in [0, 1)");
        if (n_devices < 1) throw ConfigError("quasiperiodic traffic: n_devices must be >= 1");
        if (n_slots < 1) throw ConfigError("quasiperiodic traffic: n_slots must be >= 1");
        if (rate_r < 1) throw ConfigError("quasiperiodic traffic: rate_r must be >= 1");
    }
};

/// Ground-truth device x slot activity record at 1 ms TTI. Packet counts are
/// activity * rate_r.
struct TrafficTrace {
    int n_devices = 0;
    std::int64_t n_slots = 0;
    int tti_ms = 1;
    std::string model; // "poisson" | "quasiperiodic"
    std::uint64_t seed = 0;
    int rate_r = 1;
    std::vector<std::uint8_t> activity; // device-major, n_devices * n_slots
    std::vector<std::string> warnings;

    bool active(int device, std::int64_t slot) const {
        return activity[static_cast<std::size_t>(device) * static_cast<std::size_t>(n_slots) +
                        static_cast<std::size_t>(slot)] != 0;
    }

    std::uint8_t* row(int device) {
        return activity.data() + static_cast<std::size_t>(device) * static_cast<std::size_t>(n_slots);
    }
    const std::uint8_t* row(int device) const {
        return activity.data() + static_cast<std::size_t>(device) * static_cast<std::size_t>(n_slots);
    }

    /// Slots where a device turns active (start of an activity run).
    std::vector<std::int64_t> activation_starts(int device) const {
        std::vector<std::int64_t> starts;
        const std::uint8_t* r = row(device);
        for (std::int64_t t = 0; t < n_slots; ++t) {
            if (r[t] && (t == 0 || !r[t - 1])) starts.push_back(t);
        }
        return starts;
    }
};

/// Number of additional active slots beyond the triggering one:
/// P(k) = (1-q) q^k, k = 0, 1, ...
inline std::int64_t sample_burst_duration(double q, Rng& rng) {
    if (!(q >= 0.0 && q < 1.0)) throw ConfigError("sample_burst_duration: q must be in [0, 1)");
    if (q == 0.0) return 0;
    const double u = 1.0 - rng.uniform(); // (0, 1]
    return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(q)));
}

namespace detail {

inline void paint_burst(std::uint8_t* row, std::int64_t n_slots, std::int64_t start,
                        std::int64_t duration) {
    const std::int64_t end = std::min(n_slots, start + duration);
    for (std::int64_t t = std::max<std::int64_t>(start, 0); t < end; ++t) row[t] = 1;
}

} // namespace detail

/// Two-state (idle/active) chain per device: idle -> active with probability
/// activation_probability(lambda_t), active runs last 1+k slots.
inline TrafficTrace gen_poisson_trace(const PoissonTrafficConfig& config, std::uint64_t seed) {
    config.validate();
    TrafficTrace trace;
    trace.n_devices = config.n_devices;
    trace.n_slots = config.n_slots;
    trace.model = "poisson";
    trace.seed = seed;
    trace.rate_r = config.rate_r;
    trace.activity.assign(static_cast<std::size_t>(config.n_devices) *
                              static_cast<std::size_t>(config.n_slots),
                          0);
    const double p_a = activation_probability(config.lambda_t);
    for (int d = 0; d < config.n_devices; ++d) {
        Rng rng = derive_stream(seed, "poisson-device", static_cast<std::uint64_t>(d));
        std::uint8_t* r = trace.row(d);
        std::int64_t remaining = 0; // additional active slots still owed
        for (std::int64_t t = 0; t < config.n_slots; ++t) {
            if (remaining > 0) {
                r[t] = 1;
                --remaining;
            } else if (rng.bernoulli(p_a)) {
                r[t] = 1;
                remaining = sample_burst_duration(config.q, rng);
            }
        }
    }
    return trace;
}

/// Quasi-periodic generator. Opportunity m starts at the accumulated position
/// kappa_j + sum_{i<=m-1} T_j*(1+u_i) with u_i uniform on [-beta, beta]; each
/// opportunity fires with probability P_A_j and lasts 1+k slots.
inline TrafficTrace gen_quasiperiodic_trace(const QuasiPeriodicConfig& config, std::uint64_t seed) {
    config.validate();
    TrafficTrace trace;
    trace.n_devices = config.n_devices;
    trace.n_slots = config.n_slots;
    trace.model = "quasiperiodic";
    trace.seed = seed;
    trace.rate_r = config.rate_r;
    trace.activity.assign(static_cast<std::size_t>(config.n_devices) *
                              static_cast<std::size_t>(config.n_slots),
                          0);
    const double mean_burst = 1.0 / (1.0 - config.q);
    int overlap_risk_devices = 0;
    for (int d = 0; d < config.n_devices; ++d) {
        Rng rng = derive_stream(seed, "qp-device", static_cast<std::uint64_t>(d));
        // Base period in slots (TTI = 1 ms), at least one slot.
        const double t_ms = rng.uniform(config.t_min_ms, config.t_max_ms);
        const std::int64_t period = std::max<std::int64_t>(1, std::llround(t_ms));
        if (mean_burst >= static_cast<double>(period)) ++overlap_risk_devices;
        std::int64_t kappa;
        if (config.fixed_start_offset) {
            kappa = *config.fixed_start_offset;
        } else {
            kappa = rng.uniform_int(0, period - 1);
        }
        const double p_a = rng.uniform(config.p_active_min, config.p_active_max);
        std::uint8_t* r = trace.row(d);
        double position = static_cast<double>(kappa); // first opportunity (m = 1)
        for (;;) {
            const std::int64_t start = std::llround(position);
            if (start >= config.n_slots) break;
            if (rng.bernoulli(p_a)) {
                const std::int64_t extra = sample_burst_duration(config.q, rng);
                detail::paint_burst(r, config.n_slots, start, 1 + extra);
            }
            double jitter = 0.0;
            if (config.jitter_fraction > 0.0) {
                jitter = rng.uniform(-config.jitter_fraction, config.jitter_fraction);
            }
            position += static_cast<double>(period) * (1.0 + jitter);
        }
    }
    if (overlap_risk_devices > 0) {
        std::ostringstream msg;
        msg << "expected burst length 1/(1-q) >= period for " << overlap_risk_devices
            << " device(s); transmission opportunities may overlap";
        trace.warnings.push_back(msg.str());
    }
    return trace;
}

/// Sparse trace file: two header lines (column names, values) followed by one
/// `device_id,start_slot,duration_slots` row per activity run.
inline void save_trace(const TrafficTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_trace: cannot write " + path);
    out << "n_devices,n_slots,tti_ms,model,seed\n";
    out << trace.n_devices << ',' << trace.n_slots << ',' << trace.tti_ms << ','
        << trace.model << ',' << trace.seed << "\n";
    for (int d = 0; d < trace.n_devices; ++d) {
        const std::uint8_t* r = trace.row(d);
        std::int64_t t = 0;
        while (t < trace.n_slots) {
            if (r[t]) {
                std::int64_t end = t;
                while (end < trace.n_slots && r[end]) ++end;
                out << d << ',' << t << ',' << (end - t) << "\n";
                t = end;
            } else {
                ++t;
            }
        }
    }
}

inline TrafficTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_trace: cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != "n_devices,n_slots,tti_ms,model,seed")
        throw std::runtime_error("load_trace: bad header in " + path);
    if (!std::getline(in, line)) throw std::runtime_error("load_trace: missing header values");
    TrafficTrace trace;
    {
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ','); trace.n_devices = std::stoi(tok);
        std::getline(ss, tok, ','); trace.n_slots = std::stoll(tok);
        std::getline(ss, tok, ','); trace.tti_ms = std::stoi(tok);
        std::getline(ss, trace.model, ',');
        std::getline(ss, tok, ','); trace.seed = std::stoull(tok);
    }
    if (trace.n_devices < 1 || trace.n_slots < 1)
        throw std::runtime_error("load_trace: bad dimensions");
    trace.activity.assign(static_cast<std::size_t>(trace.n_devices) *
                              static_cast<std::size_t>(trace.n_slots),
                          0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ','); const int d = std::stoi(tok);
        std::getline(ss, tok, ','); const std::int64_t start = std::stoll(tok);
        std::getline(ss, tok, ','); const std::int64_t dur = std::stoll(tok);
        if (d < 0 || d >= trace.n_devices || start < 0 || start + dur > trace.n_slots)
            throw std::runtime_error("load_trace: run out of bounds");
        detail::paint_burst(trace.row(d), trace.n_slots, start, dur);
    }
    return trace;
}

} // namespace mtc
