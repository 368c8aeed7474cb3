#pragma once

// Test-only statistical oracles: regularized incomplete gamma, chi-square
// goodness-of-fit p-values, and rank statistics. Kept independent of the
// library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace testsupport {

/// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series expansion
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction for Q, then P = 1 - Q
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - gln) * h;
    return 1.0 - q;
}

inline double chi_square_pvalue(double stat, int dof) {
    if (dof < 1) throw std::invalid_argument("chi_square_pvalue: dof must be >= 1");
    return 1.0 - gamma_p(0.5 * dof, 0.5 * stat);
}

/// Chi-square goodness of fit of observed counts against a pmf. Tail bins are
/// merged until every expected count is at least 5.
inline double chi_square_gof_pvalue(const std::vector<std::int64_t>& counts,
                                    const std::function<double(int)>& pmf, std::int64_t n_total) {
    std::vector<double> expected;
    std::vector<double> observed;
    double exp_acc = 0.0, obs_acc = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        exp_acc += pmf(static_cast<int>(k)) * static_cast<double>(n_total);
        obs_acc += static_cast<double>(counts[k]);
        if (exp_acc >= 5.0) {
            expected.push_back(exp_acc);
            observed.push_back(obs_acc);
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    // remaining tail mass (everything at or beyond the last merged bin)
    double tail = static_cast<double>(n_total);
    for (double e : expected) tail -= e;
    tail -= exp_acc;
    exp_acc += tail;
    if (!expected.empty() && exp_acc < 5.0) {
        expected.back() += exp_acc;
        observed.back() += obs_acc;
    } else {
        expected.push_back(exp_acc);
        observed.push_back(obs_acc);
    }
    if (expected.size() < 2) throw std::invalid_argument("chi_square_gof: too few bins");
    double stat = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    return chi_square_pvalue(stat, static_cast<int>(expected.size()) - 1);
}

inline double poisson_pmf(int k, double mean) {
    return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

/// AUC as the midrank Mann-Whitney statistic U / (n_pos * n_neg).
inline double mann_whitney_auc(const std::vector<double>& scores,
                               const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) rank[idx[k]] = mid;
        i = j;
    }
    double rank_sum_pos = 0.0;
    std::int64_t n_pos = 0, n_neg = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k]) {
            rank_sum_pos += rank[k];
            ++n_pos;
        } else {
            ++n_neg;
        }
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

} // namespace testsupport
