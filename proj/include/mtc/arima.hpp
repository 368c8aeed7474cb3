#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mtc/errors.hpp"
#include "mtc/model_spec.hpp"

namespace mtc {

namespace detail {

/// Dense solve via Gaussian elimination with partial pivoting. Systems here
/// are tiny (normal equations of the ARMA regressions).
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (std::fabs(a[pivot * n + col]) < 1e-12)
            throw std::runtime_error("solve_linear: singular system");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= a[i * n + j] * x[j];
        x[i] = acc / a[i * n + i];
    }
    return x;
}

/// Ordinary least squares through the normal equations; X row-major.
inline std::vector<double> ols(const std::vector<double>& X, const std::vector<double>& y,
                               std::size_t rows, std::size_t cols) {
    std::vector<double> xtx(cols * cols, 0.0), xty(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = X.data() + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            xty[i] += xr[i] * y[r];
            for (std::size_t j = i; j < cols; ++j) xtx[i * cols + j] += xr[i] * xr[j];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) xtx[i * cols + j] = xtx[j * cols + i];
    return solve_linear(std::move(xtx), std::move(xty));
}

inline std::vector<double> difference(const std::vector<double>& x, int order) {
    std::vector<double> cur = x;
    for (int k = 0; k < order; ++k) {
        std::vector<double> next;
        next.reserve(cur.size() - 1);
        for (std::size_t i = 1; i < cur.size(); ++i) next.push_back(cur[i] - cur[i - 1]);
        cur = std::move(next);
    }
    return cur;
}

/// Spectral radius of the AR companion matrix by power iteration, used only
/// for the stationarity warning.
inline double ar_spectral_radius(const std::vector<double>& ar) {
    const std::size_t p = ar.size();
    if (p == 0) return 0.0;
    std::vector<double> v(p, 1.0 / std::sqrt(static_cast<double>(p))), w(p);
    double radius = 0.0;
    for (int it = 0; it < 200; ++it) {
        w[0] = 0.0;
        for (std::size_t j = 0; j < p; ++j) w[0] += ar[j] * v[j];
        for (std::size_t i = 1; i < p; ++i) w[i] = v[i - 1];
        double norm = 0.0;
        for (double z : w) norm += z * z;
        norm = std::sqrt(norm);
        if (norm < 1e-300) return 0.0;
        for (std::size_t i = 0; i < p; ++i) v[i] = w[i] / norm;
        radius = norm;
    }
    return radius;
}

} // namespace detail

/// Conditional least-squares ARIMA, fitted Hannan-Rissanen style: a long AR
/// regression supplies residual estimates, then the ARMA regression is
/// refined by re-estimating residuals from its own recursion.
struct ArimaModel {
    ArimaOrder order;
    double intercept = 0.0; // used only when d == 0
    std::vector<double> ar;
    std::vector<double> ma;
    double sigma2 = 0.0;
    bool root_warning = false; // AR polynomial root on or inside the unit circle
    bool ma_fallback = false;  // non-invertible MA estimate replaced by a pure AR fit

    // fit-time tails, the forecast recursion starts from these
    std::vector<double> diff_tail;      // last p differenced values (newest last)
    std::vector<double> resid_tail;     // last q residuals (newest last)
    std::vector<double> integrate_tail; // last d original values (newest last)

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(order.d == 0 ? 1 : 0) + ar.size() + ma.size();
    }
};

namespace detail {

/// Residuals of the ARMA recursion e_t = w_t - c - sum ar_i w_{t-i} - sum ma_j e_{t-j},
/// with zero initial conditions.
inline std::vector<double> arma_residuals(const std::vector<double>& w, double c,
                                          const std::vector<double>& ar,
                                          const std::vector<double>& ma) {
    const std::size_t n = w.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double pred = c;
        for (std::size_t i = 0; i < ar.size(); ++i)
            if (t > i) pred += ar[i] * w[t - 1 - i];
        for (std::size_t j = 0; j < ma.size(); ++j)
            if (t > j) pred += ma[j] * e[t - 1 - j];
        e[t] = w[t] - pred;
    }
    return e;
}

} // namespace detail

inline ArimaModel arima_fit(const std::vector<double>& series, const ArimaOrder& order) {
    if (order.p < 0 || order.d < 0 || order.q < 0)
        throw ConfigError("arima_fit: orders must be >= 0");
    const int min_len = order.p + order.d + order.q + 10;
    if (static_cast<int>(series.size()) <= min_len)
        throw std::invalid_argument("arima_fit: series too short for the requested order");

    ArimaModel model;
    model.order = order;
    const std::vector<double> w = detail::difference(series, order.d);
    const std::size_t n = w.size();
    const bool with_intercept = order.d == 0;
    const std::size_t p = static_cast<std::size_t>(order.p);
    const std::size_t q = static_cast<std::size_t>(order.q);

    // Hannan-Rissanen estimation for a given (p', q'); returns false when the
    // regression is infeasible on this series.
    auto fit_arma = [&](std::size_t p_, std::size_t q_) -> bool {
        if (p_ == 0 && q_ == 0) {
            model.intercept = 0.0;
            if (with_intercept) {
                double mean = 0.0;
                for (double v : w) mean += v;
                model.intercept = mean / static_cast<double>(n);
            }
            model.ar.clear();
            model.ma.clear();
            return true;
        }
        std::vector<double> ehat(n, 0.0);
        std::size_t m = 0;
        if (q_ > 0) {
            // residual estimates from a long AR regression
            m = std::min<std::size_t>(std::max<std::size_t>(10, p_ + q_ + 5), n / 3);
            if (m == 0 || n <= m + 1) return false;
            const std::size_t rows = n - m;
            const std::size_t cols = m + 1;
            std::vector<double> X(rows * cols), y(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t t = m + r;
                y[r] = w[t];
                X[r * cols] = 1.0;
                for (std::size_t i = 0; i < m; ++i) X[r * cols + 1 + i] = w[t - 1 - i];
            }
            const auto beta = detail::ols(X, y, rows, cols);
            for (std::size_t t = m; t < n; ++t) {
                double pred = beta[0];
                for (std::size_t i = 0; i < m; ++i) pred += beta[1 + i] * w[t - 1 - i];
                ehat[t] = w[t] - pred;
            }
        }
        // ARMA regression, iterated with recursion-based residuals
        for (int pass = 0; pass < 3; ++pass) {
            const std::size_t t0 = std::max<std::size_t>(p_, (q_ > 0 ? m + q_ : 0));
            if (t0 >= n) return false;
            const std::size_t rows = n - t0;
            const std::size_t cols = (with_intercept ? 1 : 0) + p_ + q_;
            if (rows <= cols) return false;
            std::vector<double> X(rows * cols), y(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t t = t0 + r;
                y[r] = w[t];
                std::size_t c = 0;
                if (with_intercept) X[r * cols + c++] = 1.0;
                for (std::size_t i = 0; i < p_; ++i) X[r * cols + c++] = w[t - 1 - i];
                for (std::size_t j = 0; j < q_; ++j) X[r * cols + c++] = ehat[t - 1 - j];
            }
            const auto beta = detail::ols(X, y, rows, cols);
            std::size_t c = 0;
            model.intercept = with_intercept ? beta[c++] : 0.0;
            model.ar.assign(beta.begin() + static_cast<std::ptrdiff_t>(c),
                            beta.begin() + static_cast<std::ptrdiff_t>(c + p_));
            c += p_;
            model.ma.assign(beta.begin() + static_cast<std::ptrdiff_t>(c),
                            beta.begin() + static_cast<std::ptrdiff_t>(c + q_));
            if (q_ == 0) break;
            ehat = detail::arma_residuals(w, model.intercept, model.ar, model.ma);
            m = 0; // after the first pass the recursion provides residuals everywhere
        }
        return true;
    };

    if (!fit_arma(p, q)) throw std::invalid_argument("arima_fit: series too short");
    if (q > 0) {
        // the one-step recursion is only stable for invertible MA estimates;
        // otherwise capture the dynamics with an extended pure AR fit
        std::vector<double> neg_ma(model.ma.size());
        for (std::size_t j = 0; j < model.ma.size(); ++j) neg_ma[j] = -model.ma[j];
        if (detail::ar_spectral_radius(neg_ma) >= 1.0) {
            if (!fit_arma(p + q, 0)) throw std::invalid_argument("arima_fit: series too short");
            model.ma_fallback = true;
        }
    }
    std::vector<double> resid = detail::arma_residuals(w, model.intercept, model.ar, model.ma);

    const std::size_t burn = std::max(model.ar.size(), model.ma.size());
    double sse = 0.0;
    std::size_t cnt = 0;
    for (std::size_t t = burn; t < resid.size(); ++t) {
        sse += resid[t] * resid[t];
        ++cnt;
    }
    model.sigma2 = cnt > 0 ? sse / static_cast<double>(cnt) : 0.0;
    model.root_warning = detail::ar_spectral_radius(model.ar) >= 1.0;

    const std::size_t pa = model.ar.size();
    const std::size_t qa = model.ma.size();
    for (std::size_t i = (pa <= n ? n - pa : 0); i < n; ++i) model.diff_tail.push_back(w[i]);
    for (std::size_t j = (qa <= n ? n - qa : 0); j < n; ++j) model.resid_tail.push_back(resid[j]);
    for (std::size_t k = series.size() - static_cast<std::size_t>(order.d); k < series.size(); ++k)
        model.integrate_tail.push_back(series[k]);
    return model;
}

/// In-sample AIC for grid selection (conditional sum of squares flavour).
inline double arima_aic(const ArimaModel& model, std::size_t n_obs) {
    const double k = static_cast<double>(model.parameter_count()) + 1.0;
    const double s2 = std::max(model.sigma2, 1e-300);
    return static_cast<double>(n_obs) * std::log(s2) + 2.0 * k;
}

/// Iterates the ARMA recurrence forward; future shocks are zero. Forecasts on
/// the differenced scale are integrated back through the stored tail.
inline std::vector<double> arima_forecast(const ArimaModel& model, int horizon) {
    if (horizon < 1) throw std::invalid_argument("arima_forecast: horizon must be >= 1");
    std::vector<double> w = model.diff_tail;  // oldest first
    std::vector<double> e = model.resid_tail;
    std::vector<double> diff_fc;
    for (int h = 0; h < horizon; ++h) {
        double pred = model.intercept;
        for (std::size_t i = 0; i < model.ar.size(); ++i) {
            if (w.size() > i) pred += model.ar[i] * w[w.size() - 1 - i];
        }
        for (std::size_t j = 0; j < model.ma.size(); ++j) {
            if (e.size() > j) pred += model.ma[j] * e[e.size() - 1 - j];
        }
        diff_fc.push_back(pred);
        w.push_back(pred);
        e.push_back(0.0); // conditional expectation of future shocks
    }
    // integrate d times
    std::vector<double> out = diff_fc;
    std::vector<double> tail = model.integrate_tail; // length d, newest last
    for (int k = static_cast<int>(tail.size()); k-- > 0;) {
        // level-k last value: difference the stored original tail k times
        std::vector<double> lvl(tail.begin(), tail.end());
        for (int j = 0; j < k; ++j)
            for (std::size_t i = lvl.size() - 1; i >= 1; --i) lvl[i] -= lvl[i - 1];
        double prev = lvl.back();
        for (double& v : out) {
            v += prev;
            prev = v;
        }
    }
    return out;
}

/// Rolling one-step-ahead predictor: predict_next() gives the forecast of the
/// next value; observe() feeds the realised value and updates the recursion.
class ArimaFilter {
public:
    explicit ArimaFilter(const ArimaModel& model) : model_(model) {
        w_ = model.diff_tail;
        e_ = model.resid_tail;
        last_ = model.integrate_tail;
    }

    double predict_next() const {
        double pred = model_.intercept;
        for (std::size_t i = 0; i < model_.ar.size(); ++i)
            if (w_.size() > i) pred += model_.ar[i] * w_[w_.size() - 1 - i];
        for (std::size_t j = 0; j < model_.ma.size(); ++j)
            if (e_.size() > j) pred += model_.ma[j] * e_[e_.size() - 1 - j];
        // integrate: add back the d stored levels
        double value = pred;
        std::vector<double> lvl = last_;
        for (int k = static_cast<int>(lvl.size()); k-- > 0;) {
            std::vector<double> t(lvl.begin(), lvl.end());
            for (int j = 0; j < k; ++j)
                for (std::size_t i = t.size() - 1; i >= 1; --i) t[i] -= t[i - 1];
            value += t.back();
        }
        return value;
    }

    void observe(double value) {
        // new differenced value from the original-scale observation
        double w_new = value;
        std::vector<double> lvl = last_;
        for (int k = static_cast<int>(lvl.size()); k-- > 0;) {
            std::vector<double> t(lvl.begin(), lvl.end());
            for (int j = 0; j < k; ++j)
                for (std::size_t i = t.size() - 1; i >= 1; --i) t[i] -= t[i - 1];
            w_new -= t.back();
        }
        double pred = model_.intercept;
        for (std::size_t i = 0; i < model_.ar.size(); ++i)
            if (w_.size() > i) pred += model_.ar[i] * w_[w_.size() - 1 - i];
        for (std::size_t j = 0; j < model_.ma.size(); ++j)
            if (e_.size() > j) pred += model_.ma[j] * e_[e_.size() - 1 - j];
        w_.push_back(w_new);
        e_.push_back(w_new - pred);
        trim(w_, model_.ar.size());
        trim(e_, model_.ma.size());
        if (!last_.empty()) {
            last_.erase(last_.begin());
            last_.push_back(value);
        }
    }

private:
    static void trim(std::vector<double>& v, std::size_t keep) {
        const std::size_t cap = std::max<std::size_t>(keep, 1) + 8;
        if (v.size() > 2 * cap) v.erase(v.begin(), v.end() - static_cast<std::ptrdiff_t>(cap));
    }

    ArimaModel model_;
    std::vector<double> w_;
    std::vector<double> e_;
    std::vector<double> last_;
};

/// Small grid search minimising AIC, p and q up to the given bounds, d up to 1.
inline ArimaOrder arima_select_order(const std::vector<double>& series, int max_p = 3,
                                     int max_q = 3, int max_d = 1) {
    ArimaOrder best{0, 0, 0};
    double best_aic = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int d = 0; d <= max_d; ++d) {
        for (int p = 0; p <= max_p; ++p) {
            for (int q = 0; q <= max_q; ++q) {
                if (p == 0 && q == 0 && d == 0) continue;
                try {
                    const ArimaModel m = arima_fit(series, {p, d, q});
                    const double aic = arima_aic(m, series.size());
                    if (aic < best_aic) {
                        best_aic = aic;
                        best = {p, d, q};
                        found = true;
                    }
                } catch (const std::exception&) {
                    // infeasible order on this series; skip
                }
            }
        }
    }
    if (!found) throw std::invalid_argument("arima_select_order: no feasible order");
    return best;
}

} // namespace mtc
