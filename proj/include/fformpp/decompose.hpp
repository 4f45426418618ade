#pragma once

#include "fformpp/error.hpp"
#include "fformpp/series.hpp"
#include "fformpp/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace fformpp {

/// Additive decomposition: trend + sum(seasonal) + remainder reproduces the input.
struct DecompositionResult {
    std::vector<double> trend;
    std::vector<std::vector<double>> seasonal;  // one component per entry of `periods`
    std::vector<int> periods;
    std::vector<double> remainder;

    [[nodiscard]] std::vector<double> seasonally_adjusted() const {
        std::vector<double> out(trend.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = trend[i] + remainder[i];
        return out;
    }
};

namespace detail {

/// Local-linear tricube loess of y (on x = 0..n-1) with a q-nearest-point window.
/// When `self_weight` is non-null it receives the hat-matrix diagonal.
inline std::vector<double> loess(std::span<const double> y, int q, std::vector<double>* self_weight = nullptr) {
    const int n = static_cast<int>(y.size());
    std::vector<double> out(n, 0.0);
    if (self_weight) self_weight->assign(n, 0.0);
    if (n == 0) return out;
    if (n == 1) {
        out[0] = y[0];
        if (self_weight) (*self_weight)[0] = 1.0;
        return out;
    }
    const int width = std::min(q, n);
    std::vector<double> w(width);
    // symmetric interior windows share one kernel and reduce to a weighted mean
    const int half = (width - 1) / 2;
    const bool symmetric = q <= n && width % 2 == 1 && half >= 1;
    std::vector<double> kernel;
    double kernel_sum = 0.0;
    if (symmetric) {
        const double h = half;
        for (int r = -half; r <= half; ++r) {
            const double a = std::abs(r);
            double wr = 0.0;
            if (a <= 0.999 * h) {
                const double u = a / h;
                const double c = 1.0 - u * u * u;
                wr = a <= 0.001 * h ? 1.0 : c * c * c;
            }
            kernel.push_back(wr);
            kernel_sum += wr;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (symmetric && i >= half && i + half < n) {
            double fit = 0.0;
            for (int r = -half; r <= half; ++r) fit += kernel[static_cast<std::size_t>(r + half)] * y[i + r];
            out[i] = fit / kernel_sum;
            if (self_weight) (*self_weight)[i] = kernel[static_cast<std::size_t>(half)] / kernel_sum;
            continue;
        }
        int left = std::clamp(i - (width - 1) / 2, 0, n - width);
        const int right = left + width - 1;
        double h = std::max(i - left, right - i);
        if (q > n) h += (q - n) / 2.0;
        h = std::max(h, 1.0);
        double sw = 0.0, sx = 0.0;
        for (int j = left; j <= right; ++j) {
            const double r = std::abs(j - i);
            double wj = 0.0;
            if (r <= 0.999 * h) {
                const double u = r / h;
                const double c = 1.0 - u * u * u;
                wj = r <= 0.001 * h ? 1.0 : c * c * c;
            }
            w[j - left] = wj;
            sw += wj;
            sx += wj * j;
        }
        if (sw <= 0.0) {
            out[i] = y[i];
            if (self_weight) (*self_weight)[i] = 1.0;
            continue;
        }
        const double xbar = sx / sw;
        double sxx = 0.0;
        for (int j = left; j <= right; ++j) sxx += w[j - left] * (j - xbar) * (j - xbar);
        const double range = right - left;
        const bool linear = std::sqrt(sxx / sw) > 0.001 * range;
        double fit = 0.0;
        for (int j = left; j <= right; ++j) {
            double lj = w[j - left] / sw;
            if (linear) lj += w[j - left] * (i - xbar) * (j - xbar) / sxx;
            fit += lj * y[j];
            if (self_weight && j == i) (*self_weight)[i] = lj;
        }
        out[i] = fit;
    }
    return out;
}

inline int next_odd(double x) {
    int v = static_cast<int>(std::ceil(x));
    if (v % 2 == 0) ++v;
    return std::max(v, 3);
}

/// Seasonal-trend decomposition with a periodic seasonal window (two inner passes).
inline void stl_periodic(std::span<const double> y, int m, std::vector<double>& trend, std::vector<double>& seasonal) {
    const std::size_t n = y.size();
    const double ns = 10.0 * static_cast<double>(n) + 1.0;
    const int trend_window = next_odd(1.5 * m / (1.0 - 1.5 / ns));
    trend.assign(n, 0.0);
    seasonal.assign(n, 0.0);
    std::vector<double> work(n);
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> phase_sum(m, 0.0);
        std::vector<int> phase_count(m, 0);
        for (std::size_t t = 0; t < n; ++t) {
            phase_sum[t % m] += y[t] - trend[t];
            ++phase_count[t % m];
        }
        std::vector<double> phase_mean(m);
        double level = 0.0;
        for (int k = 0; k < m; ++k) {
            phase_mean[k] = phase_sum[k] / phase_count[k];
            level += phase_mean[k];
        }
        level /= m;
        for (std::size_t t = 0; t < n; ++t) seasonal[t] = phase_mean[t % m] - level;
        for (std::size_t t = 0; t < n; ++t) work[t] = y[t] - seasonal[t];
        trend = loess(work, trend_window);
    }
}

/// Trend of a non-seasonal series: loess whose window is chosen by leave-one-out
/// cross-validation among 5%, 20% and 50% of the series length.
inline std::vector<double> nonseasonal_trend(std::span<const double> y) {
    const double n = static_cast<double>(y.size());
    std::vector<double> best;
    double best_cv = std::numeric_limits<double>::infinity();
    int last_q = -1;
    for (double frac : std::array{0.5, 0.2, 0.05}) {
        const int q = std::min(next_odd(std::max(5.0, frac * n)), next_odd(n));
        if (q == last_q) continue;
        last_q = q;
        std::vector<double> h;
        auto fit = loess(y, q, &h);
        double cv = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double denom = std::max(1.0 - h[i], 1e-8);
            const double e = (y[i] - fit[i]) / denom;
            cv += e * e;
        }
        // Prefer the smoother fit unless a narrower window is clearly better.
        if (cv < best_cv * (1.0 - 1e-9)) {
            best_cv = cv;
            best = std::move(fit);
        }
    }
    return best;
}

/// Tricube-weighted local fit of degree 0 or 1 at position xs using points [left, right].
/// Returns false when every weight vanishes.
inline bool stl_estimate(std::span<const double> y, int len, int degree, double xs, int left, int right, double& out) {
    const int n = static_cast<int>(y.size());
    double h = std::max(xs - left, right - xs);
    if (len > n) h += (len - n) / 2;
    std::vector<double> w(static_cast<std::size_t>(right - left + 1), 0.0);
    double a = 0.0;
    for (int j = left; j <= right; ++j) {
        const double r = std::abs(j - xs);
        double wj = 0.0;
        if (r <= 0.999 * h) {
            if (r <= 0.001 * h) {
                wj = 1.0;
            } else {
                const double u = r / h;
                const double c = 1.0 - u * u * u;
                wj = c * c * c;
            }
        }
        w[static_cast<std::size_t>(j - left)] = wj;
        a += wj;
    }
    if (a <= 0.0) return false;
    for (auto& v : w) v /= a;
    if (h > 0.0 && degree > 0) {
        double mean = 0.0;
        for (int j = left; j <= right; ++j) mean += w[static_cast<std::size_t>(j - left)] * j;
        double c = 0.0;
        for (int j = left; j <= right; ++j) c += w[static_cast<std::size_t>(j - left)] * (j - mean) * (j - mean);
        if (std::sqrt(c) > 0.001 * (n - 1)) {
            const double b = (xs - mean) / c;
            for (int j = left; j <= right; ++j) w[static_cast<std::size_t>(j - left)] *= b * (j - mean) + 1.0;
        }
    }
    out = 0.0;
    for (int j = left; j <= right; ++j) out += w[static_cast<std::size_t>(j - left)] * y[j];
    return true;
}

/// Loess smooth at every position with a `len`-point window.
inline std::vector<double> stl_smooth(std::span<const double> y, int len, int degree) {
    const int n = static_cast<int>(y.size());
    std::vector<double> out(y.begin(), y.end());
    if (n < 2) return out;
    const int half = (len + 1) / 2;
    int left = 0, right = std::min(len, n) - 1;
    for (int i = 0; i < n; ++i) {
        if (len < n && i + 1 > half && right != n - 1) {
            ++left;
            ++right;
        }
        double v = 0.0;
        if (stl_estimate(y, len, degree, i, left, right, v)) out[i] = v;
    }
    return out;
}

inline std::vector<double> moving_average(std::span<const double> x, int len) {
    std::vector<double> out;
    double s = 0.0;
    for (int i = 0; i < len; ++i) s += x[i];
    out.push_back(s / len);
    for (std::size_t i = static_cast<std::size_t>(len); i < x.size(); ++i) {
        s += x[i] - x[i - len];
        out.push_back(s / len);
    }
    return out;
}

} // namespace detail

struct StlOptions {
    int seasonal_window = 11;
    int seasonal_degree = 0;
    int trend_window = 0;     // 0: smallest odd integer >= 1.5 m / (1 - 1.5 / seasonal_window)
    int low_pass_window = 0;  // 0: smallest odd integer > m
    int inner = 5;
};

/// Seasonal-trend decomposition by loess with a moving seasonal window (no robustness
/// iterations). Cycle-subseries are smoothed and extrapolated one period at each end.
inline DecompositionResult stl(std::span<const double> y, int m, const StlOptions& opt = {}) {
    const int n = static_cast<int>(y.size());
    if (m < 2) throw Error(ErrorKind::BadPeriod, "seasonal period must be at least 2");
    if (n < 2 * m) throw Error(ErrorKind::TooShort, "length " + std::to_string(n) + " < two cycles of period " + std::to_string(m));
    const auto odd = [](int v) { return v % 2 == 0 ? v + 1 : v; };
    const int ns = odd(std::max(3, opt.seasonal_window));
    const int nt = opt.trend_window > 0 ? odd(opt.trend_window) : odd(static_cast<int>(std::ceil(1.5 * m / (1.0 - 1.5 / ns))));
    const int nl = opt.low_pass_window > 0 ? odd(opt.low_pass_window) : odd(m + 1);

    std::vector<double> trend(n, 0.0), season(n, 0.0), detrended(n), cycle(static_cast<std::size_t>(n + 2 * m));
    for (int pass = 0; pass < opt.inner; ++pass) {
        for (int i = 0; i < n; ++i) detrended[i] = y[i] - trend[i];
        for (int j = 0; j < m; ++j) {
            std::vector<double> sub;
            for (int i = j; i < n; i += m) sub.push_back(detrended[i]);
            const int k = static_cast<int>(sub.size());
            std::vector<double> sm(static_cast<std::size_t>(k + 2));
            const auto inner = detail::stl_smooth(sub, ns, opt.seasonal_degree);
            std::copy(inner.begin(), inner.end(), sm.begin() + 1);
            if (!detail::stl_estimate(sub, ns, opt.seasonal_degree, -1.0, 0, std::min(ns, k) - 1, sm[0])) sm[0] = sm[1];
            if (!detail::stl_estimate(sub, ns, opt.seasonal_degree, k, std::max(0, k - ns), k - 1, sm[static_cast<std::size_t>(k + 1)]))
                sm[static_cast<std::size_t>(k + 1)] = sm[static_cast<std::size_t>(k)];
            for (int r = 0; r < k + 2; ++r) cycle[static_cast<std::size_t>(r * m + j)] = sm[static_cast<std::size_t>(r)];
        }
        const auto low = detail::stl_smooth(detail::moving_average(detail::moving_average(detail::moving_average(cycle, m), m), 3), nl, 1);
        for (int i = 0; i < n; ++i) season[i] = cycle[static_cast<std::size_t>(m + i)] - low[i];
        std::vector<double> adjusted(n);
        for (int i = 0; i < n; ++i) adjusted[i] = y[i] - season[i];
        trend = detail::stl_smooth(adjusted, nt, 1);
    }
    DecompositionResult d;
    d.periods = {m};
    d.trend = trend;
    d.seasonal = {season};
    d.remainder.resize(n);
    for (int i = 0; i < n; ++i) d.remainder[i] = y[i] - trend[i] - season[i];
    return d;
}

/// Decomposes a series into trend, one seasonal component per period, and remainder.
/// Periods are removed sequentially from shortest to longest, iterated twice.
inline DecompositionResult decompose(std::span<const double> y, const std::vector<int>& periods) {
    const std::size_t n = y.size();
    if (n < 2) throw Error(ErrorKind::TooShort, "decomposition needs at least two observations");
    std::vector<int> seasonal_periods;
    for (int m : periods) {
        if (m > 1) seasonal_periods.push_back(m);
    }
    std::sort(seasonal_periods.begin(), seasonal_periods.end());
    for (int m : seasonal_periods) {
        if (n < 2 * static_cast<std::size_t>(m)) {
            throw Error(ErrorKind::TooShort, "length " + std::to_string(n) + " < two cycles of period " + std::to_string(m));
        }
    }

    DecompositionResult d;
    d.periods = seasonal_periods;
    d.seasonal.assign(seasonal_periods.size(), std::vector<double>(n, 0.0));
    if (seasonal_periods.empty()) {
        d.trend = detail::nonseasonal_trend(y);
    } else {
        std::vector<double> deseason(y.begin(), y.end());
        std::vector<double> trend, seas;
        const int iterations = seasonal_periods.size() > 1 ? 2 : 1;
        for (int it = 0; it < iterations; ++it) {
            for (std::size_t k = 0; k < seasonal_periods.size(); ++k) {
                for (std::size_t t = 0; t < n; ++t) deseason[t] += d.seasonal[k][t];
                detail::stl_periodic(deseason, seasonal_periods[k], trend, seas);
                d.seasonal[k] = seas;
                for (std::size_t t = 0; t < n; ++t) deseason[t] -= d.seasonal[k][t];
            }
        }
        d.trend = std::move(trend);
    }
    d.remainder.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double r = y[t] - d.trend[t];
        for (const auto& s : d.seasonal) r -= s[t];
        d.remainder[t] = r;
    }
    return d;
}

inline DecompositionResult decompose(const TimeSeries& series) { return decompose(series.values(), series.periods()); }

} // namespace fformpp
