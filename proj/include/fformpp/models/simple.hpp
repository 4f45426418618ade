#pragma once

#include "fformpp/error.hpp"
#include "fformpp/models/ets.hpp"
#include "fformpp/stats.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace fformpp::models {

inline std::vector<double> mean_forecast(std::span<const double> y, int h) {
    return std::vector<double>(h, stats::mean(y));
}

inline std::vector<double> naive_forecast(std::span<const double> y, int h) {
    return std::vector<double>(h, y.back());
}

/// y_T + h (y_T - y_1) / (T - 1).
inline std::vector<double> drift_forecast(std::span<const double> y, int h) {
    if (y.size() < 2) throw Error(ErrorKind::TooShort, "drift needs two observations");
    const double slope = (y.back() - y.front()) / static_cast<double>(y.size() - 1);
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) out[i] = y.back() + (i + 1) * slope;
    return out;
}

/// Repeats the most recent observation of the same season.
inline std::vector<double> seasonal_naive_forecast(std::span<const double> y, int m, int h) {
    if (y.size() < static_cast<std::size_t>(m)) throw Error(ErrorKind::TooShort, "seasonal naive needs a full cycle");
    std::vector<double> out(h);
    const std::size_t n = y.size();
    for (int i = 0; i < h; ++i) out[i] = y[n - m + (i % m)];
    return out;
}

/// Classical additive seasonal indices from a centred moving average (phase order 0..m-1,
/// aligned with y[0]). Returns an empty vector when the series shows no significant seasonality.
inline std::vector<double> classical_seasonal_indices(std::span<const double> y, int m) {
    const std::size_t n = y.size();
    if (m <= 1 || n < 2 * static_cast<std::size_t>(m)) return {};
    const auto r = stats::acf(y, m);
    double s = 1.0;
    for (int k = 1; k < m; ++k) s += 2.0 * r[k] * r[k];
    if (std::abs(r[m]) <= 1.645 * std::sqrt(s / static_cast<double>(n))) return {};

    std::vector<double> detr(n, std::nan(""));
    const int half = m / 2;
    for (std::size_t t = half; t + half < n; ++t) {
        double ma = 0.0;
        if (m % 2 == 0) {
            for (int j = -half; j <= half; ++j) {
                const double w = (j == -half || j == half) ? 0.5 : 1.0;
                ma += w * y[t + j];
            }
        } else {
            for (int j = -half; j <= half; ++j) ma += y[t + j];
        }
        detr[t] = y[t] - ma / m;
    }
    std::vector<double> idx(m, 0.0);
    std::vector<int> cnt(m, 0);
    for (std::size_t t = 0; t < n; ++t) {
        if (!std::isnan(detr[t])) {
            idx[t % m] += detr[t];
            ++cnt[t % m];
        }
    }
    double level = 0.0;
    for (int k = 0; k < m; ++k) {
        idx[k] = cnt[k] ? idx[k] / cnt[k] : 0.0;
        level += idx[k];
    }
    for (auto& v : idx) v -= level / m;
    return idx;
}

/// Theta method as simple exponential smoothing plus half the linear-trend slope as drift,
/// applied to classically seasonally adjusted data when seasonality is significant.
inline std::vector<double> theta_forecast(std::span<const double> y, int m, int h) {
    const std::size_t n = y.size();
    if (n < 4) throw Error(ErrorKind::TooShort, "theta needs at least four observations");
    const auto idx = classical_seasonal_indices(y, m);
    std::vector<double> adj(y.begin(), y.end());
    if (!idx.empty()) {
        for (std::size_t t = 0; t < n; ++t) adj[t] -= idx[t % m];
    }
    const auto ses = ets::fit(adj, ets::Spec{ets::Trend::None, false, 1});
    const double alpha = ses.params.alpha;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double x = static_cast<double>(t + 1);
        sx += x;
        sy += adj[t];
        sxx += x * x;
        sxy += x * adj[t];
    }
    const double nn = static_cast<double>(n);
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    std::vector<double> out(h);
    const double tail = std::pow(1.0 - alpha, nn);
    for (int i = 1; i <= h; ++i) {
        out[i - 1] = ses.level + 0.5 * slope * ((i - 1) + 1.0 / alpha - tail / alpha);
        if (!idx.empty()) out[i - 1] += idx[(n + i - 1) % m];
    }
    return out;
}

} // namespace fformpp::models
