#pragma once

#include "fformpp/error.hpp"
#include "fformpp/models/arima.hpp"
#include "fformpp/models/ets.hpp"
#include "fformpp/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace fformpp::models {

/// Guerrero's coefficient-of-variation criterion over lambda in {0, 0.1, ..., 1}.
/// Non-positive data cannot be transformed and get lambda = 1.
inline double guerrero_lambda(std::span<const double> y, int m) {
    if (*std::min_element(y.begin(), y.end()) <= 0.0) return 1.0;
    const int width = std::max(m, 2);
    const std::size_t groups = y.size() / width;
    if (groups < 2) return 1.0;
    double best_lambda = 1.0, best_cv = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 10; ++step) {
        const double lambda = step / 10.0;
        std::vector<double> ratio;
        for (std::size_t g = 0; g < groups; ++g) {
            std::span<const double> chunk = y.subspan(y.size() - (groups - g) * width, width);
            const double mu = stats::mean(chunk);
            const double s = stats::sd(chunk);
            ratio.push_back(s / std::pow(mu, 1.0 - lambda));
        }
        const double mu = stats::mean(ratio);
        const double cv = mu > 0.0 ? stats::sd(ratio) / mu : std::numeric_limits<double>::infinity();
        if (cv < best_cv) {
            best_cv = cv;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

inline double box_cox(double y, double lambda) { return lambda == 0.0 ? std::log(y) : (std::pow(y, lambda) - 1.0) / lambda; }

inline double inv_box_cox(double z, double lambda) {
    if (lambda == 0.0) return std::exp(z);
    const double base = lambda * z + 1.0;
    return base > 0.0 ? std::pow(base, 1.0 / lambda) : 0.0;
}

/// Simplified TBATS: Box–Cox, trigonometric seasonal regression, exponential-smoothing
/// level/trend on the adjusted data and an optional ARMA(1,1) on its residuals.
inline std::vector<double> tbats_forecast(std::span<const double> y, const std::vector<int>& periods, int h) {
    const std::size_t n = y.size();
    if (n < 8) throw Error(ErrorKind::TooShort, "TBATS needs at least eight observations");
    const int m0 = periods.empty() ? 1 : periods.front();
    const double lambda = guerrero_lambda(y, m0);
    std::vector<double> z(n);
    for (std::size_t t = 0; t < n; ++t) z[t] = lambda == 1.0 ? y[t] : box_cox(y[t], lambda);

    struct Harmonic {
        int period;
        int k;
        bool has_sin;
    };
    std::vector<Harmonic> harmonics;
    for (int m : periods) {
        if (m <= 1 || n < 2 * static_cast<std::size_t>(m)) continue;
        const int K = std::min((m + 1) / 2, 6);
        for (int k = 1; k <= K; ++k) harmonics.push_back({m, k, 2 * k != m});
    }
    std::size_t ncols = 2;
    for (const auto& hm : harmonics) ncols += hm.has_sin ? 2 : 1;
    while (!harmonics.empty() && n < ncols + 4) {
        ncols -= harmonics.back().has_sin ? 2 : 1;
        harmonics.pop_back();
    }

    auto trig_row = [&](double t, auto&& row) {
        Eigen::Index c = 0;
        for (const auto& hm : harmonics) {
            const double arg = 2.0 * std::numbers::pi * hm.k * t / hm.period;
            row[c++] = std::cos(arg);
            if (hm.has_sin) row[c++] = std::sin(arg);
        }
    };

    const Eigen::Index nt = static_cast<Eigen::Index>(ncols) - 2;
    std::vector<double> seasonal(n, 0.0), seasonal_fc(h, 0.0);
    if (nt > 0) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ncols));
        for (std::size_t t = 0; t < n; ++t) {
            X(static_cast<Eigen::Index>(t), 0) = 1.0;
            X(static_cast<Eigen::Index>(t), 1) = static_cast<double>(t) / static_cast<double>(n);
            trig_row(static_cast<double>(t), X.row(static_cast<Eigen::Index>(t)).tail(nt));
        }
        const auto fit = stats::ols(X, stats::to_eigen(z));
        const Eigen::VectorXd beta = fit.coef.tail(nt);
        Eigen::RowVectorXd row(nt);
        for (std::size_t t = 0; t < n; ++t) {
            trig_row(static_cast<double>(t), row);
            seasonal[t] = row.dot(beta);
        }
        for (int i = 0; i < h; ++i) {
            trig_row(static_cast<double>(n + i), row);
            seasonal_fc[i] = row.dot(beta);
        }
    }
    std::vector<double> adj(n);
    for (std::size_t t = 0; t < n; ++t) adj[t] = z[t] - seasonal[t];

    const auto smooth = ets::auto_fit(adj, 1, false);
    auto base = smooth.forecast(h);

    // ARMA(1,1) on the smoothing residuals, kept only when it lowers AICc against white noise.
    if (n >= 20) {
        try {
            const std::size_t cond = 1;
            auto wn = arima::fit(smooth.residuals, arima::Order{0, 0, 0, 0, 0, 0, 1, false}, cond);
            auto arma = arima::fit(smooth.residuals, arima::Order{1, 0, 1, 0, 0, 0, 1, false}, cond);
            if (arma.aicc < wn.aicc) {
                const auto corr = arma.forecast(h);
                for (int i = 0; i < h; ++i) base[i] += corr[i];
            }
        } catch (const Error&) {
        }
    }
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) {
        const double zf = base[i] + seasonal_fc[i];
        out[i] = lambda == 1.0 ? zf : inv_box_cox(zf, lambda);
    }
    return out;
}

} // namespace fformpp::models
