#pragma once

#include "fformpp/error.hpp"
#include "fformpp/optim.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fformpp::ets {

enum class Trend { None, Additive, Damped };

/// Additive-error exponential smoothing specification: ETS(A, trend, season).
struct Spec {
    Trend trend = Trend::None;
    bool seasonal = false;
    int period = 1;

    [[nodiscard]] std::string name() const {
        std::string s = "A";
        s += trend == Trend::None ? "N" : trend == Trend::Additive ? "A" : "Ad";
        s += seasonal ? "A" : "N";
        return s;
    }
    [[nodiscard]] int n_states() const { return 1 + (trend != Trend::None ? 1 : 0) + (seasonal ? period - 1 : 0); }
    [[nodiscard]] int n_smoothing() const {
        return 1 + (trend != Trend::None ? 1 : 0) + (seasonal ? 1 : 0) + (trend == Trend::Damped ? 1 : 0);
    }
};

struct Params {
    double alpha = 0.5;
    double beta = 0.0;
    double gamma = 0.0;
    double phi = 1.0;
};

struct Fit {
    Spec spec;
    Params params;
    double level = 0.0;
    double slope = 0.0;
    std::vector<double> season;  // season[k] is the seasonal state for k steps ahead mod period
    double sse = 0.0;
    double aicc = std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    bool converged = false;
    std::vector<double> residuals;

    [[nodiscard]] std::vector<double> forecast(int horizon) const {
        std::vector<double> out(horizon);
        double damp = 0.0, phik = 1.0;
        for (int h = 1; h <= horizon; ++h) {
            if (spec.trend != Trend::None) {
                phik *= params.phi;
                damp += phik;
            }
            double f = level + damp * slope;
            if (spec.seasonal) f += season[static_cast<std::size_t>((h - 1) % spec.period)];
            out[h - 1] = f;
        }
        return out;
    }
};

namespace detail {

/// Runs the filter from a full initial state; returns one-step errors.
/// State layout: [level, slope?, s_{-1}, s_{-2}, ..., s_{-m}] where s_{-1} is the most recent.
struct Filter {
    const Spec& spec;
    const Params& p;

    void run(std::span<const double> y, std::span<const double> x0, std::span<double> errors, double* level_out = nullptr,
             double* slope_out = nullptr, std::vector<double>* season_out = nullptr) const {
        const bool has_trend = spec.trend != Trend::None;
        const double phi = spec.trend == Trend::Damped ? p.phi : 1.0;
        double l = x0[0];
        double b = has_trend ? x0[1] : 0.0;
        const int m = spec.seasonal ? spec.period : 0;
        // Ring buffer of seasonal states; ring[(head + j) % m] = s_{t-1-j}.
        std::array<double, 512> small{};
        std::vector<double> big;
        double* ring = nullptr;
        if (m > 0) {
            if (m <= static_cast<int>(small.size())) {
                ring = small.data();
            } else {
                big.resize(m);
                ring = big.data();
            }
            const int off = has_trend ? 2 : 1;
            for (int j = 0; j < m; ++j) ring[j] = x0[off + j];
        }
        int head = 0;
        for (std::size_t t = 0; t < y.size(); ++t) {
            double s_old = 0.0;
            int idx = 0;
            if (m > 0) {
                idx = (head + m - 1) % m;  // s_{t-m}
                s_old = ring[idx];
            }
            const double yhat = l + phi * b + s_old;
            const double e = y[t] - yhat;
            errors[t] = e;
            const double l_new = l + phi * b + p.alpha * e;
            b = phi * b + p.beta * e;
            l = l_new;
            if (m > 0) {
                // s_t replaces s_{t-m}; it becomes the most recent entry.
                ring[idx] = s_old + p.gamma * e;
                head = idx;
            }
        }
        if (level_out) *level_out = l;
        if (slope_out) *slope_out = b;
        if (season_out && m > 0) {
            // season_out[k] = seasonal state used for step k+1 ahead = s_{T+k+1-m}
            season_out->assign(m, 0.0);
            for (int k = 0; k < m; ++k) {
                const int j = m - 1 - k;  // s_{T-j}, j = m-1-k → lag m-k
                (*season_out)[k] = ring[(head + j) % m];
            }
        }
    }
};

/// Maps free initial-state coordinates to the full state (seasonal states sum to zero).
inline Eigen::VectorXd expand_state(const Spec& spec, const Eigen::VectorXd& free) {
    const bool has_trend = spec.trend != Trend::None;
    const int off = has_trend ? 2 : 1;
    const int m = spec.seasonal ? spec.period : 0;
    Eigen::VectorXd x(off + m);
    x.head(off) = free.head(off);
    if (m > 0) {
        double sum = 0.0;
        for (int j = 0; j < m - 1; ++j) {
            x[off + j] = free[off + j];
            sum += free[off + j];
        }
        x[off + m - 1] = -sum;
    }
    return x;
}

struct Concentrated {
    double sse = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x0;
};

/// Profiles out the initial states: errors are affine in x0, so the optimal x0 is a least-squares solve.
inline Concentrated concentrate(std::span<const double> y, const Spec& spec, const Params& p) {
    const std::size_t n = y.size();
    const int k = spec.n_states();
    Filter f{spec, p};
    const int full = (spec.trend != Trend::None ? 2 : 1) + (spec.seasonal ? spec.period : 0);

    Eigen::VectorXd e0(static_cast<Eigen::Index>(n));
    {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(full);
        f.run(y, std::span<const double>(zero.data(), full), std::span<double>(e0.data(), n));
    }
    Eigen::MatrixXd U(static_cast<Eigen::Index>(n), k);
    std::vector<double> zeros(n, 0.0);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(k);
        unit[j] = 1.0;
        Eigen::VectorXd x = expand_state(spec, unit);
        Eigen::VectorXd col(static_cast<Eigen::Index>(n));
        f.run(zeros, std::span<const double>(x.data(), full), std::span<double>(col.data(), n));
        U.col(j) = col;
    }
    Concentrated out;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(U);
    qr.setThreshold(1e-12);
    Eigen::VectorXd free = -qr.solve(e0);
    if (!free.allFinite()) return out;
    out.x0 = expand_state(spec, free);
    out.sse = (e0 + U * free).squaredNorm();
    return out;
}

/// Forecastability of a seasonal additive model: every root of its characteristic polynomial
/// lies in the closed unit disc.
inline bool admissible(const Spec& spec, const Params& p) {
    if (!spec.seasonal) return true;
    const int m = spec.period;
    const double a = p.alpha, b = spec.trend != Trend::None ? p.beta : 0.0, g = p.gamma, phi = p.phi;
    // ascending coefficients of a monic polynomial of degree m + 1
    std::vector<double> c(static_cast<std::size_t>(m) + 2, a + b - a * phi);
    c[0] = phi * (1.0 - a - g);
    c[1] = a + b - a * phi + g - 1.0;
    c[static_cast<std::size_t>(m)] = a + b - phi;
    c[static_cast<std::size_t>(m) + 1] = 1.0;
    const int deg = m + 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[static_cast<std::size_t>(i)];
    const Eigen::VectorXcd roots = companion.eigenvalues();
    return roots.cwiseAbs().maxCoeff() <= 1.0 + 1e-10;
}

inline Params decode(const Spec& spec, const Eigen::VectorXd& z) {
    Params p;
    int i = 0;
    p.alpha = z[i++];
    if (spec.trend != Trend::None) p.beta = z[i++] * p.alpha;
    if (spec.seasonal) p.gamma = z[i++] * (1.0 - p.alpha);
    p.phi = spec.trend == Trend::Damped ? z[i++] : 1.0;
    return p;
}

} // namespace detail

/// Minimum observations for a fit whose information criterion is defined.
inline std::size_t min_length(const Spec& spec) {
    const std::size_t k = static_cast<std::size_t>(spec.n_states() + spec.n_smoothing()) + 1;
    std::size_t need = k + 2;
    if (spec.seasonal) need = std::max(need, static_cast<std::size_t>(2 * spec.period));
    return need;
}

/// Fits one additive-error model by bounded Nelder–Mead on the smoothing parameters,
/// with initial states profiled out by least squares. Seasonal parameters are restricted to
/// the forecastable region.
inline Fit fit(std::span<const double> y, const Spec& spec) {
    if (y.size() < min_length(spec)) {
        throw Error(ErrorKind::TooShort, "ETS(" + spec.name() + ") needs " + std::to_string(min_length(spec)) +
                                             " observations, got " + std::to_string(y.size()));
    }
    const int dim = spec.n_smoothing();
    Eigen::VectorXd lo(dim), hi(dim), z0(dim);
    int i = 0;
    lo[i] = 1e-4, hi[i] = 0.9999, z0[i++] = 0.3;
    if (spec.trend != Trend::None) lo[i] = 1e-4, hi[i] = 0.9999, z0[i++] = 0.2;
    if (spec.seasonal) lo[i] = 1e-4, hi[i] = 0.9999, z0[i++] = 0.2;
    if (spec.trend == Trend::Damped) lo[i] = 0.8, hi[i] = 0.98, z0[i++] = 0.95;

    auto objective = [&](const Eigen::VectorXd& z) {
        const Params p = detail::decode(spec, z);
        if (!detail::admissible(spec, p)) return std::numeric_limits<double>::infinity();
        return detail::concentrate(y, spec, p).sse;
    };
    optim::NelderMeadOptions opt;
    opt.max_evals = 400 * dim;
    opt.initial_step = 0.1;
    const auto res = optim::nelder_mead(objective, z0, lo, hi, opt);
    Fit out;
    out.spec = spec;
    out.params = detail::decode(spec, res.x);
    out.converged = res.converged;
    const auto conc = detail::concentrate(y, spec, out.params);
    if (!std::isfinite(conc.sse)) throw Error(ErrorKind::FitFailed, "ETS(" + spec.name() + ") objective not finite");
    out.sse = conc.sse;
    out.n = y.size();
    out.residuals.assign(y.size(), 0.0);
    detail::Filter f{spec, out.params};
    f.run(y, std::span<const double>(conc.x0.data(), conc.x0.size()), out.residuals, &out.level, &out.slope, &out.season);

    const double n = static_cast<double>(y.size());
    const double k = spec.n_states() + spec.n_smoothing() + 1;
    const double sigma2 = std::max(out.sse / n, 1e-300);
    const double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
    out.aicc = -2.0 * loglik + 2.0 * k + (n - k - 1.0 > 0.0 ? 2.0 * k * (k + 1.0) / (n - k - 1.0)
                                                            : std::numeric_limits<double>::infinity());
    return out;
}

/// AICc selection over ANN, AAN, AAdN and (when the period allows) ANA, AAA.
inline Fit auto_fit(std::span<const double> y, int period, bool allow_seasonal = true) {
    std::vector<Spec> candidates{{Trend::None, false, 1}, {Trend::Additive, false, 1}, {Trend::Damped, false, 1}};
    if (allow_seasonal && period > 1 && period <= 24) {
        candidates.push_back({Trend::None, true, period});
        candidates.push_back({Trend::Additive, true, period});
    }
    Fit best;
    bool have = false;
    for (const auto& spec : candidates) {
        if (y.size() < min_length(spec)) continue;
        try {
            Fit f = fit(y, spec);
            if (!have || f.aicc < best.aicc) {
                best = std::move(f);
                have = true;
            }
        } catch (const Error&) {
        }
    }
    if (!have) throw Error(ErrorKind::TooShort, "no exponential smoothing model could be fitted");
    return best;
}

} // namespace fformpp::ets
