#pragma once

#include "fformpp/decompose.hpp"
#include "fformpp/error.hpp"
#include "fformpp/optim.hpp"
#include "fformpp/stats.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace fformpp::arima {

struct Order {
    int p = 0, d = 0, q = 0;
    int P = 0, D = 0, Q = 0;
    int period = 1;
    bool constant = false;

    [[nodiscard]] std::string name() const {
        std::string s = "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
        if (period > 1 && (P || D || Q)) {
            s += "(" + std::to_string(P) + "," + std::to_string(D) + "," + std::to_string(Q) + ")[" +
                 std::to_string(period) + "]";
        }
        if (constant) s += (d + D == 0 ? " with mean" : " with drift");
        return s;
    }
    [[nodiscard]] int n_coef() const { return p + q + P + Q + (constant ? 1 : 0); }
};

/// Reflection coefficients (PACF) to polynomial coefficients via the Levinson step-up.
/// |r| < 1 for every entry guarantees all roots lie outside the unit circle.
inline std::vector<double> from_reflection(std::span<const double> r) {
    std::vector<double> phi;
    for (std::size_t k = 0; k < r.size(); ++k) {
        std::vector<double> next(k + 1);
        for (std::size_t j = 0; j < k; ++j) next[j] = phi[j] - r[k] * phi[k - 1 - j];
        next[k] = r[k];
        phi = std::move(next);
    }
    return phi;
}

/// Smallest modulus among roots of 1 - c_1 z - ... - c_k z^k (infinity for k = 0).
inline double min_root_modulus(std::span<const double> c) {
    std::size_t k = c.size();
    while (k > 0 && c[k - 1] == 0.0) --k;
    if (k == 0) return std::numeric_limits<double>::infinity();
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) companion(0, static_cast<Eigen::Index>(j)) = c[j];
    for (std::size_t j = 1; j < k; ++j) companion(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j - 1)) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    double max_inv = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) max_inv = std::max(max_inv, std::abs(es.eigenvalues()[i]));
    return max_inv > 0.0 ? 1.0 / max_inv : std::numeric_limits<double>::infinity();
}

/// Multiplies a(B) = 1 - sum a_i B^i by A(B^m) = 1 - sum A_j B^{jm}; returns expanded lag coefficients.
inline std::vector<double> expand_ar(std::span<const double> a, std::span<const double> A, int m) {
    const std::size_t len = a.size() + A.size() * static_cast<std::size_t>(m);
    std::vector<double> poly(len + 1, 0.0);  // polynomial in B: 1 - ...
    std::vector<double> pa(a.size() + 1, 0.0), pA(A.size() * m + 1, 0.0);
    pa[0] = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) pa[i + 1] = -a[i];
    pA[0] = 1.0;
    for (std::size_t j = 0; j < A.size(); ++j) pA[(j + 1) * m] = -A[j];
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pA.size(); ++j) poly[i + j] += pa[i] * pA[j];
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = -poly[i + 1];
    return out;
}

/// Same for MA polynomials written as 1 + sum b_i B^i.
inline std::vector<double> expand_ma(std::span<const double> b, std::span<const double> B, int m) {
    std::vector<double> nb(b.begin(), b.end()), nB(B.begin(), B.end());
    for (auto& v : nb) v = -v;
    for (auto& v : nB) v = -v;
    auto out = expand_ar(nb, nB, m);
    for (auto& v : out) v = -v;
    return out;
}

/// Stack of successively differenced series, so forecasts can be integrated back.
struct DiffStack {
    std::vector<std::vector<double>> levels;  // levels[0] = original
    std::vector<int> lags;                    // lags[k] produced levels[k+1] from levels[k]

    static DiffStack build(std::span<const double> y, int d, int D, int m) {
        DiffStack s;
        s.levels.emplace_back(y.begin(), y.end());
        for (int i = 0; i < D; ++i) {
            s.levels.push_back(stats::diff(s.levels.back(), m));
            s.lags.push_back(m);
        }
        for (int i = 0; i < d; ++i) {
            s.levels.push_back(stats::diff(s.levels.back(), 1));
            s.lags.push_back(1);
        }
        return s;
    }

    [[nodiscard]] const std::vector<double>& top() const { return levels.back(); }

    [[nodiscard]] std::vector<double> integrate(std::span<const double> top_forecast) const {
        std::vector<double> fc(top_forecast.begin(), top_forecast.end());
        for (int k = static_cast<int>(lags.size()) - 1; k >= 0; --k) {
            std::vector<double> ext = levels[k];
            const int lag = lags[k];
            for (double w : fc) ext.push_back(w + ext[ext.size() - lag]);
            fc.assign(ext.end() - static_cast<std::ptrdiff_t>(fc.size()), ext.end());
        }
        return fc;
    }
};

struct Fit {
    Order order;
    std::vector<double> ar, ma;  // expanded lag polynomials
    std::vector<double> phi, theta, sphi, stheta;
    double mean = 0.0;
    double sigma2 = 0.0;
    double aicc = std::numeric_limits<double>::infinity();
    std::size_t n_eff = 0;
    DiffStack stack;
    std::vector<double> residuals;  // aligned with stack.top()

    [[nodiscard]] std::vector<double> forecast(int horizon) const {
        const auto& w = stack.top();
        std::vector<double> wt(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) wt[i] = w[i] - mean;
        std::vector<double> e = residuals;
        for (int h = 0; h < horizon; ++h) {
            const std::size_t t = wt.size();
            double v = 0.0;
            for (std::size_t i = 0; i < ar.size(); ++i)
                if (t >= i + 1) v += ar[i] * wt[t - 1 - i];
            for (std::size_t j = 0; j < ma.size(); ++j)
                if (t >= j + 1) v += ma[j] * e[t - 1 - j];
            wt.push_back(v);
            e.push_back(0.0);
        }
        std::vector<double> top(wt.end() - horizon, wt.end());
        for (auto& v : top) v += mean;
        return stack.integrate(top);
    }
};

namespace detail {

struct Unpacked {
    std::vector<double> phi, theta, sphi, stheta;
    double mean = 0.0;
};

inline Unpacked unpack(const Order& o, const Eigen::VectorXd& x) {
    Unpacked u;
    Eigen::Index i = 0;
    auto take = [&](int k, bool negate) {
        std::vector<double> r(k);
        for (int j = 0; j < k; ++j) r[j] = std::tanh(x[i++]);
        auto c = from_reflection(r);
        if (negate)
            for (auto& v : c) v = -v;
        return c;
    };
    u.phi = take(o.p, false);
    u.theta = take(o.q, true);
    u.sphi = take(o.P, false);
    u.stheta = take(o.Q, true);
    if (o.constant) u.mean = x[i++];
    return u;
}

/// Conditional-sum-of-squares residuals on the differenced series, reported from `start`.
inline void css_residuals(std::span<const double> w, const std::vector<double>& ar, const std::vector<double>& ma,
                          double mean, std::size_t cond, std::vector<double>& e) {
    const std::size_t n = w.size();
    e.assign(n, 0.0);
    for (std::size_t t = cond; t < n; ++t) {
        double v = w[t] - mean;
        for (std::size_t i = 0; i < ar.size(); ++i) v -= ar[i] * (w[t - 1 - i] - mean);
        for (std::size_t j = 0; j < ma.size() && j < t; ++j) v -= ma[j] * e[t - 1 - j];
        e[t] = v;
    }
}

} // namespace detail

/// Fits one order by conditional sum of squares. `cond` is the first residual used in the
/// objective; it must be at least p + P*m so that information criteria are comparable.
inline Fit fit(std::span<const double> y, const Order& o, std::size_t cond) {
    Fit f;
    f.order = o;
    f.stack = DiffStack::build(y, o.d, o.D, o.period);
    const auto& w = f.stack.top();
    const std::size_t own = static_cast<std::size_t>(o.p + o.P * o.period);
    cond = std::max(cond, own);
    const int k = o.n_coef();
    if (w.size() <= cond + static_cast<std::size_t>(k) + 2) {
        throw Error(ErrorKind::TooShort, o.name() + " has too few observations");
    }
    const std::size_t n_eff = w.size() - cond;

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(k);
    if (o.constant) x0[k - 1] = stats::mean(w);

    std::vector<double> e;
    auto resid = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const auto u = detail::unpack(o, x);
        const auto ar = expand_ar(u.phi, u.sphi, o.period);
        const auto ma = expand_ma(u.theta, u.stheta, o.period);
        detail::css_residuals(w, ar, ma, u.mean, own, e);
        return Eigen::Map<const Eigen::VectorXd>(e.data() + cond, static_cast<Eigen::Index>(n_eff));
    };

    Eigen::VectorXd x = x0;
    if (k > 0) {
        auto res = optim::levenberg_marquardt(resid, x0, 60, 1e-9);
        if (res.x.size() == k) x = res.x;
    }
    const auto u = detail::unpack(o, x);
    f.phi = u.phi;
    f.theta = u.theta;
    f.sphi = u.sphi;
    f.stheta = u.stheta;
    f.mean = u.mean;
    f.ar = expand_ar(u.phi, u.sphi, o.period);
    f.ma = expand_ma(u.theta, u.stheta, o.period);
    detail::css_residuals(w, f.ar, f.ma, f.mean, own, f.residuals);
    double sse = 0.0;
    for (std::size_t t = cond; t < w.size(); ++t) sse += f.residuals[t] * f.residuals[t];
    f.n_eff = n_eff;
    const double n = static_cast<double>(n_eff);
    f.sigma2 = sse / n;
    if (!std::isfinite(f.sigma2)) throw Error(ErrorKind::FitFailed, o.name() + " produced non-finite residuals");
    const double kk = k + 1.0;
    const double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * std::max(f.sigma2, 1e-300)) + 1.0);
    f.aicc = -2.0 * loglik + 2.0 * kk +
             (n - kk - 1.0 > 0.0 ? 2.0 * kk * (kk + 1.0) / (n - kk - 1.0) : std::numeric_limits<double>::infinity());
    // Roots too close to the unit circle make the model unusable for forecasting.
    if (min_root_modulus(f.ar) < 1.01 || min_root_modulus([&] {
            auto c = f.ma;
            for (auto& v : c) v = -v;
            return c;
        }()) < 1.01) {
        f.aicc = std::numeric_limits<double>::infinity();
    }
    return f;
}

/// KPSS level-stationarity statistic with Bartlett window floor(4 (n/100)^0.25).
inline double kpss_statistic(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 3) return 0.0;
    const double mu = stats::mean(y);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = y[i] - mu;
    double s = 0.0, eta = 0.0;
    for (double v : e) {
        s += v;
        eta += s * s;
    }
    const auto lags = static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    double s2 = 0.0;
    for (double v : e) s2 += v * v;
    for (std::size_t l = 1; l <= lags && l < n; ++l) {
        double c = 0.0;
        for (std::size_t t = l; t < n; ++t) c += e[t] * e[t - l];
        s2 += 2.0 * (1.0 - static_cast<double>(l) / (lags + 1.0)) * c;
    }
    s2 /= static_cast<double>(n);
    if (!(s2 > 0.0)) return 0.0;
    return eta / (static_cast<double>(n) * static_cast<double>(n) * s2);
}

/// Number of first differences (0..max_d) until KPSS no longer rejects at 5%.
inline int ndiffs(std::span<const double> y, int max_d = 2) {
    std::vector<double> x(y.begin(), y.end());
    int d = 0;
    while (d < max_d && x.size() > 4) {
        if (stats::variance(x) <= 0.0) break;
        if (kpss_statistic(x) <= 0.463) break;
        x = stats::diff(x, 1);
        ++d;
    }
    return d;
}

/// Seasonal differencing when the STL seasonal strength exceeds 0.64.
inline int nsdiffs(std::span<const double> y, int m) {
    if (m <= 1 || y.size() < 2 * static_cast<std::size_t>(m)) return 0;
    if (stats::variance(y) <= 0.0) return 0;
    const auto dec = stl(y, m);
    const double vr = stats::variance(dec.remainder);
    std::vector<double> sr(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sr[i] = dec.seasonal[0][i] + dec.remainder[i];
    const double vsr = stats::variance(sr);
    const double strength = vsr > 0.0 ? std::clamp(1.0 - vr / vsr, 0.0, 1.0) : 0.0;
    return strength > 0.64 ? 1 : 0;
}

struct SearchOptions {
    int max_p = 3, max_q = 3, max_P = 1, max_Q = 1;
    int max_models = 94;
    bool seasonal = true;
};

/// Stepwise order search (Hyndman–Khandakar style) with AICc selection.
inline Fit auto_arima(std::span<const double> y, int period, const SearchOptions& opt = {}) {
    if (y.size() < 4) throw Error(ErrorKind::TooShort, "auto ARIMA needs at least four observations");
    const int m = (opt.seasonal && period > 1) ? period : 1;
    const int D = m > 1 ? nsdiffs(y, m) : 0;
    std::vector<double> ys(y.begin(), y.end());
    if (D) ys = stats::diff(ys, m);
    const int d = ndiffs(ys);
    const std::size_t nw = y.size() - static_cast<std::size_t>(d) - static_cast<std::size_t>(D * m);

    // Shrink the search space for short series so the conditioning window leaves data to fit.
    SearchOptions o = opt;
    auto cap = [&](int v, std::size_t limit) { return std::max(0, std::min<int>(v, static_cast<int>(limit))); };
    o.max_p = cap(o.max_p, nw / 5);
    o.max_q = cap(o.max_q, nw / 5);
    const bool use_seasonal = m > 1 && nw >= static_cast<std::size_t>(3 * m);
    o.max_P = use_seasonal ? o.max_P : 0;
    o.max_Q = use_seasonal ? o.max_Q : 0;
    const std::size_t cond = static_cast<std::size_t>(o.max_p + o.max_P * m);
    const bool allow_const = d + D <= 1;

    std::map<std::tuple<int, int, int, int, bool>, double> visited;
    Fit best;
    bool have = false;
    auto consider = [&](int p, int q, int P, int Q, bool c) -> bool {
        if (p < 0 || q < 0 || P < 0 || Q < 0 || p > o.max_p || q > o.max_q || P > o.max_P || Q > o.max_Q) return false;
        if (c && !allow_const) return false;
        auto key = std::make_tuple(p, q, P, Q, c);
        if (visited.count(key) || static_cast<int>(visited.size()) >= o.max_models) return false;
        Order ord{p, d, q, P, D, Q, m, c};
        double ic = std::numeric_limits<double>::infinity();
        try {
            Fit f = fit(y, ord, cond);
            ic = f.aicc;
            if (std::isfinite(ic) && (!have || ic < best.aicc - 1e-12)) {
                best = std::move(f);
                have = true;
                visited[key] = ic;
                return true;
            }
        } catch (const Error&) {
        }
        visited[key] = ic;
        return false;
    };

    const bool c0 = allow_const;
    if (m > 1) {
        consider(2, 2, 1, 1, c0);
        consider(0, 0, 0, 0, c0);
        consider(1, 0, 1, 0, c0);
        consider(0, 1, 0, 1, c0);
    } else {
        consider(2, 2, 0, 0, c0);
        consider(0, 0, 0, 0, c0);
        consider(1, 0, 0, 0, c0);
        consider(0, 1, 0, 0, c0);
    }
    if (c0) consider(0, 0, 0, 0, false);
    if (!have) {
        // Fall back to the smallest admissible model.
        Order ord{0, d, 0, 0, D, 0, m, false};
        Fit f = fit(y, ord, cond);
        f.aicc = std::numeric_limits<double>::max();
        return f;
    }

    bool moved = true;
    while (moved && static_cast<int>(visited.size()) < o.max_models) {
        moved = false;
        const Order c = best.order;
        const int p = c.p, q = c.q, P = c.P, Q = c.Q;
        const bool k = c.constant;
        const std::vector<std::tuple<int, int, int, int, bool>> neighbours{
            {p, q, P - 1, Q, k},     {p, q, P + 1, Q, k},     {p, q, P, Q - 1, k},     {p, q, P, Q + 1, k},
            {p, q, P - 1, Q - 1, k}, {p, q, P + 1, Q + 1, k}, {p - 1, q, P, Q, k},     {p + 1, q, P, Q, k},
            {p, q - 1, P, Q, k},     {p, q + 1, P, Q, k},     {p - 1, q - 1, P, Q, k}, {p + 1, q + 1, P, Q, k},
            {p - 1, q + 1, P, Q, k}, {p + 1, q - 1, P, Q, k}, {p, q, P, Q, !k}};
        for (const auto& [a, b, cc, dd, ee] : neighbours) {
            if (consider(a, b, cc, dd, ee)) {
                moved = true;
                break;
            }
        }
    }
    return best;
}

} // namespace fformpp::arima
