#pragma once

#include "fformpp/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace fformpp::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample variance with denominator n-1 (0 for fewer than two points).
inline double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return ss / static_cast<double>(x.size() - 1);
}

inline double sd(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Zero-mean unit-variance copy; constant input maps to all zeros.
inline std::vector<double> standardize(std::span<const double> x) {
    const double mu = mean(x);
    const double s = sd(x);
    std::vector<double> out(x.size(), 0.0);
    if (!(s > 0.0)) return out;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / s;
    return out;
}

inline std::vector<double> diff(std::span<const double> x, int lag = 1) {
    std::vector<double> out;
    if (x.size() <= static_cast<std::size_t>(lag)) return out;
    out.reserve(x.size() - lag);
    for (std::size_t i = lag; i < x.size(); ++i) out.push_back(x[i] - x[i - lag]);
    return out;
}

/// Sample autocorrelations r_0..r_maxlag with denominator n (r_0 = 1).
/// A constant series yields zeros beyond lag 0.
inline std::vector<double> acf(std::span<const double> x, int maxlag) {
    const std::size_t n = x.size();
    std::vector<double> r(static_cast<std::size_t>(maxlag) + 1, 0.0);
    r[0] = 1.0;
    if (n == 0) return r;
    const double mu = mean(x);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mu) * (v - mu);
    if (!(c0 > 0.0)) return r;
    for (int k = 1; k <= maxlag && static_cast<std::size_t>(k) < n; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t) ck += (x[t] - mu) * (x[t - k] - mu);
        r[k] = ck / c0;
    }
    return r;
}

/// Result of the Durbin–Levinson recursion on an autocorrelation sequence.
struct LevinsonResult {
    std::vector<double> pacf;                  // pacf[k-1] is lag k
    std::vector<std::vector<double>> coefs;    // coefs[k] = AR(k) Yule–Walker coefficients
    std::vector<double> innovation_variance;   // relative to r_0, index k = order
};

inline LevinsonResult durbin_levinson(std::span<const double> r, int maxlag) {
    LevinsonResult out;
    out.coefs.push_back({});
    out.innovation_variance.push_back(1.0);
    std::vector<double> phi;
    double v = 1.0;
    for (int k = 1; k <= maxlag; ++k) {
        double num = r[k];
        for (int j = 1; j < k; ++j) num -= phi[j - 1] * r[k - j];
        const double a = v > 0.0 ? num / v : 0.0;
        std::vector<double> next(k);
        for (int j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - a * phi[k - j - 1];
        next[k - 1] = a;
        phi = std::move(next);
        v *= (1.0 - a * a);
        out.pacf.push_back(a);
        out.coefs.push_back(phi);
        out.innovation_variance.push_back(v);
    }
    return out;
}

/// Burg estimates of AR(0..maxorder) on the demeaned series; innovation variances are absolute.
inline LevinsonResult burg(std::span<const double> x, int maxorder) {
    const std::size_t n = x.size();
    const double mu = mean(x);
    std::vector<double> f(n), b(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = b[i] = x[i] - mu;
    double e = 0.0;
    for (double v : f) e += v * v;
    e /= static_cast<double>(n);
    LevinsonResult out;
    out.coefs.push_back({});
    out.innovation_variance.push_back(e);
    std::vector<double> a;
    for (int k = 1; k <= maxorder && static_cast<std::size_t>(k) < n; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t t = k; t < n; ++t) {
            num += f[t] * b[t - 1];
            den += f[t] * f[t] + b[t - 1] * b[t - 1];
        }
        const double r = den > 0.0 ? 2.0 * num / den : 0.0;
        std::vector<double> next(k);
        for (int j = 0; j < k - 1; ++j) next[j] = a[j] - r * a[k - 2 - j];
        next[k - 1] = r;
        a = std::move(next);
        for (std::size_t t = n - 1; t >= static_cast<std::size_t>(k); --t) {
            const double ft = f[t];
            f[t] = ft - r * b[t - 1];
            b[t] = b[t - 1] - r * ft;
        }
        e *= 1.0 - r * r;
        out.pacf.push_back(r);
        out.coefs.push_back(a);
        out.innovation_variance.push_back(e);
    }
    return out;
}

inline std::vector<double> pacf(std::span<const double> x, int maxlag) {
    const auto r = acf(x, maxlag);
    return durbin_levinson(r, maxlag).pacf;
}

inline double sum_sq(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

inline Eigen::VectorXd to_eigen(std::span<const double> x) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
    return v;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd residuals;
    double rss = 0.0;
};

/// Ordinary least squares via column-pivoted QR; rank deficiency is an error.
inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() < X.cols()) throw Error(ErrorKind::SingularDesign, "fewer rows than regressors");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw Error(ErrorKind::SingularDesign, "design matrix is rank deficient");
    OlsFit fit;
    fit.coef = qr.solve(y);
    fit.residuals = y - X * fit.coef;
    fit.rss = fit.residuals.squaredNorm();
    return fit;
}

/// Orthonormal polynomial basis (degrees 1..degree) on t = 1..n, like R's poly().
inline Eigen::MatrixXd orthonormal_poly(std::size_t n, int degree) {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd raw(N, degree + 1);
    const double tbar = (static_cast<double>(n) + 1.0) / 2.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        double t = static_cast<double>(i + 1) - tbar;
        double p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            raw(i, d) = p;
            p *= t;
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N, degree + 1);
    Eigen::MatrixXd R = qr.matrixQR().topRows(degree + 1).triangularView<Eigen::Upper>();
    // Sign convention: positive leading coefficient for each degree.
    for (int d = 0; d <= degree; ++d) {
        if (R(d, d) < 0) Q.col(d) *= -1.0;
    }
    return Q.rightCols(degree);
}

inline double median(std::vector<double> x) {
    if (x.empty()) return 0.0;
    const std::size_t n = x.size();
    std::sort(x.begin(), x.end());
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double quantile(std::vector<double> x, double p) {
    if (x.empty()) return 0.0;
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

} // namespace fformpp::stats
