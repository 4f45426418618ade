#pragma once

#include "fformpp/decompose.hpp"
#include "fformpp/error.hpp"
#include "fformpp/models/arima.hpp"
#include "fformpp/models/ets.hpp"
#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"
#include "fformpp/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fformpp {

/// Named feature values for one series, in canonical table order.
struct FeatureVector {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<std::string> flags;

    [[nodiscard]] std::size_t size() const { return values.size(); }

    [[nodiscard]] bool contains(std::string_view name) const {
        return std::find(names.begin(), names.end(), name) != names.end();
    }

    [[nodiscard]] double at(std::string_view name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw Error(ErrorKind::FeatureMismatch, "no feature named '" + std::string(name) + "'");
        return values[static_cast<std::size_t>(it - names.begin())];
    }

    void set(std::string_view name, double v) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw Error(ErrorKind::FeatureMismatch, "no feature named '" + std::string(name) + "'");
        values[static_cast<std::size_t>(it - names.begin())] = v;
    }
};

/// Seasonality feature name for one period of a class.
inline std::string seasonality_name(int period) {
    switch (period) {
    case 4: return "seasonality_q";
    case 12: return "seasonality_m";
    case 7:
    case 52:
    case 168: return "seasonality_w";
    case 24: return "seasonality_d";
    case 365: return "seasonality_y";
    default: return "seasonality_" + std::to_string(period);
    }
}

/// Feature names for a frequency class in table index order.
inline std::vector<std::string> feature_names(FrequencyClass fc) {
    using F = FrequencyClass;
    const bool yearly = fc == F::Yearly;
    const bool qm = fc == F::Quarterly || fc == F::Monthly;
    const bool weekly = fc == F::Weekly;
    std::vector<std::string> seas;
    for (int m : canonical_periods(fc)) {
        if (m > 1) seas.push_back(seasonality_name(m));
    }
    std::vector<std::string> out{"T", "trend"};
    for (const char* s : {"seasonality_q", "seasonality_m", "seasonality_w", "seasonality_d", "seasonality_y"}) {
        if (std::find(seas.begin(), seas.end(), s) != seas.end()) out.emplace_back(s);
    }
    for (const char* s : {"linearity", "curvature", "spikiness", "e_acf1", "stability", "lumpiness", "entropy", "hurst",
                          "nonlinearity"}) {
        out.emplace_back(s);
    }
    if (yearly || qm || weekly) {
        out.emplace_back("alpha");
        out.emplace_back("beta");
    }
    if (qm) {
        out.emplace_back("hwalpha");
        out.emplace_back("hwbeta");
        out.emplace_back("hwgamma");
    }
    if (yearly) {
        out.emplace_back("ur_pp");
        out.emplace_back("ur_kpss");
    }
    for (const char* s : {"y_acf1", "diff1y_acf1", "diff2y_acf1", "y_acf5", "diff1y_acf5", "diff2y_acf5"}) out.emplace_back(s);
    if (!yearly) {
        for (const char* s : {"sediff_acf1", "sediff_seacf1", "sediff_acf5", "seas_pacf"}) out.emplace_back(s);
    }
    if (yearly) out.emplace_back("lmres_acf1");
    for (const char* s : {"y_pacf5", "diff1y_pacf5", "diff2y_pacf5"}) out.emplace_back(s);
    return out;
}

struct StrengthFeatures {
    double trend = 0.0;
    std::vector<double> seasonality;  // one per decomposition period
    double spikiness = 0.0;
    double e_acf1 = 0.0;
};

/// Strength of trend and seasonality, spikiness and remainder autocorrelation.
inline StrengthFeatures strength_features(const DecompositionResult& d) {
    const std::size_t n = d.remainder.size();
    StrengthFeatures out;
    const double vr = n > 1 ? stats::variance(d.remainder) : 0.0;
    auto strength = [&](const std::vector<double>& comp) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = comp[i] + d.remainder[i];
        const double vs = n > 1 ? stats::variance(s) : 0.0;
        if (!(vs > 0.0)) return 0.0;
        return std::clamp(1.0 - vr / vs, 0.0, 1.0);
    };
    out.trend = strength(d.trend);
    for (const auto& s : d.seasonal) out.seasonality.push_back(strength(s));

    if (n >= 3) {
        const double mu = stats::mean(d.remainder);
        double ss = 0.0;
        for (double r : d.remainder) ss += (r - mu) * (r - mu);
        const double nn = static_cast<double>(n);
        std::vector<double> loo(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = d.remainder[i] - mu;
            loo[i] = std::max(0.0, ss - nn / (nn - 1.0) * dev * dev) / (nn - 2.0);
        }
        out.spikiness = stats::variance(loo);
    }
    out.e_acf1 = n > 1 ? stats::acf(d.remainder, 1)[1] : 0.0;
    return out;
}

struct AcfFeatures {
    double y_acf1 = 0, diff1y_acf1 = 0, diff2y_acf1 = 0;
    double y_acf5 = 0, diff1y_acf5 = 0, diff2y_acf5 = 0;
    double sediff_acf1 = 0, sediff_seacf1 = 0, sediff_acf5 = 0, seas_pacf = 0;
    double y_pacf5 = 0, diff1y_pacf5 = 0, diff2y_pacf5 = 0;
    double lmres_acf1 = 0;
};

namespace detail {

inline double sum_sq_lags(const std::vector<double>& r, std::size_t first, std::size_t last) {
    double s = 0.0;
    for (std::size_t k = first; k <= last && k < r.size(); ++k) s += r[k] * r[k];
    return s;
}

} // namespace detail

/// Autocorrelation and partial autocorrelation summaries. `m` is the shortest seasonal period.
inline AcfFeatures acf_pacf_suite(std::span<const double> y, int m) {
    const std::size_t n = y.size();
    if (n < 8) throw Error(ErrorKind::TooShort, "autocorrelation features need at least eight observations");
    if (m > 1 && n < 2 * static_cast<std::size_t>(m) + 1) {
        throw Error(ErrorKind::TooShort, "seasonal autocorrelation features need more than two cycles");
    }
    AcfFeatures f;
    const auto d1 = stats::diff(y, 1);
    const auto d2 = stats::diff(d1, 1);
    const auto r0 = stats::acf(y, 5), r1 = stats::acf(d1, 5), r2 = stats::acf(d2, 5);
    f.y_acf1 = r0[1];
    f.diff1y_acf1 = r1[1];
    f.diff2y_acf1 = r2[1];
    f.y_acf5 = detail::sum_sq_lags(r0, 1, 5);
    f.diff1y_acf5 = detail::sum_sq_lags(r1, 1, 5);
    f.diff2y_acf5 = detail::sum_sq_lags(r2, 1, 5);
    f.y_pacf5 = stats::sum_sq(stats::pacf(y, 5));
    f.diff1y_pacf5 = stats::sum_sq(stats::pacf(d1, 5));
    f.diff2y_pacf5 = stats::sum_sq(stats::pacf(d2, 5));
    if (m > 1) {
        const auto sd = stats::diff(y, m);
        const auto rs = stats::acf(sd, std::max(m, 5));
        f.sediff_acf1 = rs[1];
        f.sediff_seacf1 = rs[static_cast<std::size_t>(m)];
        f.sediff_acf5 = detail::sum_sq_lags(rs, 1, 5);
        f.seas_pacf = stats::pacf(y, m)[static_cast<std::size_t>(m) - 1];
    }
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 2);
    for (std::size_t t = 0; t < n; ++t) {
        X(static_cast<Eigen::Index>(t), 0) = 1.0;
        X(static_cast<Eigen::Index>(t), 1) = static_cast<double>(t + 1);
    }
    const auto lm = stats::ols(X, stats::to_eigen(y));
    f.lmres_acf1 = stats::acf(stats::to_std(lm.residuals), 1)[1];
    return f;
}

/// Variance of tile means and of tile variances over non-overlapping full tiles
/// of the standardised series.
inline std::pair<double, double> tiled_stats(std::span<const double> y, int width) {
    const std::size_t n = y.size();
    if (width < 2 || n < 2 * static_cast<std::size_t>(width)) {
        throw Error(ErrorKind::TooShort, "tiled statistics need two full tiles");
    }
    const auto z = stats::standardize(y);
    const std::size_t tiles = n / width;
    std::vector<double> means(tiles), vars(tiles);
    for (std::size_t k = 0; k < tiles; ++k) {
        std::span<const double> tile(z.data() + k * width, static_cast<std::size_t>(width));
        means[k] = stats::mean(tile);
        vars[k] = stats::variance(tile);
    }
    return {stats::variance(means), stats::variance(vars)};
}

/// Shannon entropy of a Burg autoregressive spectral density over 500 frequency bins,
/// normalised by log(500). Order chosen by AIC up to min(n - 1, 10 log10 n).
inline double spectral_entropy(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 16) throw Error(ErrorKind::TooShort, "spectral entropy needs at least sixteen observations");
    if (!(stats::variance(y) > 0.0)) return 1.0;
    const int max_order = std::min<int>(static_cast<int>(n) - 1, static_cast<int>(std::floor(10.0 * std::log10(static_cast<double>(n)))));
    const auto lev = stats::burg(y, max_order);
    int order = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(lev.innovation_variance.size()); ++k) {
        const double v = lev.innovation_variance[static_cast<std::size_t>(k)];
        if (!(v > 0.0)) break;
        const double aic = static_cast<double>(n) * std::log(v) + 2.0 * k;
        if (aic < best) {
            best = aic;
            order = k;
        }
    }
    const auto& phi = lev.coefs[static_cast<std::size_t>(order)];
    constexpr int bins = 500;
    std::vector<double> dens(bins);
    double total = 0.0;
    for (int j = 0; j < bins; ++j) {
        const double w = std::numbers::pi * (j + 0.5) / bins;
        double re = 1.0, im = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            re -= phi[k] * std::cos(w * static_cast<double>(k + 1));
            im += phi[k] * std::sin(w * static_cast<double>(k + 1));
        }
        dens[j] = 1.0 / std::max(re * re + im * im, 1e-300);
        total += dens[j];
    }
    double h = 0.0;
    for (double d : dens) {
        const double p = d / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(bins)), 1e-12, 1.0);
}

namespace detail {

/// Anis–Lloyd–Peters expected rescaled range of an iid block of size k.
inline double expected_rs(std::size_t k) {
    const double kk = static_cast<double>(k);
    double s = 0.0;
    for (std::size_t i = 1; i < k; ++i) s += std::sqrt((kk - static_cast<double>(i)) / static_cast<double>(i));
    const double front = (kk - 0.5) / kk;
    if (k <= 340) {
        return front * std::exp(std::lgamma((kk - 1.0) / 2.0) - std::lgamma(kk / 2.0)) / std::sqrt(std::numbers::pi) * s;
    }
    return front / std::sqrt(kk * std::numbers::pi / 2.0) * s;
}

inline double rescaled_range(std::span<const double> x) {
    const double mu = stats::mean(x);
    double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
    for (double v : x) {
        cum += v - mu;
        lo = std::min(lo, cum);
        hi = std::max(hi, cum);
        ss += (v - mu) * (v - mu);
    }
    const double s = std::sqrt(ss / static_cast<double>(x.size()));
    return s > 0.0 ? (hi - lo) / s : std::nan("");
}

} // namespace detail

/// Hurst exponent: 0.5 plus the log-log slope of the observed over the expected
/// (Anis–Lloyd–Peters) rescaled range across block sizes 4, 8, ..., n/2 and n.
inline double hurst_exponent(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 16) throw Error(ErrorKind::TooShort, "Hurst exponent needs at least sixteen observations");
    std::vector<std::size_t> sizes;
    for (std::size_t k = 4; k <= n / 2; k *= 2) sizes.push_back(k);
    sizes.push_back(n);
    std::vector<double> lx, ly;
    for (std::size_t k : sizes) {
        const std::size_t blocks = n / k;
        double acc = 0.0;
        int used = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const double rs = detail::rescaled_range(y.subspan(n - (blocks - b) * k, k));
            if (std::isfinite(rs) && rs > 0.0) {
                acc += rs;
                ++used;
            }
        }
        if (used == 0) continue;
        lx.push_back(std::log(static_cast<double>(k)));
        ly.push_back(std::log(acc / used) - std::log(detail::expected_rs(k)));
    }
    if (lx.size() < 2) return 0.5;
    const double mx = stats::mean(lx), my = stats::mean(ly);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return 0.5 + sxy / sxx;
}

/// Teräsvirta neural-network linearity test at lag 1, scaled as 10 X² / n.
inline double nonlinearity(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 10) throw Error(ErrorKind::TooShort, "nonlinearity test needs at least ten observations");
    const auto z = stats::standardize(y);
    const std::size_t ne = n - 1;
    Eigen::MatrixXd X0(static_cast<Eigen::Index>(ne), 2), X1(static_cast<Eigen::Index>(ne), 4);
    Eigen::VectorXd target(static_cast<Eigen::Index>(ne));
    for (std::size_t t = 1; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - 1);
        const double x = z[t - 1];
        X0(r, 0) = 1.0;
        X0(r, 1) = x;
        target[r] = z[t];
    }
    if (!(stats::variance(z) > 0.0)) return 0.0;
    double ssr0 = 0.0, ssr1 = 0.0;
    Eigen::VectorXd u;
    try {
        const auto f0 = stats::ols(X0, target);
        u = f0.residuals;
        ssr0 = f0.rss;
        X1.leftCols(2) = X0;
        for (Eigen::Index r = 0; r < X0.rows(); ++r) {
            X1(r, 2) = X0(r, 1) * X0(r, 1);
            X1(r, 3) = X0(r, 1) * X0(r, 1) * X0(r, 1);
        }
        ssr1 = stats::ols(X1, u).rss;
    } catch (const Error& e) {
        throw Error(ErrorKind::TooShort, std::string("nonlinearity regression is rank deficient: ") + e.what());
    }
    if (!(ssr0 > 0.0) || !(ssr1 > 0.0)) return 0.0;
    const double stat = static_cast<double>(ne) * std::log(ssr0 / ssr1);
    return 10.0 * stat / static_cast<double>(n);
}

/// Phillips–Perron Z-tau for a unit root in y_t = c + rho y_{t-1} + u_t.
inline double phillips_perron(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 8) throw Error(ErrorKind::TooShort, "Phillips–Perron test needs at least eight observations");
    const std::size_t ne = n - 1;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(ne), 2);
    Eigen::VectorXd target(static_cast<Eigen::Index>(ne));
    for (std::size_t t = 1; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - 1);
        X(r, 0) = 1.0;
        X(r, 1) = y[t - 1];
        target[r] = y[t];
    }
    stats::OlsFit fit;
    try {
        fit = stats::ols(X, target);
    } catch (const Error& e) {
        throw Error(ErrorKind::TooShort, std::string("Phillips–Perron regression is rank deficient: ") + e.what());
    }
    const double T = static_cast<double>(ne);
    const double s2 = fit.rss / (T - 2.0);
    if (!(s2 > 0.0)) return 0.0;
    const Eigen::MatrixXd XtXi = (X.transpose() * X).inverse();
    const double se_rho = std::sqrt(s2 * XtXi(1, 1));
    const double t_rho = (fit.coef[1] - 1.0) / se_rho;
    const auto& u = fit.residuals;
    const double gamma0 = u.squaredNorm() / T;
    const auto lags = static_cast<Eigen::Index>(std::floor(4.0 * std::pow(T / 100.0, 0.25)));
    double lambda2 = gamma0;
    for (Eigen::Index l = 1; l <= lags && l < u.size(); ++l) {
        double c = 0.0;
        for (Eigen::Index t = l; t < u.size(); ++t) c += u[t] * u[t - l];
        lambda2 += 2.0 * (1.0 - static_cast<double>(l) / (static_cast<double>(lags) + 1.0)) * c / T;
    }
    if (!(lambda2 > 0.0)) return t_rho;
    const double lambda = std::sqrt(lambda2);
    return std::sqrt(gamma0 / lambda2) * t_rho - 0.5 * (lambda2 - gamma0) / lambda * T * se_rho / std::sqrt(s2);
}

struct SmoothingFeatures {
    double alpha = 0.5, beta = 0.25;
    double hwalpha = 0.5, hwbeta = 0.25, hwgamma = 0.25;
    bool alpha_fallback = false;
    bool hw_fallback = false;
};

/// Linearity and curvature: coefficients of the trend on orthonormal degree-1 and degree-2 time polynomials.
inline std::pair<double, double> linearity_curvature(std::span<const double> trend) {
    const std::size_t n = trend.size();
    if (n < 3) throw Error(ErrorKind::TooShort, "curvature needs at least three observations");
    const Eigen::MatrixXd P = stats::orthonormal_poly(n, 2);
    const Eigen::VectorXd t = stats::to_eigen(trend);
    return {P.col(0).dot(t), P.col(1).dot(t)};
}

namespace detail {

/// Decomposition periods for the class that fit at least two cycles; longer periods that do not fit are dropped.
inline std::vector<int> usable_periods(FrequencyClass fc, std::size_t n, std::vector<std::string>* flags) {
    std::vector<int> out;
    for (int m : canonical_periods(fc)) {
        if (m <= 1) continue;
        if (n >= 2 * static_cast<std::size_t>(m)) {
            out.push_back(m);
        } else if (flags) {
            flags->push_back(seasonality_name(m) + ":period_dropped");
        }
    }
    return out;
}

} // namespace detail

/// Computes the class's feature vector from a training series. All features except T
/// are computed on the standardised series, so they are invariant to affine rescaling.
inline FeatureVector featurize(const TimeSeries& train, FrequencyClass fc) {
    validate(train);
    if (train.periods() != canonical_periods(fc)) {
        throw Error(ErrorKind::BadPeriod, "series '" + train.id() + "' periods do not match class " + std::string(to_string(fc)));
    }
    const std::size_t n = train.size();
    const auto z = stats::standardize(train.values());
    const int m = train.period();

    FeatureVector fv;
    fv.frequency_class = fc;
    fv.names = feature_names(fc);
    fv.values.assign(fv.names.size(), 0.0);

    auto guarded = [&](std::string_view name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            rethrow_with_context(e, "feature " + std::string(name));
        }
    };

    if (m > 1 && n < 2 * static_cast<std::size_t>(m) + 1) {
        throw Error(ErrorKind::TooShort, "feature extraction needs more than two cycles of period " + std::to_string(m));
    }
    fv.set("T", static_cast<double>(n));

    DecompositionResult dec;
    guarded("trend", [&] { dec = decompose(z, detail::usable_periods(fc, n, &fv.flags)); });
    const auto st = strength_features(dec);
    fv.set("trend", st.trend);
    for (std::size_t k = 0; k < dec.periods.size(); ++k) fv.set(seasonality_name(dec.periods[k]), st.seasonality[k]);
    fv.set("spikiness", st.spikiness);
    fv.set("e_acf1", st.e_acf1);

    guarded("linearity", [&] {
        const auto [lin, curv] = linearity_curvature(dec.trend);
        fv.set("linearity", lin);
        fv.set("curvature", curv);
    });
    guarded("stability", [&] {
        const auto [stab, lump] = tiled_stats(z, m > 1 ? m : 10);
        fv.set("stability", stab);
        fv.set("lumpiness", lump);
    });
    guarded("entropy", [&] { fv.set("entropy", spectral_entropy(z)); });
    guarded("hurst", [&] { fv.set("hurst", hurst_exponent(z)); });
    guarded("nonlinearity", [&] { fv.set("nonlinearity", nonlinearity(z)); });

    if (fv.contains("alpha")) {
        guarded("alpha", [&] {
            const auto f = ets::fit(z, ets::Spec{ets::Trend::Additive, false, 1});
            if (f.converged) {
                fv.set("alpha", f.params.alpha);
                fv.set("beta", f.params.beta);
            } else {
                fv.set("alpha", 0.5);
                fv.set("beta", 0.25);
                fv.flags.emplace_back("alpha:fit_failed");
            }
        });
    }
    if (fv.contains("hwalpha")) {
        guarded("hwalpha", [&] {
            const auto f = ets::fit(z, ets::Spec{ets::Trend::Additive, true, m});
            if (f.converged) {
                fv.set("hwalpha", f.params.alpha);
                fv.set("hwbeta", f.params.beta);
                fv.set("hwgamma", f.params.gamma);
            } else {
                fv.set("hwalpha", 0.5);
                fv.set("hwbeta", 0.25);
                fv.set("hwgamma", 0.25);
                fv.flags.emplace_back("hwalpha:fit_failed");
            }
        });
    }
    if (fv.contains("ur_pp")) {
        guarded("ur_pp", [&] { fv.set("ur_pp", phillips_perron(z)); });
        fv.set("ur_kpss", arima::kpss_statistic(z));
    }

    AcfFeatures af;
    guarded("y_acf1", [&] { af = acf_pacf_suite(z, m); });
    fv.set("y_acf1", af.y_acf1);
    fv.set("diff1y_acf1", af.diff1y_acf1);
    fv.set("diff2y_acf1", af.diff2y_acf1);
    fv.set("y_acf5", af.y_acf5);
    fv.set("diff1y_acf5", af.diff1y_acf5);
    fv.set("diff2y_acf5", af.diff2y_acf5);
    if (fv.contains("sediff_acf1")) {
        fv.set("sediff_acf1", af.sediff_acf1);
        fv.set("sediff_seacf1", af.sediff_seacf1);
        fv.set("sediff_acf5", af.sediff_acf5);
        fv.set("seas_pacf", af.seas_pacf);
    }
    if (fv.contains("lmres_acf1")) fv.set("lmres_acf1", af.lmres_acf1);
    fv.set("y_pacf5", af.y_pacf5);
    fv.set("diff1y_pacf5", af.diff1y_pacf5);
    fv.set("diff2y_pacf5", af.diff2y_pacf5);

    for (std::size_t i = 0; i < fv.values.size(); ++i) {
        if (!std::isfinite(fv.values[i])) throw Error(ErrorKind::NonFinite, "feature " + fv.names[i] + " is not finite");
    }
    return fv;
}

inline FeatureVector featurize(const TimeSeries& train) { return featurize(train, frequency_class_of(train.periods())); }

/// Feature matrix with one row per series, columns in table order.
struct FeatureMatrix {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::vector<std::string> names;
    std::vector<std::string> series_ids;
    Eigen::MatrixXd values;
};

inline FeatureMatrix to_feature_matrix(const std::vector<std::string>& ids, const std::vector<FeatureVector>& rows) {
    if (rows.empty()) throw Error(ErrorKind::EmptySet, "no feature vectors");
    if (ids.size() != rows.size()) throw Error(ErrorKind::LengthMismatch, "ids and feature vectors differ in count");
    FeatureMatrix fm;
    fm.frequency_class = rows.front().frequency_class;
    fm.names = rows.front().names;
    fm.series_ids = ids;
    fm.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fm.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].names != fm.names) throw Error(ErrorKind::FeatureMismatch, "feature schemas differ between rows");
        for (std::size_t j = 0; j < fm.names.size(); ++j) {
            fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
        }
    }
    return fm;
}

inline void write_feature_matrix_csv(std::ostream& out, const FeatureMatrix& fm) {
    out << "id";
    for (const auto& n : fm.names) out << ',' << n;
    out << '\n';
    for (Eigen::Index i = 0; i < fm.values.rows(); ++i) {
        out << fm.series_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < fm.values.cols(); ++j) out << ',' << format_double(fm.values(i, j));
        out << '\n';
    }
}

inline FeatureMatrix read_feature_matrix_csv(std::istream& in) {
    FeatureMatrix fm;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty feature matrix");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_fields(line);
    if (header.empty() || header[0] != "id") throw Error(ErrorKind::Format, "feature matrix header must start with 'id'");
    fm.names.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) throw Error(ErrorKind::Format, "feature matrix row has wrong width");
        fm.series_ids.push_back(f[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < f.size(); ++j) row.push_back(parse_double(f[j]));
        rows.push_back(std::move(row));
    }
    for (auto fc : kAllFrequencyClasses) {
        if (feature_names(fc) == fm.names) fm.frequency_class = fc;
    }
    fm.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(fm.names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return fm;
}

} // namespace fformpp
