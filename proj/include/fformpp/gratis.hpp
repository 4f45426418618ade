#pragma once

#include "fformpp/error.hpp"
#include "fformpp/models/arima.hpp"
#include "fformpp/rng.hpp"
#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace fformpp {

/// One autoregressive component of a mixture: non-seasonal AR coefficients theta, one seasonal
/// AR coefficient per period, differencing orders and innovation scale.
struct MarComponent {
    std::vector<double> theta;
    std::vector<double> seasonal_theta;  // one per period
    int d = 0;
    std::vector<int> seasonal_d;  // one per period
    double sigma = 1.0;

    friend bool operator==(const MarComponent&, const MarComponent&) = default;
};

struct MarSpec {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::vector<int> periods;
    std::size_t length = 0;
    std::vector<double> weights;
    std::vector<MarComponent> components;

    [[nodiscard]] std::size_t k() const { return components.size(); }

    friend bool operator==(const MarSpec&, const MarSpec&) = default;
};

struct MarOptions {
    int p_max = 2;            // non-seasonal AR lags per component
    int seasonal_p_max = 1;   // seasonal AR lags per component and period
    double coef_sd = 0.5;
    double sigma_lo = 1.0, sigma_hi = 5.0;
    double p_diff = 0.9, p_seasonal_diff = 0.4;
    double overflow = 1e12;
};

/// Length support of a class: [lo, hi] for the uniform classes; hourly is the two-point law {748, 1008}.
inline std::pair<std::size_t, std::size_t> length_support(FrequencyClass fc) {
    switch (fc) {
    case FrequencyClass::Yearly: return {19, 75};
    case FrequencyClass::Quarterly: return {24, 202};
    case FrequencyClass::Monthly: return {60, 660};
    case FrequencyClass::Weekly: return {93, 2610};
    case FrequencyClass::Daily: return {107, 9933};
    case FrequencyClass::Hourly: return {748, 1008};
    }
    return {1, 1};
}

inline std::size_t sample_length(FrequencyClass fc, Rng& rng) {
    if (fc == FrequencyClass::Hourly) {
        std::bernoulli_distribution short_series(0.408);
        return short_series(rng) ? 748 : 1008;
    }
    const auto [lo, hi] = length_support(fc);
    std::uniform_int_distribution<std::size_t> u(lo, hi);
    return u(rng);
}

namespace detail {

inline void draw_coefficients(MarComponent& c, std::size_t n_periods, const MarOptions& opt, Rng& rng) {
    std::normal_distribution<double> coef(0.0, opt.coef_sd);
    c.theta.resize(static_cast<std::size_t>(opt.p_max));
    for (auto& v : c.theta) v = coef(rng);
    c.seasonal_theta.assign(n_periods, 0.0);
    for (auto& v : c.seasonal_theta) v = opt.seasonal_p_max > 0 ? coef(rng) : 0.0;
}

} // namespace detail

/// Draws a mixture autoregressive generator for a frequency class.
inline MarSpec sample_mar_spec(FrequencyClass fc, Rng& rng, const MarOptions& opt = {}) {
    MarSpec s;
    s.frequency_class = fc;
    s.periods = canonical_periods(fc);
    std::vector<int> seasonal_periods;
    for (int m : s.periods)
        if (m > 1) seasonal_periods.push_back(m);

    std::uniform_int_distribution<int> kdist(1, 5);
    const int K = kdist(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s.weights.resize(static_cast<std::size_t>(K));
    double total = 0.0;
    for (auto& w : s.weights) total += (w = unit(rng));
    for (auto& w : s.weights) w /= total;

    std::bernoulli_distribution diff(opt.p_diff), sdiff(opt.p_seasonal_diff);
    std::uniform_real_distribution<double> sig(opt.sigma_lo, opt.sigma_hi);
    for (int k = 0; k < K; ++k) {
        MarComponent c;
        detail::draw_coefficients(c, seasonal_periods.size(), opt, rng);
        c.d = diff(rng) ? 1 : 0;
        c.seasonal_d.assign(seasonal_periods.size(), 0);
        for (auto& D : c.seasonal_d) D = sdiff(rng) ? 1 : 0;
        c.sigma = sig(rng);
        s.components.push_back(std::move(c));
    }
    s.length = sample_length(fc, rng);
    return s;
}

namespace detail {

/// Full lag polynomial of a component: y_t = sum_j c_j y_{t-j} + e_t, folding in the
/// differencing operators so that integration happens inside the recursion.
inline std::vector<double> component_lag_polynomial(const MarComponent& c, const std::vector<int>& seasonal_periods) {
    // Coefficients of the operator polynomial a(B) = 1 - sum_j c_j B^j, built by products.
    std::vector<double> a{1.0};
    auto multiply = [&](const std::vector<double>& b) {
        std::vector<double> out(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
        a = std::move(out);
    };
    std::vector<double> ar{1.0};
    for (double th : c.theta) ar.push_back(-th);
    multiply(ar);
    for (std::size_t k = 0; k < seasonal_periods.size(); ++k) {
        const int m = seasonal_periods[k];
        if (c.seasonal_theta[k] != 0.0) {
            std::vector<double> sar(static_cast<std::size_t>(m) + 1, 0.0);
            sar[0] = 1.0;
            sar[static_cast<std::size_t>(m)] = -c.seasonal_theta[k];
            multiply(sar);
        }
        for (int D = 0; D < c.seasonal_d[k]; ++D) {
            std::vector<double> sd(static_cast<std::size_t>(m) + 1, 0.0);
            sd[0] = 1.0;
            sd[static_cast<std::size_t>(m)] = -1.0;
            multiply(sd);
        }
    }
    for (int d = 0; d < c.d; ++d) multiply({1.0, -1.0});
    std::vector<double> lag(a.size() - 1);
    for (std::size_t j = 1; j < a.size(); ++j) lag[j - 1] = -a[j];
    return lag;
}

inline std::vector<double> run_mar(const MarSpec& spec, Rng& rng, const MarOptions& opt, bool& overflow) {
    std::vector<int> seasonal_periods;
    for (int m : spec.periods)
        if (m > 1) seasonal_periods.push_back(m);
    const int max_period = seasonal_periods.empty() ? 1 : seasonal_periods.back();
    const std::size_t burn = static_cast<std::size_t>(std::max(10 * opt.p_max, 5 * max_period));

    std::vector<std::vector<double>> lags;
    std::size_t max_lag = 0;
    for (const auto& c : spec.components) {
        lags.push_back(component_lag_polynomial(c, seasonal_periods));
        max_lag = std::max(max_lag, lags.back().size());
    }
    std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
    std::normal_distribution<double> z;
    const std::size_t total = max_lag + burn + spec.length;
    std::vector<double> y(total, 0.0);
    overflow = false;
    for (std::size_t t = max_lag; t < total; ++t) {
        const std::size_t k = pick(rng);
        const auto& c = lags[k];
        double v = spec.components[k].sigma * z(rng);
        for (std::size_t j = 0; j < c.size(); ++j) v += c[j] * y[t - 1 - j];
        if (!std::isfinite(v) || std::abs(v) > opt.overflow) {
            overflow = true;
            return {};
        }
        y[t] = v;
    }
    return std::vector<double>(y.end() - static_cast<std::ptrdiff_t>(spec.length), y.end());
}

} // namespace detail

/// Simulates one series from a mixture spec. An explosive draw re-draws every component's
/// coefficients once; a second overflow raises NumericalOverflow. `spec` receives the
/// coefficients actually used.
inline TimeSeries simulate(MarSpec& spec, Rng& rng, const std::string& id = "sim", const MarOptions& opt = {}) {
    if (spec.components.empty() || spec.weights.size() != spec.components.size() || spec.length == 0) {
        throw Error(ErrorKind::InvalidArgument, "invalid mixture specification");
    }
    std::size_t n_seasonal = 0;
    for (int m : spec.periods)
        if (m > 1) ++n_seasonal;
    bool overflow = false;
    auto y = detail::run_mar(spec, rng, opt, overflow);
    if (overflow) {
        for (auto& c : spec.components) detail::draw_coefficients(c, n_seasonal, opt, rng);
        y = detail::run_mar(spec, rng, opt, overflow);
        if (overflow) throw Error(ErrorKind::NumericalOverflow, "mixture simulation exceeded " + std::to_string(opt.overflow));
    }
    return TimeSeries(id, std::move(y), spec.periods);
}

inline TimeSeries simulate(const MarSpec& spec, Rng& rng, const std::string& id = "sim", const MarOptions& opt = {}) {
    MarSpec copy = spec;
    return simulate(copy, rng, id, opt);
}

struct SimulatedSeries {
    TimeSeries series;
    MarSpec spec;
    int attempts = 1;
};

/// Draws `n` independent series; series i uses the stream derived from (seed, i), so the
/// collection does not depend on generation order. A spec that overflows twice is replaced
/// by a fresh draw from the same stream, at most `max_attempts` times.
inline std::vector<SimulatedSeries> generate_reference_detailed(FrequencyClass fc, std::size_t n, std::uint64_t seed,
                                                                const MarOptions& opt = {}, int max_attempts = 20) {
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "reference size must be at least 1");
    std::vector<SimulatedSeries> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, std::string_view("gratis"), static_cast<std::uint64_t>(i));
        const std::string id = "sim-" + std::string(to_string(fc)) + "-" + std::to_string(i);
        for (int attempt = 1;; ++attempt) {
            MarSpec spec = sample_mar_spec(fc, rng, opt);
            try {
                auto s = simulate(spec, rng, id, opt);
                out.push_back({std::move(s), std::move(spec), attempt});
                break;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NumericalOverflow || attempt >= max_attempts) rethrow_with_context(e, id);
            }
        }
    }
    return out;
}

inline std::vector<TimeSeries> generate_reference(FrequencyClass fc, std::size_t n, std::uint64_t seed, const MarOptions& opt = {}) {
    std::vector<TimeSeries> out;
    for (auto& s : generate_reference_detailed(fc, n, seed, opt)) out.push_back(std::move(s.series));
    return out;
}

inline nlohmann::json to_json(const MarSpec& s) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : s.components) {
        comps.push_back({{"theta", c.theta}, {"seasonal_theta", c.seasonal_theta}, {"d", c.d}, {"seasonal_d", c.seasonal_d}, {"sigma", c.sigma}});
    }
    return {{"frequency_class", std::string(to_string(s.frequency_class))},
            {"periods", s.periods},
            {"length", s.length},
            {"weights", s.weights},
            {"components", comps}};
}

inline MarSpec mar_spec_from_json(const nlohmann::json& j) {
    try {
        MarSpec s;
        s.frequency_class = parse_frequency_class(j.at("frequency_class").get<std::string>());
        s.periods = j.at("periods").get<std::vector<int>>();
        s.length = j.at("length").get<std::size_t>();
        s.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& c : j.at("components")) {
            MarComponent mc;
            mc.theta = c.at("theta").get<std::vector<double>>();
            mc.seasonal_theta = c.at("seasonal_theta").get<std::vector<double>>();
            mc.d = c.at("d").get<int>();
            mc.seasonal_d = c.at("seasonal_d").get<std::vector<int>>();
            mc.sigma = c.at("sigma").get<double>();
            s.components.push_back(std::move(mc));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad mixture spec: ") + e.what());
    }
}

/// Seasonal ARIMA generator used as a stand-in for observed data: random orders
/// p, q in {0,1,2}, P, Q in {0,1}, d in {0,1}, D in {0,1} (seasonal classes), stationary and
/// invertible coefficients from reflection coefficients in (-0.9, 0.9), optional drift,
/// a positive level, and lengths from the class's length law.
inline std::vector<TimeSeries> simulate_arima_family(FrequencyClass fc, std::size_t n, std::uint64_t seed) {
    std::vector<TimeSeries> out;
    out.reserve(n);
    const auto periods = canonical_periods(fc);
    const int m = periods.front();
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = make_rng(seed, std::string_view("arima-family"), static_cast<std::uint64_t>(i));
        std::uniform_int_distribution<int> ord(0, 2), bin(0, 1);
        std::uniform_real_distribution<double> refl(-0.9, 0.9), unit(0.0, 1.0);
        std::normal_distribution<double> z;
        const int p = ord(rng), q = ord(rng), d = bin(rng);
        const bool seasonal = m > 1;
        const int P = seasonal ? bin(rng) : 0, Q = seasonal ? bin(rng) : 0, D = seasonal ? bin(rng) : 0;
        auto draw = [&](int k) {
            std::vector<double> r(static_cast<std::size_t>(k));
            for (auto& v : r) v = refl(rng);
            return arima::from_reflection(r);
        };
        const auto phi = draw(p), sphi = draw(P);
        auto theta = draw(q), stheta = draw(Q);
        const auto ar = arima::expand_ar(phi, sphi, m);
        const auto ma = arima::expand_ma(theta, stheta, m);
        const double drift = (d + D > 0 && unit(rng) < 0.5) ? 0.2 * z(rng) : 0.0;
        const std::size_t len = sample_length(fc, rng);
        const std::size_t burn = 100 + static_cast<std::size_t>(3 * m);
        std::vector<double> w(len + burn, 0.0), e(len + burn, 0.0);
        for (std::size_t t = 0; t < w.size(); ++t) {
            e[t] = z(rng);
            double v = e[t] + drift;
            for (std::size_t j = 0; j < ar.size() && j < t; ++j) v += ar[j] * w[t - 1 - j];
            for (std::size_t j = 0; j < ma.size() && j < t; ++j) v += ma[j] * e[t - 1 - j];
            w[t] = v;
        }
        std::vector<double> y(w.begin() + static_cast<std::ptrdiff_t>(burn), w.end());
        for (int k = 0; k < D; ++k) {
            for (std::size_t t = static_cast<std::size_t>(m); t < y.size(); ++t) y[t] += y[t - m];
        }
        for (int k = 0; k < d; ++k) {
            for (std::size_t t = 1; t < y.size(); ++t) y[t] += y[t - 1];
        }
        double lo = *std::min_element(y.begin(), y.end());
        const double shift = 10.0 * (1.0 + stats::sd(y)) - std::min(lo, 0.0);
        for (auto& v : y) v += shift;
        out.emplace_back("arima-" + std::string(to_string(fc)) + "-" + std::to_string(i), std::move(y), periods);
    }
    return out;
}

} // namespace fformpp
