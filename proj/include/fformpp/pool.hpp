#pragma once

#include "fformpp/decompose.hpp"
#include "fformpp/error.hpp"
#include "fformpp/models/arima.hpp"
#include "fformpp/models/ets.hpp"
#include "fformpp/models/nnetar.hpp"
#include "fformpp/models/simple.hpp"
#include "fformpp/models/tbats.hpp"
#include "fformpp/rng.hpp"
#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"
#include "fformpp/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace fformpp {

/// Candidate models, declared in the canonical table order (also the ranking tie-break order).
enum class ModelId { Wn, AutoArima, Ets, Rw, Rwd, Theta, Stlar, Snaive, Tbats, Nn, MstlEts, MstlArima };

inline constexpr std::array<ModelId, 12> kAllModels{ModelId::Wn,    ModelId::AutoArima, ModelId::Ets,    ModelId::Rw,
                                                    ModelId::Rwd,   ModelId::Theta,     ModelId::Stlar,  ModelId::Snaive,
                                                    ModelId::Tbats, ModelId::Nn,        ModelId::MstlEts, ModelId::MstlArima};

inline std::string_view to_string(ModelId id) {
    switch (id) {
    case ModelId::Wn: return "wn";
    case ModelId::AutoArima: return "auto.arima";
    case ModelId::Ets: return "ets";
    case ModelId::Rw: return "rw";
    case ModelId::Rwd: return "rwd";
    case ModelId::Theta: return "theta";
    case ModelId::Stlar: return "stlar";
    case ModelId::Snaive: return "snaive";
    case ModelId::Tbats: return "tbats";
    case ModelId::Nn: return "nn";
    case ModelId::MstlEts: return "mstlets";
    case ModelId::MstlArima: return "mstlarima";
    }
    return "unknown";
}

inline ModelId parse_model_id(std::string_view name) {
    for (auto id : kAllModels) {
        if (to_string(id) == name) return id;
    }
    throw Error(ErrorKind::Format, "unknown model id '" + std::string(name) + "'");
}

inline int table_rank(ModelId id) { return static_cast<int>(id); }

inline bool is_available(ModelId id, FrequencyClass fc) {
    using F = FrequencyClass;
    const bool yearly = fc == F::Yearly;
    const bool qm = fc == F::Quarterly || fc == F::Monthly;
    const bool weekly = fc == F::Weekly;
    const bool dh = fc == F::Daily || fc == F::Hourly;
    switch (id) {
    case ModelId::Wn:
    case ModelId::Rw:
    case ModelId::Rwd:
    case ModelId::Theta:
    case ModelId::Nn: return true;
    case ModelId::AutoArima: return yearly || qm || weekly;
    case ModelId::Ets: return yearly || qm;
    case ModelId::Stlar:
    case ModelId::Snaive:
    case ModelId::Tbats: return qm || weekly || dh;
    case ModelId::MstlEts: return weekly || dh;
    case ModelId::MstlArima: return dh;
    }
    return false;
}

inline std::vector<ModelId> available_models(FrequencyClass fc) {
    std::vector<ModelId> out;
    for (auto id : kAllModels) {
        if (is_available(id, fc)) out.push_back(id);
    }
    return out;
}

struct ForecastResult {
    ModelId model = ModelId::Rw;
    std::vector<double> point_forecasts;
    std::map<std::string, std::string> diagnostics;
    bool fallback = false;  // true when the model failed and the random-walk forecast stands in
};

/// Mean absolute error of the forecast scaled by the in-sample seasonal-naive mean absolute error.
inline double mase(std::span<const double> test, std::span<const double> forecast, std::span<const double> train, int m) {
    if (test.empty() || test.size() != forecast.size()) {
        throw Error(ErrorKind::LengthMismatch, "test and forecast must have the same non-zero length");
    }
    if (m < 1 || train.size() <= static_cast<std::size_t>(m)) {
        throw Error(ErrorKind::InvalidArgument, "training length must exceed the period");
    }
    double num = 0.0;
    for (std::size_t h = 0; h < test.size(); ++h) num += std::abs(test[h] - forecast[h]);
    num /= static_cast<double>(test.size());
    double den = 0.0;
    for (std::size_t t = m; t < train.size(); ++t) den += std::abs(train[t] - train[t - m]);
    den /= static_cast<double>(train.size() - m);
    if (!(den > 0.0)) throw Error(ErrorKind::ZeroDenominator, "in-sample seasonal naive error is zero");
    return num / den;
}

inline double mase(std::span<const double> test, std::span<const double> forecast, const TimeSeries& train, int m) {
    return mase(test, forecast, train.values(), m);
}

namespace detail {

inline std::vector<int> fitting_periods(const TimeSeries& s) {
    std::vector<int> out;
    for (int m : s.periods()) {
        if (m > 1 && s.size() >= 2 * static_cast<std::size_t>(m)) out.push_back(m);
    }
    return out;
}

/// Re-seasonalises by repeating the last cycle of each seasonal component.
inline void add_seasonal_naive(const DecompositionResult& d, std::vector<double>& fc) {
    const std::size_t n = d.trend.size();
    for (std::size_t k = 0; k < d.periods.size(); ++k) {
        const int m = d.periods[k];
        for (std::size_t i = 0; i < fc.size(); ++i) fc[i] += d.seasonal[k][n - m + (i % m)];
    }
}

/// AR(p) with intercept by OLS, p in 0..5 chosen by AICc on a common sample.
inline std::vector<double> ar_forecast(std::span<const double> y, int h, int max_p = 5) {
    const std::size_t n = y.size();
    max_p = std::min<int>(max_p, static_cast<int>(n / 4));
    max_p = std::max(max_p, 0);
    const std::size_t start = static_cast<std::size_t>(max_p);
    const std::size_t ne = n - start;
    Eigen::VectorXd best_coef;
    int best_p = 0;
    double best_ic = std::numeric_limits<double>::infinity();
    Eigen::VectorXd target(static_cast<Eigen::Index>(ne));
    for (std::size_t t = start; t < n; ++t) target[static_cast<Eigen::Index>(t - start)] = y[t];
    for (int p = 0; p <= max_p; ++p) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(ne), p + 1);
        for (std::size_t t = start; t < n; ++t) {
            const auto r = static_cast<Eigen::Index>(t - start);
            X(r, 0) = 1.0;
            for (int j = 1; j <= p; ++j) X(r, j) = y[t - j];
        }
        try {
            const auto fit = stats::ols(X, target);
            const double nn = static_cast<double>(ne), k = p + 2.0;
            if (nn - k - 1.0 <= 0.0) break;
            const double ic = nn * std::log(std::max(fit.rss / nn, 1e-300)) + 2.0 * k + 2.0 * k * (k + 1.0) / (nn - k - 1.0);
            if (ic < best_ic) {
                best_ic = ic;
                best_coef = fit.coef;
                best_p = p;
            }
        } catch (const Error&) {
            break;
        }
    }
    if (best_coef.size() == 0) throw Error(ErrorKind::FitFailed, "autoregression could not be fitted");
    std::vector<double> path(y.begin(), y.end());
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) {
        double v = best_coef[0];
        for (int j = 1; j <= best_p; ++j) v += best_coef[j] * path[path.size() - j];
        path.push_back(v);
        out[i] = v;
    }
    return out;
}

inline std::vector<double> raw_forecast(ModelId model, const TimeSeries& train, int h, std::uint64_t seed) {
    const auto y = train.values();
    const int m = train.period();
    switch (model) {
    case ModelId::Wn: return models::mean_forecast(y, h);
    case ModelId::Rw: return models::naive_forecast(y, h);
    case ModelId::Rwd: return models::drift_forecast(y, h);
    case ModelId::Snaive: return models::seasonal_naive_forecast(y, m, h);
    case ModelId::Theta: return models::theta_forecast(y, m, h);
    case ModelId::Ets: return ets::auto_fit(y, m).forecast(h);
    case ModelId::AutoArima: return arima::auto_arima(y, m).forecast(h);
    case ModelId::Tbats: return models::tbats_forecast(y, train.periods(), h);
    case ModelId::Nn: return models::nnetar_forecast(y, m, h, seed);
    case ModelId::Stlar: {
        const auto periods = fitting_periods(train);
        if (periods.empty()) throw Error(ErrorKind::TooShort, "stlar needs two full seasonal cycles");
        const auto d = decompose(y, periods);
        auto fc = ar_forecast(d.seasonally_adjusted(), h);
        add_seasonal_naive(d, fc);
        return fc;
    }
    case ModelId::MstlEts:
    case ModelId::MstlArima: {
        const auto periods = fitting_periods(train);
        if (periods.empty()) throw Error(ErrorKind::TooShort, "multi-seasonal decomposition needs two full cycles");
        const auto d = decompose(y, periods);
        const auto adj = d.seasonally_adjusted();
        std::vector<double> fc = model == ModelId::MstlEts ? ets::auto_fit(adj, 1, false).forecast(h)
                                                           : arima::auto_arima(adj, 1).forecast(h);
        add_seasonal_naive(d, fc);
        return fc;
    }
    }
    throw Error(ErrorKind::ModelUnavailable, "unknown model");
}

} // namespace detail

/// Fits one model on `train` and forecasts `horizon` steps. Fitting failures other than
/// TooShort fall back to the random-walk forecast with `fallback` set.
inline ForecastResult fit_forecast(ModelId model, const TimeSeries& train, int horizon, FrequencyClass fc,
                                   std::uint64_t seed = 0) {
    if (!is_available(model, fc)) {
        throw Error(ErrorKind::ModelUnavailable, std::string(to_string(model)) + " is not available for " +
                                                     std::string(to_string(fc)) + " series");
    }
    if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    validate(train);
    ForecastResult out;
    out.model = model;
    const std::uint64_t stream = derive_seed(seed, train.id(), to_string(model));
    try {
        out.point_forecasts = detail::raw_forecast(model, train, horizon, stream);
        const bool finite = std::all_of(out.point_forecasts.begin(), out.point_forecasts.end(),
                                        [](double v) { return std::isfinite(v); });
        if (!finite || out.point_forecasts.size() != static_cast<std::size_t>(horizon)) {
            throw Error(ErrorKind::FitFailed, "non-finite forecast");
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::TooShort) throw;
        out.point_forecasts = models::naive_forecast(train.values(), horizon);
        out.fallback = true;
        out.diagnostics["fallback_reason"] = e.what();
    } catch (const std::exception& e) {
        out.point_forecasts = models::naive_forecast(train.values(), horizon);
        out.fallback = true;
        out.diagnostics["fallback_reason"] = e.what();
    }
    return out;
}

inline ForecastResult fit_forecast(ModelId model, const TimeSeries& train, int horizon, std::uint64_t seed = 0) {
    return fit_forecast(model, train, horizon, frequency_class_of(train.periods()), seed);
}

/// Element-wise median; even counts take the midpoint of the two central values.
inline std::vector<double> median_combine(const std::vector<std::vector<double>>& forecasts) {
    if (forecasts.empty()) throw Error(ErrorKind::EmptySet, "no forecasts to combine");
    const std::size_t h = forecasts.front().size();
    for (const auto& f : forecasts) {
        if (f.size() != h) throw Error(ErrorKind::LengthMismatch, "forecasts differ in length");
    }
    std::vector<double> out(h), col(forecasts.size());
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t k = 0; k < forecasts.size(); ++k) col[k] = forecasts[k][i];
        out[i] = stats::median(col);
    }
    return out;
}

inline std::vector<double> median_combine(const std::vector<ForecastResult>& forecasts) {
    std::vector<std::vector<double>> raw;
    raw.reserve(forecasts.size());
    for (const auto& f : forecasts) raw.push_back(f.point_forecasts);
    return median_combine(raw);
}

inline std::vector<double> mean_combine(const std::vector<std::vector<double>>& forecasts) {
    if (forecasts.empty()) throw Error(ErrorKind::EmptySet, "no forecasts to combine");
    std::vector<double> out(forecasts.front().size(), 0.0);
    for (const auto& f : forecasts) {
        if (f.size() != out.size()) throw Error(ErrorKind::LengthMismatch, "forecasts differ in length");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += f[i];
    }
    for (auto& v : out) v /= static_cast<double>(forecasts.size());
    return out;
}

/// Every available model's forecast and MASE for one split series.
struct PoolEvaluation {
    std::string id;
    std::vector<ModelId> models;
    std::vector<ForecastResult> forecasts;
    std::vector<double> mase;
    SplitSeries split;

    [[nodiscard]] std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(forecasts.begin(), forecasts.end(), [](const auto& f) { return f.fallback; }));
    }
};

inline PoolEvaluation evaluate_pool_detailed(const TimeSeries& series, FrequencyClass fc, int horizon, std::uint64_t seed = 0) {
    validate(series);
    PoolEvaluation ev;
    ev.id = series.id();
    ev.split = split(series, horizon);
    ev.models = available_models(fc);
    const int m = series.period();
    for (auto model : ev.models) {
        ForecastResult fr;
        try {
            fr = fit_forecast(model, ev.split.train, horizon, fc, seed);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TooShort) throw;
            fr.model = model;
            fr.point_forecasts = models::naive_forecast(ev.split.train.values(), horizon);
            fr.fallback = true;
            fr.diagnostics["fallback_reason"] = e.what();
        }
        ev.mase.push_back(mase(ev.split.test.values(), fr.point_forecasts, ev.split.train.values(), m));
        ev.forecasts.push_back(std::move(fr));
    }
    return ev;
}

inline std::map<ModelId, double> evaluate_pool(const TimeSeries& series, FrequencyClass fc, int horizon, std::uint64_t seed = 0) {
    const auto ev = evaluate_pool_detailed(series, fc, horizon, seed);
    std::map<ModelId, double> out;
    for (std::size_t i = 0; i < ev.models.size(); ++i) out[ev.models[i]] = ev.mase[i];
    return out;
}

/// Series-by-model MASE table used as the meta-learner's training labels.
struct ErrorMatrix {
    std::vector<std::string> series_ids;
    std::vector<ModelId> models;
    Eigen::MatrixXd values;  // rows = series, cols = models
};

inline void write_error_matrix_csv(std::ostream& out, const ErrorMatrix& em) {
    out << "id";
    for (auto m : em.models) out << ',' << to_string(m);
    out << '\n';
    for (Eigen::Index i = 0; i < em.values.rows(); ++i) {
        out << em.series_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < em.values.cols(); ++j) out << ',' << format_double(em.values(i, j));
        out << '\n';
    }
}

inline ErrorMatrix read_error_matrix_csv(std::istream& in) {
    ErrorMatrix em;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty error matrix");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "id") throw Error(ErrorKind::Format, "error matrix header must start with 'id'");
    for (std::size_t j = 1; j < header.size(); ++j) em.models.push_back(parse_model_id(header[j]));
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) throw Error(ErrorKind::Format, "error matrix row has wrong width");
        em.series_ids.push_back(f[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < f.size(); ++j) {
            const double v = parse_double(f[j]);
            if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::Format, "error matrix cells must be finite and >= 0");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    em.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(em.models.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) em.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return em;
}

} // namespace fformpp
