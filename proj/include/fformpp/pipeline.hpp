#pragma once

#include "fformpp/ebmsr.hpp"
#include "fformpp/error.hpp"
#include "fformpp/features.hpp"
#include "fformpp/parallel.hpp"
#include "fformpp/pool.hpp"
#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace fformpp {

enum class Provenance { Observed, Simulated };

inline std::string_view to_string(Provenance p) { return p == Provenance::Observed ? "observed" : "simulated"; }

/// Training collection for one frequency class; either source may be empty but not both.
struct ReferenceSet {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::vector<TimeSeries> series;
    std::vector<Provenance> provenance;

    static ReferenceSet make(FrequencyClass fc, std::vector<TimeSeries> observed, std::vector<TimeSeries> simulated) {
        if (observed.empty() && simulated.empty()) throw Error(ErrorKind::EmptySet, "reference set needs observed or simulated series");
        ReferenceSet r;
        r.frequency_class = fc;
        for (auto& s : observed) {
            r.series.push_back(std::move(s));
            r.provenance.push_back(Provenance::Observed);
        }
        for (auto& s : simulated) {
            r.series.push_back(std::move(s));
            r.provenance.push_back(Provenance::Simulated);
        }
        for (const auto& s : r.series) {
            if (s.periods() != canonical_periods(fc)) {
                throw Error(ErrorKind::BadPeriod, "series '" + s.id() + "' does not belong to class " + std::string(fformpp::to_string(fc)));
            }
        }
        return r;
    }

    [[nodiscard]] std::size_t count(Provenance p) const {
        return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), p));
    }
};

enum class Learner { Ebmsr, Mlr };

inline std::string_view to_string(Learner l) { return l == Learner::Ebmsr ? "ebmsr" : "mlr"; }

inline Learner parse_learner(std::string_view s) {
    if (s == "ebmsr") return Learner::Ebmsr;
    if (s == "mlr") return Learner::Mlr;
    throw Error(ErrorKind::InvalidArgument, "unknown learner '" + std::string(s) + "'");
}

struct SeriesFailure {
    std::string id;
    std::string stage;  // "features" or "pool"
    std::string message;
};

struct TrainingReport {
    std::size_t n_input = 0, n_used = 0, n_observed = 0, n_simulated = 0;
    std::vector<ModelId> models;
    std::vector<double> mean_mase;        // per model over used series
    std::vector<std::size_t> fallbacks;   // per model
    std::vector<SeriesFailure> failures;
    std::vector<std::string> warnings;
};

/// Features, labels and bookkeeping for one reference set.
struct TrainingData {
    FeatureMatrix features;
    ErrorMatrix errors;
    std::vector<Provenance> provenance;
    TrainingReport report;
};

namespace detail {

inline void summarise(TrainingData& d) {
    auto& r = d.report;
    r.models = d.errors.models;
    r.n_used = d.errors.series_ids.size();
    r.n_observed = static_cast<std::size_t>(std::count(d.provenance.begin(), d.provenance.end(), Provenance::Observed));
    r.n_simulated = r.n_used - r.n_observed;
    r.mean_mase.assign(r.models.size(), 0.0);
    if (r.n_used > 0) {
        for (std::size_t j = 0; j < r.models.size(); ++j) r.mean_mase[j] = d.errors.values.col(static_cast<Eigen::Index>(j)).mean();
    }
}

} // namespace detail

/// Splits, featurizes and evaluates every reference series. Series whose featurization or pool
/// evaluation fails are dropped and listed; more than `max_failure_fraction` featurization
/// failures abort.
inline TrainingData prepare_training_data(const ReferenceSet& ref, int horizon, std::uint64_t seed, int workers = 1,
                                          double max_failure_fraction = 0.2) {
    if (ref.series.empty()) throw Error(ErrorKind::EmptySet, "empty reference set");
    const FrequencyClass fc = ref.frequency_class;
    if (horizon <= 0) horizon = default_horizon(fc);
    struct Slot {
        std::optional<FeatureVector> features;
        std::optional<PoolEvaluation> pool;
        std::optional<SeriesFailure> failure;
    };
    std::vector<Slot> slots(ref.series.size());
    parallel_for(ref.series.size(), workers, [&](std::size_t i) {
        const auto& s = ref.series[i];
        auto& slot = slots[i];
        try {
            slot.features = featurize(split(s, horizon).train, fc);
        } catch (const Error& e) {
            slot.failure = SeriesFailure{s.id(), "features", e.what()};
            return;
        }
        try {
            slot.pool = evaluate_pool_detailed(s, fc, horizon, seed);
        } catch (const Error& e) {
            slot.failure = SeriesFailure{s.id(), "pool", e.what()};
        }
    });

    TrainingData d;
    d.report.n_input = ref.series.size();
    d.errors.models = available_models(fc);
    d.report.fallbacks.assign(d.errors.models.size(), 0);
    std::vector<std::string> ids;
    std::vector<FeatureVector> rows;
    std::vector<std::vector<double>> labels;
    std::size_t feature_failures = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto& slot = slots[i];
        if (slot.failure) {
            if (slot.failure->stage == "features") ++feature_failures;
            d.report.failures.push_back(*slot.failure);
            continue;
        }
        ids.push_back(ref.series[i].id());
        rows.push_back(std::move(*slot.features));
        labels.push_back(slot.pool->mase);
        d.provenance.push_back(ref.provenance[i]);
        for (std::size_t j = 0; j < slot.pool->forecasts.size(); ++j)
            if (slot.pool->forecasts[j].fallback) ++d.report.fallbacks[j];
    }
    if (static_cast<double>(feature_failures) > max_failure_fraction * static_cast<double>(ref.series.size())) {
        throw Error(ErrorKind::InvalidArgument, std::to_string(feature_failures) + " of " + std::to_string(ref.series.size()) +
                                                    " reference series failed featurization");
    }
    if (rows.empty()) throw Error(ErrorKind::EmptySet, "no usable reference series");
    d.features = to_feature_matrix(ids, rows);
    d.errors.series_ids = ids;
    d.errors.values.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(d.errors.models.size()));
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = 0; j < labels[i].size(); ++j) d.errors.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = labels[i][j];
    detail::summarise(d);
    return d;
}

/// Row-wise union of two training sets of the same class.
inline TrainingData concat(const TrainingData& a, const TrainingData& b) {
    if (a.features.names != b.features.names || a.errors.models != b.errors.models) {
        throw Error(ErrorKind::FeatureMismatch, "training sets have different schemas");
    }
    TrainingData d;
    d.features.frequency_class = a.features.frequency_class;
    d.features.names = a.features.names;
    d.features.series_ids = a.features.series_ids;
    d.features.series_ids.insert(d.features.series_ids.end(), b.features.series_ids.begin(), b.features.series_ids.end());
    d.features.values.resize(a.features.values.rows() + b.features.values.rows(), a.features.values.cols());
    d.features.values << a.features.values, b.features.values;
    d.errors.models = a.errors.models;
    d.errors.series_ids = d.features.series_ids;
    d.errors.values.resize(a.errors.values.rows() + b.errors.values.rows(), a.errors.values.cols());
    d.errors.values << a.errors.values, b.errors.values;
    d.provenance = a.provenance;
    d.provenance.insert(d.provenance.end(), b.provenance.begin(), b.provenance.end());
    d.report.n_input = a.report.n_input + b.report.n_input;
    d.report.failures = a.report.failures;
    d.report.failures.insert(d.report.failures.end(), b.report.failures.begin(), b.report.failures.end());
    d.report.fallbacks = a.report.fallbacks;
    for (std::size_t j = 0; j < d.report.fallbacks.size() && j < b.report.fallbacks.size(); ++j) d.report.fallbacks[j] += b.report.fallbacks[j];
    detail::summarise(d);
    return d;
}

struct MetaModel {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    int horizon = 0;
    Learner learner = Learner::Ebmsr;
    std::variant<ebmsr::SurfacePosterior, ebmsr::MlrModel> model;
    std::vector<std::string> feature_schema;
    std::vector<ModelId> models;
    std::size_t n_train = 0, n_observed = 0, n_simulated = 0;
};

struct TrainOptions {
    int horizon = 0;  // 0 = class default
    Learner learner = Learner::Ebmsr;
    ebmsr::MCMCConfig mcmc;
    std::uint64_t seed = 0;
    int workers = 1;
    double max_failure_fraction = 0.2;
};

inline MetaModel fit_meta_model(const TrainingData& d, const TrainOptions& opt) {
    MetaModel meta;
    meta.frequency_class = d.features.frequency_class;
    meta.horizon = opt.horizon > 0 ? opt.horizon : default_horizon(meta.frequency_class);
    meta.learner = opt.learner;
    meta.feature_schema = d.features.names;
    meta.models = d.errors.models;
    meta.n_train = d.report.n_used;
    meta.n_observed = d.report.n_observed;
    meta.n_simulated = d.report.n_simulated;
    if (opt.learner == Learner::Ebmsr) {
        auto cfg = opt.mcmc;
        cfg.seed = derive_seed(opt.seed, std::string_view("meta-learner"));
        meta.model = ebmsr::fit(d.features, d.errors, cfg);
    } else {
        meta.model = ebmsr::fit_mlr_baseline(d.features, d.errors, opt.mcmc.transform);
    }
    return meta;
}

struct TrainResult {
    MetaModel model;
    TrainingReport report;
};

inline TrainResult offline_train(const ReferenceSet& ref, const TrainOptions& opt) {
    const int h = opt.horizon > 0 ? opt.horizon : default_horizon(ref.frequency_class);
    auto data = prepare_training_data(ref, h, opt.seed, opt.workers, opt.max_failure_fraction);
    auto o = opt;
    o.horizon = h;
    TrainResult r{fit_meta_model(data, o), std::move(data.report)};
    if (const auto* post = std::get_if<ebmsr::SurfacePosterior>(&r.model.model)) {
        r.report.warnings.insert(r.report.warnings.end(), post->warnings.begin(), post->warnings.end());
    }
    return r;
}

/// Models in ascending predicted error; ties keep the class table order.
struct RankedPool {
    std::vector<std::pair<ModelId, double>> entries;
    std::string tie_break = "table-order";
    bool extrapolated = false;

    [[nodiscard]] std::vector<ModelId> order() const {
        std::vector<ModelId> out;
        for (const auto& e : entries) out.push_back(e.first);
        return out;
    }
};

inline RankedPool rank_predictions(const std::vector<ModelId>& models, const std::vector<double>& predicted) {
    if (models.size() != predicted.size()) throw Error(ErrorKind::DimensionMismatch, "one prediction per model is required");
    RankedPool r;
    for (std::size_t i = 0; i < models.size(); ++i) {
        r.entries.emplace_back(models[i], std::isnan(predicted[i]) ? std::numeric_limits<double>::infinity() : predicted[i]);
    }
    std::stable_sort(r.entries.begin(), r.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return table_rank(a.first) < table_rank(b.first);
    });
    return r;
}

inline ebmsr::Prediction predict_errors(const MetaModel& meta, const FeatureVector& f) {
    return std::visit([&](const auto& m) { return ebmsr::predict(m, f); }, meta.model);
}

inline RankedPool rank_models(const MetaModel& meta, const FeatureVector& f) {
    const auto pred = predict_errors(meta, f);
    auto r = rank_predictions(meta.models, pred.values);
    r.extrapolated = pred.extrapolated;
    return r;
}

struct FformppForecast {
    std::vector<double> forecast;
    RankedPool ranking;
    std::vector<ModelId> contributors;
    std::vector<ModelId> skipped;  // top-ranked members whose fit failed
};

namespace detail {

inline void check_k(int k, std::size_t pool) {
    if (k < 1 || static_cast<std::size_t>(k) > pool) {
        throw Error(ErrorKind::InvalidArgument, "combination size must lie in [1, " + std::to_string(pool) + "]");
    }
}

/// Walks the ranking, taking the first k members whose forecast did not fall back. When fewer
/// than k succeed, the best-ranked fallbacks fill the remaining places.
template <class Get>
FformppForecast combine_ranked(const RankedPool& ranking, int k, Get&& get) {
    FformppForecast out;
    out.ranking = ranking;
    std::vector<std::vector<double>> chosen;
    std::vector<std::pair<ModelId, std::vector<double>>> spare;
    for (const auto& [model, err] : ranking.entries) {
        if (static_cast<int>(chosen.size()) == k) break;
        std::optional<ForecastResult> fr;
        try {
            fr = get(model);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TooShort) throw;
        }
        if (fr && !fr->fallback) {
            chosen.push_back(fr->point_forecasts);
            out.contributors.push_back(model);
        } else {
            out.skipped.push_back(model);
            if (fr) spare.emplace_back(model, fr->point_forecasts);
        }
    }
    for (std::size_t i = 0; static_cast<int>(chosen.size()) < k && i < spare.size(); ++i) {
        chosen.push_back(spare[i].second);
        out.contributors.push_back(spare[i].first);
    }
    if (chosen.empty()) throw Error(ErrorKind::FitFailed, "no pool member produced a forecast");
    out.forecast = median_combine(chosen);
    return out;
}

} // namespace detail

/// Online phase: featurize the available history, rank the pool, fit the top k on the whole
/// series and take the per-step median.
inline FformppForecast forecast_fformpp(const MetaModel& meta, const TimeSeries& series, int horizon, int k, std::uint64_t seed = 0) {
    detail::check_k(k, meta.models.size());
    if (horizon <= 0) horizon = meta.horizon;
    const auto ranking = rank_models(meta, featurize(series, meta.frequency_class));
    return detail::combine_ranked(ranking, k, [&](ModelId m) { return fit_forecast(m, series, horizon, meta.frequency_class, seed); });
}

/// Same rule applied to forecasts already computed on a split series.
inline FformppForecast combine_from_pool(const RankedPool& ranking, const PoolEvaluation& ev, int k) {
    detail::check_k(k, ev.models.size());
    return detail::combine_ranked(ranking, k, [&](ModelId m) {
        const auto it = std::find(ev.models.begin(), ev.models.end(), m);
        if (it == ev.models.end()) throw Error(ErrorKind::ModelUnavailable, std::string(fformpp::to_string(m)));
        return ev.forecasts[static_cast<std::size_t>(it - ev.models.begin())];
    });
}

/// Held-out comparison of FFORMPP rules against simple pool averages.
struct MethodTable {
    std::vector<std::string> methods;
    std::vector<std::string> series_ids;
    Eigen::MatrixXd mase;  // series x methods
    std::vector<SeriesFailure> failures;

    [[nodiscard]] double mean(const std::string& method) const {
        const auto it = std::find(methods.begin(), methods.end(), method);
        if (it == methods.end()) throw Error(ErrorKind::InvalidArgument, "unknown method '" + method + "'");
        return mase.col(it - methods.begin()).mean();
    }
};

inline std::string combination_name(int k) { return k == 1 ? "fformpp-selection" : "fformpp-combination-" + std::to_string(k); }

/// Pool forecasts for held-out series, reusable across meta-models.
struct HeldOut {
    std::vector<PoolEvaluation> pool;
    std::vector<FeatureVector> features;
    std::vector<SeriesFailure> failures;
};

inline HeldOut prepare_held_out(const std::vector<TimeSeries>& test, FrequencyClass fc, int horizon, std::uint64_t seed, int workers = 1) {
    struct Slot {
        std::optional<PoolEvaluation> ev;
        std::optional<FeatureVector> f;
        std::optional<SeriesFailure> failure;
    };
    std::vector<Slot> slots(test.size());
    parallel_for(test.size(), workers, [&](std::size_t i) {
        try {
            auto ev = evaluate_pool_detailed(test[i], fc, horizon, seed);
            slots[i].f = featurize(ev.split.train, fc);
            slots[i].ev = std::move(ev);
        } catch (const Error& e) {
            slots[i].failure = SeriesFailure{test[i].id(), "held-out", e.what()};
        }
    });
    HeldOut h;
    for (auto& s : slots) {
        if (s.failure) {
            h.failures.push_back(*s.failure);
            continue;
        }
        h.pool.push_back(std::move(*s.ev));
        h.features.push_back(std::move(*s.f));
    }
    return h;
}

inline MethodTable evaluate_methods(const MetaModel& meta, const HeldOut& held, const std::vector<int>& ks, bool individual_models = false) {
    MethodTable t;
    for (int k : ks) t.methods.push_back(combination_name(k));
    t.methods.push_back("sa-median");
    t.methods.push_back("sa-mean");
    if (individual_models)
        for (auto m : meta.models) t.methods.emplace_back(fformpp::to_string(m));
    t.failures = held.failures;
    t.mase.resize(static_cast<Eigen::Index>(held.pool.size()), static_cast<Eigen::Index>(t.methods.size()));
    for (std::size_t i = 0; i < held.pool.size(); ++i) {
        const auto& ev = held.pool[i];
        t.series_ids.push_back(ev.id);
        const auto ranking = rank_models(meta, held.features[i]);
        const int m = ev.split.train.period();
        auto score = [&](const std::vector<double>& f) { return mase(ev.split.test.values(), f, ev.split.train.values(), m); };
        Eigen::Index c = 0;
        const auto row = static_cast<Eigen::Index>(i);
        for (int k : ks) t.mase(row, c++) = score(combine_from_pool(ranking, ev, k).forecast);
        std::vector<std::vector<double>> all;
        for (const auto& f : ev.forecasts) all.push_back(f.point_forecasts);
        t.mase(row, c++) = score(median_combine(all));
        t.mase(row, c++) = score(mean_combine(all));
        if (individual_models)
            for (double e : ev.mase) t.mase(row, c++) = e;
    }
    return t;
}

inline void write_method_table_csv(std::ostream& out, const MethodTable& t) {
    out << "method,n,mean_mase\n";
    for (std::size_t j = 0; j < t.methods.size(); ++j) {
        out << t.methods[j] << ',' << t.mase.rows() << ',' << format_double(t.mase.rows() > 0 ? t.mase.col(static_cast<Eigen::Index>(j)).mean() : 0.0) << '\n';
    }
}

// ---- experiment grid ----

struct ExperimentSpec {
    int number;
    bool use_simulated;
    Learner learner;
};

/// Observed-only MLR, augmented MLR, observed-only EBMSR, augmented EBMSR.
inline constexpr std::array<ExperimentSpec, 4> kExperiments{
    ExperimentSpec{1, false, Learner::Mlr}, ExperimentSpec{2, true, Learner::Mlr},
    ExperimentSpec{3, false, Learner::Ebmsr}, ExperimentSpec{4, true, Learner::Ebmsr}};

struct ExperimentClassInput {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::vector<TimeSeries> observed, simulated, test;
    int horizon = 0;
};

struct GridOptions {
    ebmsr::MCMCConfig mcmc;
    std::uint64_t seed = 0;
    int k = 4;
    int workers = 1;
};

struct ExperimentRow {
    FrequencyClass frequency_class = FrequencyClass::Yearly;
    std::size_t n_test = 0;
    std::array<double, 4> mase{};
};

struct ExperimentGrid {
    std::vector<ExperimentRow> rows;
    std::array<double, 4> overall{};
    std::size_t n_total = 0;
};

inline ExperimentGrid run_experiment_grid(const std::vector<ExperimentClassInput>& inputs, const GridOptions& opt) {
    if (inputs.empty()) throw Error(ErrorKind::EmptySet, "no experiment inputs");
    ExperimentGrid g;
    for (const auto& in : inputs) {
        const FrequencyClass fc = in.frequency_class;
        const int h = in.horizon > 0 ? in.horizon : default_horizon(fc);
        auto check = [&](const std::vector<TimeSeries>& v) {
            for (const auto& s : v)
                if (s.periods() != canonical_periods(fc)) throw Error(ErrorKind::BadPeriod, "series '" + s.id() + "' is not " + std::string(fformpp::to_string(fc)));
        };
        check(in.observed);
        check(in.simulated);
        check(in.test);
        const auto obs = prepare_training_data(ReferenceSet::make(fc, in.observed, {}), h, opt.seed, opt.workers);
        const auto aug = in.simulated.empty() ? obs
                                              : concat(obs, prepare_training_data(ReferenceSet::make(fc, {}, in.simulated), h, opt.seed, opt.workers));
        const auto held = prepare_held_out(in.test, fc, h, opt.seed, opt.workers);
        if (held.pool.empty()) throw Error(ErrorKind::EmptySet, "no usable test series");
        ExperimentRow row;
        row.frequency_class = fc;
        row.n_test = held.pool.size();
        for (std::size_t e = 0; e < kExperiments.size(); ++e) {
            TrainOptions to;
            to.horizon = h;
            to.learner = kExperiments[e].learner;
            to.mcmc = opt.mcmc;
            to.seed = opt.seed;
            const auto meta = fit_meta_model(kExperiments[e].use_simulated ? aug : obs, to);
            row.mase[e] = evaluate_methods(meta, held, {opt.k}).mean(combination_name(opt.k));
        }
        g.rows.push_back(row);
    }
    for (const auto& r : g.rows) {
        g.n_total += r.n_test;
        for (std::size_t e = 0; e < 4; ++e) g.overall[e] += static_cast<double>(r.n_test) * r.mase[e];
    }
    for (auto& v : g.overall) v /= static_cast<double>(g.n_total);
    return g;
}

inline void write_experiment_grid_csv(std::ostream& out, const ExperimentGrid& g) {
    out << "class,n,experiment1,experiment2,experiment3,experiment4\n";
    for (const auto& r : g.rows) {
        out << fformpp::to_string(r.frequency_class) << ',' << r.n_test;
        for (double v : r.mase) out << ',' << format_double(v);
        out << '\n';
    }
    out << "overall," << g.n_total;
    for (double v : g.overall) out << ',' << format_double(v);
    out << '\n';
}

inline void write_training_report_csv(std::ostream& out, const TrainingReport& r) {
    out << "model,mean_mase,fallbacks\n";
    for (std::size_t j = 0; j < r.models.size(); ++j) {
        out << fformpp::to_string(r.models[j]) << ',' << format_double(r.mean_mase[j]) << ',' << r.fallbacks[j] << '\n';
    }
}

inline void write_failures_csv(std::ostream& out, const std::vector<SeriesFailure>& f) {
    out << "id,stage,message\n";
    for (const auto& x : f) {
        std::string msg = x.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out << x.id << ',' << x.stage << ',' << msg << '\n';
    }
}

// Forecast CSV: id,h,forecast,contributors with contributors joined by ';' in rank order.

inline void write_forecasts_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<FformppForecast>& fcs) {
    if (ids.size() != fcs.size()) throw Error(ErrorKind::LengthMismatch, "ids and forecasts differ in count");
    out << "id,h,forecast,contributors\n";
    for (std::size_t s = 0; s < ids.size(); ++s) {
        std::string who;
        for (auto m : fcs[s].contributors) who += (who.empty() ? "" : ";") + std::string(to_string(m));
        for (std::size_t i = 0; i < fcs[s].forecast.size(); ++i)
            out << ids[s] << ',' << i + 1 << ',' << format_double(fcs[s].forecast[i]) << ',' << who << '\n';
    }
}

struct ContributorRow {
    std::string id;
    std::vector<ModelId> contributors;
};

/// One entry per series id of a forecast CSV, in first-appearance order.
inline std::vector<ContributorRow> read_forecast_contributors(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "empty forecast file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,h,forecast,contributors") throw Error(ErrorKind::Format, "forecast header must be 'id,h,forecast,contributors'");
    std::vector<ContributorRow> out;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 4) throw Error(ErrorKind::Format, "forecast row needs 4 fields");
        std::vector<ModelId> who;
        for (const auto& name : split_fields(f[3], ';')) who.push_back(parse_model_id(name));
        const auto it = seen.find(f[0]);
        if (it == seen.end()) {
            seen.emplace(f[0], out.size());
            out.push_back({f[0], std::move(who)});
        } else if (out[it->second].contributors != who) {
            throw Error(ErrorKind::Format, "series '" + f[0] + "' lists different contributors across rows");
        }
    }
    return out;
}

// ---- persistence ----

inline nlohmann::json to_json(const MetaModel& m) {
    std::vector<std::string> models;
    for (auto id : m.models) models.emplace_back(fformpp::to_string(id));
    nlohmann::json learner = std::visit([](const auto& x) { return ebmsr::to_json(x); }, m.model);
    return {{"format", "fformpp"}, {"version", ebmsr::kFormatVersion}, {"kind", "meta"},
            {"frequency_class", std::string(fformpp::to_string(m.frequency_class))}, {"horizon", m.horizon},
            {"learner", std::string(to_string(m.learner))}, {"models", models}, {"feature_schema", m.feature_schema},
            {"n_train", m.n_train}, {"n_observed", m.n_observed}, {"n_simulated", m.n_simulated}, {"model", learner}};
}

inline MetaModel meta_model_from_json(const nlohmann::json& j) {
    ebmsr::detail::check_header(j, "meta");
    try {
        MetaModel m;
        m.frequency_class = parse_frequency_class(j.at("frequency_class").get<std::string>());
        m.horizon = j.at("horizon").get<int>();
        m.learner = parse_learner(j.at("learner").get<std::string>());
        for (const auto& s : j.at("models")) m.models.push_back(parse_model_id(s.get<std::string>()));
        m.feature_schema = j.at("feature_schema").get<std::vector<std::string>>();
        m.n_train = j.at("n_train").get<std::size_t>();
        m.n_observed = j.at("n_observed").get<std::size_t>();
        m.n_simulated = j.at("n_simulated").get<std::size_t>();
        if (m.learner == Learner::Ebmsr) m.model = ebmsr::posterior_from_json(j.at("model"));
        else m.model = ebmsr::mlr_from_json(j.at("model"));
        if (m.models != available_models(m.frequency_class)) throw Error(ErrorKind::Format, "model columns do not match the class pool");
        if (m.feature_schema != feature_names(m.frequency_class)) throw Error(ErrorKind::FeatureMismatch, "feature schema does not match the class");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad meta-model file: ") + e.what());
    }
}

} // namespace fformpp
