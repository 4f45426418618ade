// fformpp: batch front end for simulation, featurization, training, forecasting and diagnostics.

#include "fformpp/fformpp.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace fformpp;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kInternalError = 2;

bool g_quiet = false;

void log_info(const std::string& msg) {
    if (!g_quiet) std::cerr << "fformpp: " << msg << '\n';
}

void log_warning(const std::string& msg) { std::cerr << "fformpp: warning: " << msg << '\n'; }

const char* kSeedEnv = "FFORMPP_SEED";
const char* kWorkersEnv = "FFORMPP_WORKERS";

/// JSON configuration: top-level keys set global flags, a nested object named after a
/// subcommand sets that subcommand's flags. Arrays feed repeatable flags.
/// Keys whose environment variable is set are dropped so the variable wins over the file.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return dump(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConfigError("config root must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

private:
    static void walk(const nlohmann::json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : j.items()) {
            if (parents.empty() && ((key == "seed" && std::getenv(kSeedEnv)) || (key == "workers" && std::getenv(kWorkersEnv)))) continue;
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                walk(value, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v, item.fullname()));
            } else {
                item.inputs.push_back(scalar(value, item.fullname()));
            }
            items.push_back(std::move(item));
        }
    }

    static std::string scalar(const nlohmann::json& v, const std::string& key) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConfigError("config key '" + key + "' must hold a string, number, boolean or array of those");
    }

    static nlohmann::json dump(const CLI::App* app, bool default_also) {
        nlohmann::json j = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& r = opt->results();
                j[name] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            auto s = dump(sub, default_also);
            if (!s.empty()) j[sub->get_name()] = std::move(s);
        }
        return j;
    }
};

struct Globals {
    std::uint64_t seed = 0;
    CLI::Option* seed_option = nullptr;
    int workers = default_workers();
    bool strict = false;
};

std::uint64_t require_seed(const Globals& g, const std::string& command) {
    if (g.seed_option->count() == 0) {
        throw Error(ErrorKind::InvalidArgument, command + " is stochastic: pass --seed, set " + kSeedEnv + " or give \"seed\" in the config file");
    }
    return g.seed;
}

std::ofstream open_out(const std::string& path) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Format, "cannot open '" + path + "'");
    return in;
}

std::string default_failures_path(const std::string& given, const std::string& out) {
    if (!given.empty()) return given;
    fs::path p(out);
    p.replace_extension();
    return p.string() + ".failures.csv";
}

int report_failures(const std::vector<SeriesFailure>& failures, const std::string& path, const Globals& g) {
    if (failures.empty()) return kOk;
    auto out = open_out(path);
    write_failures_csv(out, failures);
    log_warning(std::to_string(failures.size()) + " series failed; see " + path);
    return g.strict ? kInputError : kOk;
}

std::vector<TimeSeries> load_series(const std::string& path) {
    auto s = read_series_file(path);
    if (s.empty()) throw Error(ErrorKind::EmptySet, "no series in '" + path + "'");
    log_info("read " + std::to_string(s.size()) + " series from " + path);
    return s;
}

FrequencyClass class_or_infer(const std::string& name, const std::vector<TimeSeries>& series) {
    if (!name.empty()) return parse_frequency_class(name);
    const auto fc = frequency_class_of(series.front().periods());
    log_info("frequency class inferred from the first series: " + std::string(to_string(fc)));
    return fc;
}

MetaModel load_model(const std::string& path) {
    auto in = open_in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, "'" + path + "' is not valid JSON: " + e.what());
    }
    return meta_model_from_json(j);
}

void write_manifest(const std::string& path, const diagnostics::Manifest& m) {
    if (path.empty()) return;
    auto out = open_out(path);
    out << m.to_json().dump(2) << '\n';
}

const std::vector<std::string> kClassNames{"yearly", "quarterly", "monthly", "weekly", "daily", "hourly"};

// ---------------------------------------------------------------- MCMC flags

struct McmcFlags {
    ebmsr::MCMCConfig cfg;
    std::string transform = "log1p";
    bool fixed_knots = false;

    void add(CLI::App* app) {
        app->add_option("--iterations", cfg.iterations, "MCMC iterations including burn-in")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--burn-in", cfg.burn_in, "Iterations discarded before draws are kept")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--thin", cfg.thin, "Keep every n-th draw after burn-in")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--additive-features", cfg.additive_features, "Features given additive spline terms")
            ->capture_default_str()
            ->check(CLI::NonNegativeNumber);
        app->add_option("--additive-knots", cfg.additive_knots, "Knots per additive feature")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--surface-knots", cfg.surface_knots, "Surface (radial) knots")->capture_default_str()->check(CLI::NonNegativeNumber);
        app->add_option("--transform", transform, "Response transform applied to MASE before regression")
            ->capture_default_str()
            ->check(CLI::IsMember({"log1p", "identity"}));
        app->add_flag("--fixed-knots", fixed_knots, "Keep knots at their initial locations");
    }

    [[nodiscard]] ebmsr::MCMCConfig config() const {
        if (cfg.burn_in >= cfg.iterations) throw Error(ErrorKind::InvalidArgument, "--burn-in must be below --iterations");
        auto c = cfg;
        c.transform = ebmsr::parse_transform(transform);
        c.update_knots = !fixed_knots;
        return c;
    }
};

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
    std::string frequency_class, out, specs, family = "mar";
    std::size_t n = 0;

    void add(CLI::App* sub) {
        sub->add_option("--class", frequency_class, "Frequency class")->required()->check(CLI::IsMember(kClassNames));
        sub->add_option("--n", n, "Number of series")->required()->check(CLI::PositiveNumber);
        sub->add_option("--family", family, "mar: mixture autoregressive generator; arima: ARIMA-family stand-in for observed data")
            ->capture_default_str()
            ->check(CLI::IsMember({"mar", "arima"}));
        sub->add_option("--out", out, "Series file (.csv or .jsonl)")->required();
        sub->add_option("--specs", specs, "Optional JSON-lines file with the generating MAR specification of each series");
    }

    int run(const Globals& g) const {
        const auto fc = parse_frequency_class(frequency_class);
        const auto seed = require_seed(g, "simulate");
        std::vector<TimeSeries> series;
        if (family == "arima") {
            if (!specs.empty()) throw Error(ErrorKind::InvalidArgument, "--specs applies to the mar family only");
            series = simulate_arima_family(fc, n, seed);
        } else {
            auto detailed = generate_reference_detailed(fc, n, seed);
            if (!specs.empty()) {
                auto so = open_out(specs);
                for (const auto& d : detailed) {
                    so << nlohmann::json{{"id", d.series.id()}, {"attempts", d.attempts}, {"spec", to_json(d.spec)}}.dump() << '\n';
                }
            }
            for (auto& d : detailed) series.push_back(std::move(d.series));
        }
        write_series_file(out, series);
        log_info("wrote " + std::to_string(series.size()) + " " + std::string(to_string(fc)) + " series to " + out);
        return kOk;
    }
};

// ---------------------------------------------------------------- featurize

struct FeaturizeCmd {
    std::string series_path, frequency_class, out, failures;

    void add(CLI::App* sub) {
        sub->add_option("--series", series_path, "Input series file (.csv or .jsonl)")->required();
        sub->add_option("--class", frequency_class, "Frequency class [default: inferred from the first series]")->check(CLI::IsMember(kClassNames));
        sub->add_option("--out", out, "Feature matrix CSV")->required();
        sub->add_option("--failures", failures, "Failures CSV [default: <out stem>.failures.csv]");
    }

    int run(const Globals& g) const {
        const auto series = load_series(series_path);
        const auto fc = class_or_infer(frequency_class, series);
        std::vector<std::optional<FeatureVector>> rows(series.size());
        std::vector<std::optional<SeriesFailure>> fails(series.size());
        parallel_for(series.size(), g.workers, [&](std::size_t i) {
            try {
                rows[i] = featurize(series[i], fc);
            } catch (const Error& e) {
                fails[i] = SeriesFailure{series[i].id(), "features", e.what()};
            }
        });
        std::vector<std::string> ids;
        std::vector<FeatureVector> ok;
        std::vector<SeriesFailure> failed;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (rows[i]) {
                ids.push_back(series[i].id());
                ok.push_back(std::move(*rows[i]));
            } else {
                failed.push_back(*fails[i]);
            }
        }
        const int status = report_failures(failed, default_failures_path(failures, out), g);
        if (ok.empty()) throw Error(ErrorKind::EmptySet, "every series failed featurization");
        auto os = open_out(out);
        write_feature_matrix_csv(os, to_feature_matrix(ids, ok));
        log_info("wrote " + std::to_string(ok.size()) + " feature rows to " + out);
        return status;
    }
};

// ---------------------------------------------------------------- evaluate-pool

struct EvaluatePoolCmd {
    std::string series_path, frequency_class, out, forecasts, failures;
    int horizon = 0;

    void add(CLI::App* sub) {
        sub->add_option("--series", series_path, "Input series file (.csv or .jsonl)")->required();
        sub->add_option("--class", frequency_class, "Frequency class [default: inferred from the first series]")->check(CLI::IsMember(kClassNames));
        sub->add_option("--horizon", horizon, "Forecast horizon; 0 uses the class default")->capture_default_str()->check(CLI::NonNegativeNumber);
        sub->add_option("--out", out, "Error matrix CSV (MASE per series and model)")->required();
        sub->add_option("--forecasts", forecasts, "Optional CSV of every pool member's point forecasts");
        sub->add_option("--failures", failures, "Failures CSV [default: <out stem>.failures.csv]");
    }

    int run(const Globals& g) const {
        const auto series = load_series(series_path);
        const auto fc = class_or_infer(frequency_class, series);
        const auto seed = require_seed(g, "evaluate-pool");
        const int h = horizon > 0 ? horizon : default_horizon(fc);
        std::vector<std::optional<PoolEvaluation>> evs(series.size());
        std::vector<std::optional<SeriesFailure>> fails(series.size());
        parallel_for(series.size(), g.workers, [&](std::size_t i) {
            try {
                evs[i] = evaluate_pool_detailed(series[i], fc, h, seed);
            } catch (const Error& e) {
                fails[i] = SeriesFailure{series[i].id(), "pool", e.what()};
            }
        });
        ErrorMatrix em;
        em.models = available_models(fc);
        std::vector<const PoolEvaluation*> ok;
        std::vector<SeriesFailure> failed;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (evs[i]) {
                ok.push_back(&*evs[i]);
            } else {
                failed.push_back(*fails[i]);
            }
        }
        const int status = report_failures(failed, default_failures_path(failures, out), g);
        if (ok.empty()) throw Error(ErrorKind::EmptySet, "every series failed pool evaluation");
        em.values.resize(static_cast<Eigen::Index>(ok.size()), static_cast<Eigen::Index>(em.models.size()));
        for (std::size_t r = 0; r < ok.size(); ++r) {
            em.series_ids.push_back(ok[r]->id);
            for (std::size_t c = 0; c < em.models.size(); ++c) em.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ok[r]->mase[c];
        }
        auto os = open_out(out);
        write_error_matrix_csv(os, em);
        if (!forecasts.empty()) {
            auto fo = open_out(forecasts);
            fo << "id,model,h,forecast,fallback\n";
            for (const auto* ev : ok)
                for (const auto& f : ev->forecasts)
                    for (std::size_t t = 0; t < f.point_forecasts.size(); ++t)
                        fo << ev->id << ',' << to_string(f.model) << ',' << t + 1 << ',' << format_double(f.point_forecasts[t]) << ','
                           << (f.fallback ? 1 : 0) << '\n';
        }
        std::size_t fallbacks = 0;
        for (const auto* ev : ok) fallbacks += ev->failures();
        if (fallbacks > 0) log_info(std::to_string(fallbacks) + " model fits fell back to the random walk");
        log_info("wrote " + std::to_string(ok.size()) + " error rows to " + out);
        return status;
    }
};

// ---------------------------------------------------------------- train

struct TrainCmd {
    std::string frequency_class, observed, simulated, learner = "ebmsr", out, report, failures;
    int horizon = 0;
    double max_failure_fraction = 0.2;
    McmcFlags mcmc;

    void add(CLI::App* sub) {
        sub->add_option("--class", frequency_class, "Frequency class")->required()->check(CLI::IsMember(kClassNames));
        sub->add_option("--observed", observed, "Observed reference series file");
        sub->add_option("--simulated", simulated, "Simulated reference series file");
        sub->add_option("--learner", learner, "Meta-learner: ebmsr (Bayesian surface regression) or mlr (linear baseline)")
            ->capture_default_str()
            ->check(CLI::IsMember({"ebmsr", "mlr"}));
        sub->add_option("--horizon", horizon, "Forecast horizon; 0 uses the class default")->capture_default_str()->check(CLI::NonNegativeNumber);
        sub->add_option("--max-failure-fraction", max_failure_fraction, "Abort when more reference series than this fraction fail featurization")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        mcmc.add(sub);
        sub->add_option("--out", out, "Meta-model JSON")->required();
        sub->add_option("--report", report, "Optional training report CSV");
        sub->add_option("--failures", failures, "Failures CSV [default: <out stem>.failures.csv]");
    }

    int run(const Globals& g) const {
        const auto fc = parse_frequency_class(frequency_class);
        if (observed.empty() && simulated.empty()) throw Error(ErrorKind::InvalidArgument, "give --observed, --simulated or both");
        std::vector<TimeSeries> obs, sim;
        if (!observed.empty()) obs = load_series(observed);
        if (!simulated.empty()) sim = load_series(simulated);
        TrainOptions o;
        o.horizon = horizon;
        o.learner = parse_learner(learner);
        o.mcmc = mcmc.config();
        o.seed = require_seed(g, "train");
        o.workers = g.workers;
        o.max_failure_fraction = max_failure_fraction;
        const auto r = offline_train(ReferenceSet::make(fc, obs, sim), o);
        for (const auto& w : r.report.warnings) log_warning(w);
        const int status = report_failures(r.report.failures, default_failures_path(failures, out), g);
        auto os = open_out(out);
        os << to_json(r.model).dump() << '\n';
        if (!report.empty()) {
            auto ro = open_out(report);
            write_training_report_csv(ro, r.report);
        }
        log_info("trained " + learner + " on " + std::to_string(r.report.n_used) + " series; model written to " + out);
        return status;
    }
};

// ---------------------------------------------------------------- forecast

struct ForecastCmd {
    std::string model, series_path, out, ranking, failures;
    int k = 4;
    int horizon = 0;

    void add(CLI::App* sub) {
        sub->add_option("--model", model, "Meta-model JSON written by train")->required();
        sub->add_option("--series", series_path, "Series to forecast (.csv or .jsonl)")->required();
        sub->add_option("--k", k, "Combine the k best-ranked models by their per-step median; 1 selects the best model")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--horizon", horizon, "Forecast horizon; 0 uses the horizon stored in the model")->capture_default_str()->check(CLI::NonNegativeNumber);
        sub->add_option("--out", out, "Forecast CSV: id,h,forecast,contributors")->required();
        sub->add_option("--ranking", ranking, "Optional CSV of every model's predicted MASE and rank per series");
        sub->add_option("--failures", failures, "Failures CSV [default: <out stem>.failures.csv]");
    }

    int run(const Globals& g) const {
        const auto meta = load_model(model);
        const auto series = load_series(series_path);
        const auto seed = require_seed(g, "forecast");
        const int h = horizon > 0 ? horizon : meta.horizon;
        if (static_cast<std::size_t>(k) > meta.models.size()) {
            throw Error(ErrorKind::InvalidArgument, "--k " + std::to_string(k) + " exceeds the pool of " + std::to_string(meta.models.size()) + " models");
        }
        std::vector<std::optional<FformppForecast>> res(series.size());
        std::vector<std::optional<SeriesFailure>> fails(series.size());
        parallel_for(series.size(), g.workers, [&](std::size_t i) {
            try {
                res[i] = forecast_fformpp(meta, series[i], h, k, seed);
            } catch (const Error& e) {
                fails[i] = SeriesFailure{series[i].id(), "forecast", e.what()};
            }
        });
        std::vector<std::string> ids;
        std::vector<FformppForecast> ok;
        std::vector<SeriesFailure> failed;
        std::size_t extrapolated = 0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            if (res[i]) {
                ids.push_back(series[i].id());
                extrapolated += res[i]->ranking.extrapolated ? 1 : 0;
                ok.push_back(std::move(*res[i]));
            } else {
                failed.push_back(*fails[i]);
            }
        }
        const int status = report_failures(failed, default_failures_path(failures, out), g);
        if (ok.empty()) throw Error(ErrorKind::EmptySet, "every series failed to forecast");
        auto os = open_out(out);
        write_forecasts_csv(os, ids, ok);
        if (!ranking.empty()) {
            auto ro = open_out(ranking);
            ro << "id,rank,model,predicted_mase\n";
            for (std::size_t i = 0; i < ok.size(); ++i)
                for (std::size_t r = 0; r < ok[i].ranking.entries.size(); ++r)
                    ro << ids[i] << ',' << r + 1 << ',' << to_string(ok[i].ranking.entries[r].first) << ','
                       << format_double(ok[i].ranking.entries[r].second) << '\n';
        }
        if (extrapolated > 0) log_warning(std::to_string(extrapolated) + " series lie outside the training feature range");
        log_info("wrote forecasts for " + std::to_string(ok.size()) + " series to " + out);
        return status;
    }
};

// ---------------------------------------------------------------- experiment-grid

struct GridCmd {
    std::vector<std::string> classes, observed, simulated, test;
    std::string out;
    int k = 4;
    int horizon = 0;
    McmcFlags mcmc;

    void add(CLI::App* sub) {
        sub->add_option("--class", classes, "Frequency class of one grid row; repeat for several classes")->required()->check(CLI::IsMember(kClassNames));
        sub->add_option("--observed", observed, "Observed reference series file, one per --class")->required();
        sub->add_option("--simulated", simulated, "Augmenting simulated series file, one per --class")->required();
        sub->add_option("--test", test, "Held-out test series file, one per --class")->required();
        sub->add_option("--k", k, "Combination size used to score every experiment")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--horizon", horizon, "Forecast horizon; 0 uses each class default")->capture_default_str()->check(CLI::NonNegativeNumber);
        mcmc.add(sub);
        sub->add_option("--out", out, "Grid CSV: mean MASE per class and experiment plus a weighted overall row")->required();
    }

    int run(const Globals& g) const {
        if (observed.size() != classes.size() || simulated.size() != classes.size() || test.size() != classes.size()) {
            throw Error(ErrorKind::InvalidArgument, "--observed, --simulated and --test must each be given once per --class");
        }
        GridOptions opt;
        opt.mcmc = mcmc.config();
        opt.seed = require_seed(g, "experiment-grid");
        opt.k = k;
        opt.workers = g.workers;
        std::vector<ExperimentClassInput> in;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            ExperimentClassInput e;
            e.frequency_class = parse_frequency_class(classes[i]);
            e.horizon = horizon;
            e.observed = load_series(observed[i]);
            e.simulated = load_series(simulated[i]);
            e.test = load_series(test[i]);
            in.push_back(std::move(e));
        }
        const auto grid = run_experiment_grid(in, opt);
        auto os = open_out(out);
        write_experiment_grid_csv(os, grid);
        log_info("wrote experiment grid for " + std::to_string(grid.rows.size()) + " classes to " + out);
        return kOk;
    }
};

// ---------------------------------------------------------------- diagnose

struct PcaCmd {
    std::string reference, fresh, out, loadings, manifest;

    void add(CLI::App* sub) {
        sub->add_option("--reference", reference, "Feature matrix CSV of the reference set")->required();
        sub->add_option("--new", fresh, "Feature matrix CSV of the series to place in the reference space")->required();
        sub->add_option("--out", out, "Projection CSV: id,set,pc1,pc2")->required();
        sub->add_option("--loadings", loadings, "Optional loadings CSV: feature,pc1,pc2");
        sub->add_option("--manifest", manifest, "Optional JSON manifest describing the outputs");
    }

    int run(const Globals&) const {
        auto ri = open_in(reference);
        auto ni = open_in(fresh);
        const auto ref = read_feature_matrix_csv(ri);
        const auto neu = read_feature_matrix_csv(ni);
        const auto p = diagnostics::pca_project(ref, neu);
        auto os = open_out(out);
        diagnostics::write_projection_csv(os, p, ref.series_ids, neu.series_ids);
        diagnostics::Manifest m;
        m.command = "diagnose pca";
        m.outputs.push_back({out, "reference and new series in the first two principal components", {"id", "set", "pc1", "pc2"}});
        if (!loadings.empty()) {
            auto lo = open_out(loadings);
            diagnostics::write_loadings_csv(lo, p);
            m.outputs.push_back({loadings, "feature loadings", {"feature", "pc1", "pc2"}});
        }
        m.provenance = {{"reference", reference},
                        {"new", fresh},
                        {"explained", {p.explained[0], p.explained[1]}},
                        {"dropped_features", p.dropped},
                        {"out_of_hull", p.out_of_hull}};
        if (!p.dropped.empty()) m.notes.push_back("constant features dropped before projection");
        write_manifest(manifest, m);
        if (p.out_of_hull > 0) log_warning(std::to_string(p.out_of_hull) + " new series fall outside the reference bounding box");
        log_info("projection written to " + out);
        return kOk;
    }
};

struct ClusterCmd {
    std::string forecasts, frequency_class, out, labels, manifest;
    int clusters = 3;
    std::size_t subsample = 0;

    void add(CLI::App* sub) {
        sub->add_option("--forecasts", forecasts, "Forecast CSV written by forecast (its contributors column is clustered)")->required();
        sub->add_option("--class", frequency_class, "Use this class's model pool as columns [default: models that appear, in pool order]")
            ->check(CLI::IsMember(kClassNames));
        sub->add_option("--clusters", clusters, "Number of clusters cut from the Ward tree")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--subsample", subsample, "Cluster a seeded random subset of this many series; 0 uses all")->capture_default_str();
        sub->add_option("--out", out, "Cluster table CSV: cluster,n and the percentage of members using each model")->required();
        sub->add_option("--labels", labels, "Optional CSV of each series' cluster: id,cluster");
        sub->add_option("--manifest", manifest, "Optional JSON manifest describing the outputs");
    }

    int run(const Globals& g) const {
        auto in = open_in(forecasts);
        auto rows = read_forecast_contributors(in);
        if (rows.empty()) throw Error(ErrorKind::EmptySet, "no series in '" + forecasts + "'");
        std::optional<std::uint64_t> seed;
        if (subsample > 0 && subsample < rows.size()) {
            seed = require_seed(g, "diagnose cluster --subsample");
            std::vector<std::size_t> idx(rows.size());
            std::iota(idx.begin(), idx.end(), 0);
            auto rng = make_rng(*seed, std::string_view("cluster-subsample"));
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(subsample);
            std::sort(idx.begin(), idx.end());
            std::vector<ContributorRow> kept;
            for (auto i : idx) kept.push_back(std::move(rows[i]));
            rows = std::move(kept);
        }
        std::vector<ModelId> models;
        if (!frequency_class.empty()) {
            models = available_models(parse_frequency_class(frequency_class));
        } else {
            for (const auto& r : rows)
                for (auto m : r.contributors)
                    if (std::find(models.begin(), models.end(), m) == models.end()) models.push_back(m);
            std::sort(models.begin(), models.end(), [](ModelId a, ModelId b) { return table_rank(a) < table_rank(b); });
        }
        std::vector<std::string> ids;
        std::vector<std::vector<ModelId>> used;
        for (const auto& r : rows) {
            ids.push_back(r.id);
            used.push_back(r.contributors);
        }
        const auto s = diagnostics::SelectionMatrix::from_contributors(ids, models, used);
        const auto t = diagnostics::cluster_combinations(s, clusters);
        auto os = open_out(out);
        diagnostics::write_cluster_table_csv(os, t);
        diagnostics::Manifest m;
        m.command = "diagnose cluster";
        std::vector<std::string> cols{"cluster", "n"};
        for (auto id : models) cols.emplace_back(to_string(id));
        m.outputs.push_back({out, "percentage of each cluster's series whose combination used a model", cols});
        if (!labels.empty()) {
            auto lo = open_out(labels);
            diagnostics::write_cluster_labels_csv(lo, s, t);
            m.outputs.push_back({labels, "cluster of each series", {"id", "cluster"}});
        }
        m.provenance = {{"forecasts", forecasts}, {"series", ids.size()}, {"clusters", clusters}, {"linkage", "ward.D on binary distance"}};
        if (seed) m.provenance["subsample_seed"] = *seed;
        write_manifest(manifest, m);
        log_info("clustered " + std::to_string(ids.size()) + " series into " + std::to_string(clusters) + " groups; table written to " + out);
        return kOk;
    }
};

struct CoefficientsCmd {
    std::string model, out, manifest;
    std::vector<std::string> order;

    void add(CLI::App* sub) {
        sub->add_option("--model", model, "EBMSR meta-model JSON written by train")->required();
        sub->add_option("--order", order, "Comma-separated column order by model name [default: ascending predicted MASE at the feature centroid]")
            ->delimiter(',');
        sub->add_option("--out", out, "Coefficient CSV: term,block and one column per model")->required();
        sub->add_option("--manifest", manifest, "Optional JSON manifest describing the outputs");
    }

    int run(const Globals&) const {
        const auto meta = load_model(model);
        const auto* post = std::get_if<ebmsr::SurfacePosterior>(&meta.model);
        if (!post) throw Error(ErrorKind::InvalidArgument, "coefficients need an ebmsr model, '" + model + "' holds " + std::string(to_string(meta.learner)));
        const auto t = diagnostics::export_coefficient_table(*post, order);
        auto os = open_out(out);
        diagnostics::write_coefficient_table_csv(os, t);
        diagnostics::Manifest m;
        m.command = "diagnose coefficients";
        std::vector<std::string> cols{"term", "block"};
        cols.insert(cols.end(), t.columns.begin(), t.columns.end());
        m.outputs.push_back({out, "posterior mean coefficients on the standardized scale", cols});
        m.provenance = {{"model", model}, {"transform", ebmsr::to_string(post->transform)}};
        write_manifest(manifest, m);
        log_info("coefficient table written to " + out);
        return kOk;
    }
};

int exit_code(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::FitFailed:
    case ErrorKind::SingularDesign:
    case ErrorKind::NumericalOverflow:
        return kInternalError;
    default:
        return kInputError;
    }
}

const CLI::App* deepest(const CLI::App* app) {
    for (const auto* sub : app->get_subcommands())
        if (sub->parsed()) return deepest(sub);
    return app;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-based forecast model performance prediction: simulate reference series, learn which forecasting "
                 "models suit which series, and forecast with the best-ranked models.",
                 "fformpp"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file supplying any flag; top-level keys are global flags, an object per subcommand holds its flags; "
                                   "command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Globals g;
    g.seed_option = app.add_option("--seed", g.seed, "Master seed for every stochastic step")->envname(kSeedEnv);
    app.add_option("--workers", g.workers, "Worker threads [default: available cores]; results do not depend on this")
        ->envname(kWorkersEnv)
        ->check(CLI::PositiveNumber);
    app.add_flag("--strict", g.strict, "Exit with status 1 when any series in a batch fails");
    app.add_flag("-q,--quiet", g_quiet, "Only log warnings and errors");
    app.footer("Exit status: 0 success, 1 input error, 2 internal failure. Logs go to standard error.");

    SimulateCmd simulate;
    FeaturizeCmd featurize_cmd;
    EvaluatePoolCmd evaluate;
    TrainCmd train;
    ForecastCmd forecast;
    GridCmd grid;
    PcaCmd pca;
    ClusterCmd cluster;
    CoefficientsCmd coefficients;

    auto* sim_app = app.add_subcommand("simulate", "Generate reference series");
    simulate.add(sim_app);
    auto* feat_app = app.add_subcommand("featurize", "Compute the feature vector of every series");
    featurize_cmd.add(feat_app);
    auto* eval_app = app.add_subcommand("evaluate-pool", "Fit every pool model and score it by MASE on the last horizon");
    evaluate.add(eval_app);
    auto* train_app = app.add_subcommand("train", "Fit a meta-model from reference series");
    train.add(train_app);
    auto* fc_app = app.add_subcommand("forecast", "Rank the pool for each series and forecast with the best k models");
    forecast.add(fc_app);
    auto* grid_app = app.add_subcommand("experiment-grid", "Compare learners with and without simulated augmentation");
    grid.add(grid_app);
    auto* diag_app = app.add_subcommand("diagnose", "Instance-space and meta-model diagnostics");
    diag_app->require_subcommand(1);
    auto* pca_app = diag_app->add_subcommand("pca", "Project reference and new feature vectors onto two principal components");
    pca.add(pca_app);
    auto* cluster_app = diag_app->add_subcommand("cluster", "Cluster series by which models their combination used");
    cluster.add(cluster_app);
    auto* coef_app = diag_app->add_subcommand("coefficients", "Export posterior mean coefficients of an EBMSR meta-model");
    coefficients.add(coef_app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        const std::string extras = "INI was not able to parse ";
        if (msg.rfind(extras, 0) == 0) msg = "config entry '" + msg.substr(extras.size()) + "' matches no flag";
        std::cerr << "fformpp: error: " << msg << "\n\n";
        const auto* where = deepest(&app);
        std::cerr << where->help();
        return kInputError;
    }

    try {
        if (*sim_app) return simulate.run(g);
        if (*feat_app) return featurize_cmd.run(g);
        if (*eval_app) return evaluate.run(g);
        if (*train_app) return train.run(g);
        if (*fc_app) return forecast.run(g);
        if (*grid_app) return grid.run(g);
        if (*pca_app) return pca.run(g);
        if (*cluster_app) return cluster.run(g);
        if (*coef_app) return coefficients.run(g);
    } catch (const Error& e) {
        std::cerr << "fformpp: error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "fformpp: error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "fformpp: internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}
