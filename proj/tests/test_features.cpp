#include "fformpp/features.hpp"
#include "fformpp/rng.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>
#include <sstream>

using namespace fformpp;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

double brute_acf(const std::vector<double>& x, int k) {
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(x.size());
    double c0 = 0.0, ck = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) c0 += (x[t] - mu) * (x[t] - mu);
    for (std::size_t t = k; t < x.size(); ++t) ck += (x[t] - mu) * (x[t - k] - mu);
    return c0 > 0 ? ck / c0 : 0.0;
}

TimeSeries seasonal_series(FrequencyClass fc, std::size_t n, std::uint64_t seed) {
    const auto periods = canonical_periods(fc);
    auto y = gaussian(n, seed);
    double level = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        level += 0.3 * y[t];
        double s = 0.0;
        for (int m : periods)
            if (m > 1) s += 2.0 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / m);
        y[t] = 100.0 + level + s + y[t];
    }
    return TimeSeries("s", y, periods);
}

} // namespace

TEST_CASE("feature schema follows the table", "[features]") {
    const auto y = feature_names(FrequencyClass::Yearly);
    CHECK(y.size() == 25);
    for (const char* absent : {"seasonality_q", "sediff_acf1", "hwalpha", "seas_pacf"}) {
        CHECK(std::find(y.begin(), y.end(), absent) == y.end());
    }
    const auto q = feature_names(FrequencyClass::Quarterly);
    for (const char* present : {"seasonality_q", "hwalpha", "hwbeta", "hwgamma", "sediff_acf5"}) {
        CHECK(std::find(q.begin(), q.end(), present) != q.end());
    }
    CHECK(std::find(q.begin(), q.end(), "ur_pp") == q.end());
    const auto h = feature_names(FrequencyClass::Hourly);
    CHECK(std::find(h.begin(), h.end(), "alpha") == h.end());
    CHECK(std::find(h.begin(), h.end(), "seasonality_d") != h.end());
    CHECK(std::find(h.begin(), h.end(), "seasonality_w") != h.end());
    const auto d = feature_names(FrequencyClass::Daily);
    CHECK(std::find(d.begin(), d.end(), "seasonality_y") != d.end());
    CHECK(q.front() == "T");
    CHECK(q.back() == "diff2y_pacf5");
}

TEST_CASE("strength features on simple decompositions", "[features]") {
    std::vector<double> ramp(48);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = static_cast<double>(t);
    const auto st = strength_features(decompose(ramp, {1}));
    CHECK_THAT(st.trend, WithinAbs(1.0, 1e-9));

    DecompositionResult zero;
    zero.trend = ramp;
    zero.remainder.assign(ramp.size(), 0.0);
    const auto z = strength_features(zero);
    CHECK(z.spikiness == 0.0);
    CHECK(z.e_acf1 == 0.0);
}

TEST_CASE("white-noise trend strength is small on average", "[features]") {
    double total = 0.0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) total += strength_features(decompose(gaussian(200, 500 + r), {1})).trend;
    CHECK(total / reps < 0.15);
}

TEST_CASE("autocorrelation features match direct formulas", "[features]") {
    std::vector<double> alt(20);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
    CHECK_THAT(acf_pacf_suite(alt, 1).y_acf1, WithinAbs(-0.95, 1e-12));

    const auto x = gaussian(120, 9);
    const auto f = acf_pacf_suite(x, 4);
    double s5 = 0.0;
    for (int k = 1; k <= 5; ++k) s5 += brute_acf(x, k) * brute_acf(x, k);
    CHECK_THAT(f.y_acf1, WithinAbs(brute_acf(x, 1), 1e-10));
    CHECK_THAT(f.y_acf5, WithinAbs(s5, 1e-10));
    const auto sd = stats::diff(x, 4);
    CHECK_THAT(f.sediff_seacf1, WithinAbs(brute_acf(sd, 4), 1e-10));

    const auto wn = gaussian(1000, 10);
    CHECK(acf_pacf_suite(wn, 1).y_acf5 < 0.05);

    std::vector<double> rw(500);
    double s = 0.0;
    const auto e = gaussian(500, 11);
    for (std::size_t i = 0; i < rw.size(); ++i) rw[i] = s += e[i];
    CHECK(std::abs(acf_pacf_suite(rw, 1).diff1y_acf1) < 0.1);
}

TEST_CASE("tiled statistics", "[features]") {
    const std::vector<double> flat(40, 3.0);
    const auto [s0, l0] = tiled_stats(flat, 10);
    CHECK(s0 == 0.0);
    CHECK(l0 == 0.0);

    std::vector<double> step(100, 0.0);
    std::fill(step.begin() + 50, step.end(), 10.0);
    const auto [s1, l1] = tiled_stats(step, 10);
    CHECK(s1 > 10.0 * l1);

    const auto [s2, l2] = tiled_stats(gaussian(1000, 4), 10);
    CHECK_THAT(s2, WithinAbs(0.1, 0.05));
    (void)l2;
}

TEST_CASE("spectral entropy", "[features]") {
    CHECK(spectral_entropy(gaussian(512, 6)) >= 0.95);
    std::vector<double> sine(200);
    for (std::size_t t = 0; t < sine.size(); ++t) sine[t] = std::sin(2 * std::numbers::pi * t / 12.0);
    CHECK(spectral_entropy(sine) <= 0.3);
    CHECK(spectral_entropy(std::vector<double>(32, 1.0)) == 1.0);
    CHECK_THROWS_AS(spectral_entropy(std::vector<double>(10, 1.0)), Error);
}

TEST_CASE("Hurst exponent of noise is near one half", "[features]") {
    double total = 0.0;
    for (int r = 0; r < 20; ++r) total += hurst_exponent(gaussian(1000, 100 + r));
    CHECK_THAT(total / 20, WithinAbs(0.5, 0.1));
}

TEST_CASE("linearity and curvature of a ramp", "[features]") {
    std::vector<double> ramp(48);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = static_cast<double>(t + 1);
    const auto [lin, curv] = linearity_curvature(ramp);
    CHECK(lin > 0.0);
    CHECK(std::abs(curv) < 1e-9);
}

TEST_CASE("featurize assembles the class subset deterministically", "[features]") {
    const auto q = seasonal_series(FrequencyClass::Quarterly, 80, 3);
    const auto a = featurize(q, FrequencyClass::Quarterly);
    const auto b = featurize(q, FrequencyClass::Quarterly);
    CHECK(a.values == b.values);
    CHECK(a.names == feature_names(FrequencyClass::Quarterly));
    CHECK(a.at("T") == 80.0);
    CHECK(a.at("seasonality_q") > 0.5);

    TimeSeries y("y", gaussian(48, 12), {1});
    const auto fy = featurize(y, FrequencyClass::Yearly);
    CHECK(!fy.contains("seasonality_q"));
    CHECK(fy.contains("ur_kpss"));
    CHECK(fy.at("T") == 48.0);
}

TEST_CASE("features are invariant to affine rescaling", "[features]") {
    for (auto fc : {FrequencyClass::Yearly, FrequencyClass::Monthly}) {
        const auto s = seasonal_series(fc, 120, 77);
        std::vector<double> scaled;
        for (double v : s.values()) scaled.push_back(4.25 * v - 17.0);
        const auto a = featurize(s, fc);
        const auto b = featurize(s.with_values(scaled), fc);
        for (std::size_t i = 0; i < a.size(); ++i) {
            INFO(a.names[i]);
            CHECK_THAT(b.values[i], WithinAbs(a.values[i], 1e-6));
        }
    }
}

TEST_CASE("daily series shorter than two years drop the annual period", "[features]") {
    const auto d = seasonal_series(FrequencyClass::Daily, 400, 8);
    const auto f = featurize(d, FrequencyClass::Daily);
    CHECK(f.at("seasonality_y") == 0.0);
    CHECK(std::find(f.flags.begin(), f.flags.end(), "seasonality_y:period_dropped") != f.flags.end());
    CHECK(f.at("seasonality_w") > 0.3);
}

TEST_CASE("feature matrix CSV round trip", "[features][io]") {
    const auto q = seasonal_series(FrequencyClass::Quarterly, 60, 1);
    const auto fm = to_feature_matrix({"q1"}, {featurize(q, FrequencyClass::Quarterly)});
    std::stringstream ss;
    write_feature_matrix_csv(ss, fm);
    const auto back = read_feature_matrix_csv(ss);
    CHECK(back.names == fm.names);
    CHECK(back.values == fm.values);
    CHECK(back.frequency_class == FrequencyClass::Quarterly);
}
