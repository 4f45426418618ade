#include "fformpp/features.hpp"
#include "fformpp/gratis.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

using namespace fformpp;

namespace {

MarSpec single(FrequencyClass fc, int d, std::size_t length) {
    MarSpec s;
    s.frequency_class = fc;
    s.periods = canonical_periods(fc);
    s.length = length;
    s.weights = {1.0};
    MarComponent c;
    c.theta = {0.0, 0.0};
    std::size_t ns = 0;
    for (int m : s.periods)
        if (m > 1) ++ns;
    c.seasonal_theta.assign(ns, 0.0);
    c.seasonal_d.assign(ns, 0);
    c.d = d;
    c.sigma = 1.0;
    s.components = {c};
    return s;
}

// Kolmogorov statistic sqrt(n) * D against the discrete uniform law on [lo, hi].
double ks_uniform(std::vector<std::size_t> x, std::size_t lo, std::size_t hi) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double width = static_cast<double>(hi - lo + 1);
    double D = 0.0;
    std::size_t i = 0;
    for (std::size_t v = lo; v <= hi; ++v) {
        while (i < x.size() && x[i] <= v) ++i;
        D = std::max(D, std::abs(static_cast<double>(i) / n - static_cast<double>(v - lo + 1) / width));
    }
    return std::sqrt(n) * D;
}

} // namespace

TEST_CASE("spec draws respect the parameter supports", "[gratis]") {
    Rng rng(1);
    for (auto fc : kAllFrequencyClasses) {
        const auto [lo, hi] = length_support(fc);
        for (int i = 0; i < 2000; ++i) {
            const auto s = sample_mar_spec(fc, rng);
            REQUIRE(s.k() >= 1);
            REQUIRE(s.k() <= 5);
            double total = 0.0;
            for (double w : s.weights) {
                CHECK(w >= 0.0);
                total += w;
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
            CHECK(s.length >= lo);
            CHECK(s.length <= hi);
            for (const auto& c : s.components) {
                CHECK(c.theta.size() == 2);
                CHECK((c.d == 0 || c.d == 1));
                CHECK(c.sigma >= 1.0);
                CHECK(c.sigma <= 5.0);
                CHECK(c.seasonal_d.size() == (fc == FrequencyClass::Yearly ? 0u : canonical_periods(fc).size()));
            }
        }
    }
    Rng q(2);
    const auto s = sample_mar_spec(FrequencyClass::Quarterly, q);
    CHECK(s.periods == std::vector<int>{4});
}

TEST_CASE("differencing probability matches its Bernoulli law", "[gratis]") {
    Rng rng(3);
    int ones = 0, total = 0;
    while (total < 10000) {
        for (const auto& c : sample_mar_spec(FrequencyClass::Monthly, rng).components) {
            ones += c.d;
            ++total;
        }
    }
    CHECK(std::abs(static_cast<double>(ones) / total - 0.9) < 0.02);
}

TEST_CASE("lengths follow the class laws", "[gratis]") {
    for (auto fc : kAllFrequencyClasses) {
        Rng rng(derive_seed(11, static_cast<std::uint64_t>(fc)));
        std::vector<std::size_t> lens(10000);
        for (auto& l : lens) l = sample_length(fc, rng);
        if (fc == FrequencyClass::Hourly) {
            const auto n748 = std::count(lens.begin(), lens.end(), std::size_t{748});
            CHECK(n748 + std::count(lens.begin(), lens.end(), std::size_t{1008}) == 10000);
            CHECK(std::abs(static_cast<double>(n748) / 10000 - 0.408) < 0.02);
        } else {
            const auto [lo, hi] = length_support(fc);
            CHECK(ks_uniform(lens, lo, hi) < 1.628);
        }
    }
}

TEST_CASE("degenerate mixtures reduce to known processes", "[gratis]") {
    Rng rng(5);
    const auto wn = simulate(single(FrequencyClass::Yearly, 0, 500), rng);
    CHECK(wn.size() == 500);
    CHECK(std::abs(acf_pacf_suite(wn.data(), 1).y_acf1) < 0.1);

    const auto rw = simulate(single(FrequencyClass::Yearly, 1, 500), rng);
    CHECK(std::abs(acf_pacf_suite(rw.data(), 1).diff1y_acf1) < 0.1);
}

TEST_CASE("seasonal differencing adds seasonal strength", "[gratis]") {
    Rng rng(6);
    double raw = 0.0, differenced = 0.0;
    for (int r = 0; r < 100; ++r) {
        auto spec = sample_mar_spec(FrequencyClass::Quarterly, rng);
        spec.length = 160;
        for (auto& c : spec.components) c.seasonal_d.assign(1, 1);
        const auto y = simulate(spec, rng);
        raw += strength_features(decompose(y.data(), {4})).seasonality.at(0);
        differenced += strength_features(decompose(stats::diff(y.data(), 4), {4})).seasonality.at(0);
    }
    CHECK(raw > differenced);
}

TEST_CASE("reference generation is reproducible and well formed", "[gratis]") {
    const auto a = generate_reference(FrequencyClass::Monthly, 10000, 42);
    REQUIRE(a.size() == 10000);
    for (const auto& s : a) {
        CHECK(s.size() >= 60);
        CHECK(s.size() <= 660);
    }
    CHECK(a[17].id() == "sim-monthly-17");
    const auto b = generate_reference(FrequencyClass::Monthly, 50, 42);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == a[i]);
    CHECK(generate_reference(FrequencyClass::Monthly, 5, 43)[0].data() != a[0].data());
    CHECK_THROWS_AS(generate_reference(FrequencyClass::Monthly, 0, 1), Error);
}

TEST_CASE("overflowing specs are re-drawn then rejected", "[gratis]") {
    auto spec = single(FrequencyClass::Yearly, 0, 60);
    spec.components[0].theta = {3.0, 0.0};
    MarOptions opt;
    opt.coef_sd = 1e-6;
    Rng rng(7);
    auto fixed = spec;
    const auto y = simulate(fixed, rng, "x", opt);
    CHECK(std::abs(fixed.components[0].theta[0]) < 1e-4);
    CHECK(y.size() == 60);

    opt.overflow = 1e-3;
    Rng rng2(7);
    CHECK_THROWS_AS(simulate(spec, rng2, "x", opt), Error);
}

TEST_CASE("simulated quarterly features are diverse", "[gratis][features]") {
    const auto sims = generate_reference(FrequencyClass::Quarterly, 1000, 99);
    std::vector<FeatureVector> rows;
    std::vector<std::string> ids;
    for (const auto& s : sims) {
        try {
            rows.push_back(featurize(s, FrequencyClass::Quarterly));
            ids.push_back(s.id());
        } catch (const Error&) {
        }
    }
    REQUIRE(rows.size() > 900);
    const auto fm = to_feature_matrix(ids, rows);
    for (Eigen::Index j = 0; j < fm.values.cols(); ++j) {
        INFO(fm.names[static_cast<std::size_t>(j)]);
        const Eigen::VectorXd col = fm.values.col(j);
        const double mu = col.mean();
        CHECK((col.array() - mu).square().sum() > 0.0);
    }
}

TEST_CASE("spec JSON round trip", "[gratis][io]") {
    Rng rng(8);
    const auto s = sample_mar_spec(FrequencyClass::Hourly, rng);
    CHECK(mar_spec_from_json(to_json(s)) == s);
    CHECK_THROWS_AS(mar_spec_from_json(nlohmann::json{{"periods", 3}}), Error);
}

TEST_CASE("ARIMA-family generator", "[gratis]") {
    const auto a = simulate_arima_family(FrequencyClass::Quarterly, 20, 5);
    REQUIRE(a.size() == 20);
    for (const auto& s : a) {
        CHECK(s.size() >= 24);
        for (double v : s.values()) CHECK(std::isfinite(v));
    }
    CHECK(simulate_arima_family(FrequencyClass::Quarterly, 20, 5)[3] == a[3]);
}
