#include "fformpp/models/arima.hpp"
#include "fformpp/models/ets.hpp"
#include "fformpp/models/nnetar.hpp"
#include "fformpp/models/simple.hpp"
#include "fformpp/models/tbats.hpp"
#include "fformpp/rng.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace fformpp;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> ar1(std::size_t n, double phi, double mu, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> y(n);
    double prev = 0.0;
    for (std::size_t t = 0; t < n + 100; ++t) {
        prev = phi * prev + z(rng);
        if (t >= 100) y[t - 100] = mu + prev;
    }
    return y;
}

std::vector<double> local_level(std::size_t n, double alpha, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> y(n);
    double level = 10.0;
    for (auto& v : y) {
        const double e = z(rng);
        v = level + e;
        level += alpha * e;
    }
    return y;
}

} // namespace

TEST_CASE("simple benchmark forecasts follow their definitions", "[models]") {
    const std::vector<double> y{3, 1, 4};
    CHECK(models::naive_forecast(y, 2) == std::vector<double>{4, 4});
    const std::vector<double> ramp{1, 2, 3, 4};
    CHECK(models::drift_forecast(ramp, 2) == std::vector<double>{5, 6});
    CHECK(models::mean_forecast(ramp, 1) == std::vector<double>{2.5});
    const std::vector<double> s{1, 2, 3, 4, 10, 20, 30, 40};
    CHECK(models::seasonal_naive_forecast(s, 4, 8) == std::vector<double>{10, 20, 30, 40, 10, 20, 30, 40});
}

TEST_CASE("ETS recovers a local-level smoothing parameter", "[models][ets]") {
    const auto y = local_level(400, 0.4, 21);
    const auto f = ets::fit(y, ets::Spec{ets::Trend::None, false, 1});
    CHECK(f.converged);
    CHECK_THAT(f.params.alpha, WithinAbs(0.4, 0.12));
    CHECK(std::isfinite(f.aicc));
    const auto fc = f.forecast(3);
    CHECK(fc[0] == fc[2]);
}

TEST_CASE("ETS seasonal model forecasts a seasonal pattern", "[models][ets]") {
    std::vector<double> y(60);
    Rng rng(2);
    std::normal_distribution<double> z(0.0, 0.05);
    const double pattern[4] = {1, -2, 0.5, 0.5};
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 5.0 + pattern[t % 4] + z(rng);
    const auto f = ets::auto_fit(y, 4);
    CHECK(f.spec.seasonal);
    const auto fc = f.forecast(4);
    for (int h = 0; h < 4; ++h) CHECK_THAT(fc[h], WithinAbs(5.0 + pattern[(60 + h) % 4], 0.2));
}

TEST_CASE("CSS ARIMA estimates an AR(1) coefficient", "[models][arima]") {
    const auto y = ar1(500, 0.7, 3.0, 8);
    const auto f = arima::fit(y, arima::Order{1, 0, 0, 0, 0, 0, 1, true}, 1);
    REQUIRE(f.phi.size() == 1);
    CHECK_THAT(f.phi[0], WithinAbs(0.7, 0.08));
    CHECK_THAT(f.mean, WithinAbs(3.0, 0.4));
}

TEST_CASE("auto ARIMA differences a random walk", "[models][arima]") {
    Rng rng(4);
    std::normal_distribution<double> z;
    std::vector<double> y(200);
    double level = 0.0;
    for (auto& v : y) v = level += z(rng);
    const auto f = arima::auto_arima(y, 1);
    CHECK(f.order.d >= 1);
    const auto fc = f.forecast(5);
    for (double v : fc) CHECK(std::isfinite(v));
}

TEST_CASE("from_reflection gives stationary polynomials", "[models][arima]") {
    const std::vector<double> r{0.9, -0.8, 0.7};
    const auto phi = arima::from_reflection(r);
    CHECK(arima::min_root_modulus(phi) > 1.0);
}

TEST_CASE("KPSS is small for noise and large for a random walk", "[models][arima]") {
    const auto wn = ar1(300, 0.0, 0.0, 1);
    CHECK(arima::kpss_statistic(wn) < 0.463);
    std::vector<double> rw(wn.size());
    double s = 0.0;
    for (std::size_t i = 0; i < wn.size(); ++i) rw[i] = s += wn[i];
    CHECK(arima::kpss_statistic(rw) > 0.463);
}

TEST_CASE("theta extrapolates a trend at half slope plus level", "[models]") {
    std::vector<double> y(40);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 2.0 * static_cast<double>(t);
    const auto fc = models::theta_forecast(y, 1, 3);
    CHECK(fc[1] > fc[0]);
    CHECK(fc[0] > y.back() - 2.0);
}

TEST_CASE("TBATS handles seasonal positive data", "[models]") {
    std::vector<double> y(96);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 50.0 + 10.0 * std::sin(2 * std::numbers::pi * t / 12.0) + 0.1 * t;
    const auto fc = models::tbats_forecast(y, {12}, 12);
    for (std::size_t h = 0; h < 12; ++h) {
        const double truth = 50.0 + 10.0 * std::sin(2 * std::numbers::pi * (96 + h) / 12.0) + 0.1 * (96 + h);
        CHECK_THAT(fc[h], WithinAbs(truth, 2.0));
    }
    CHECK(models::guerrero_lambda(std::vector<double>{-1, 2, 3, 4, 5, 6}, 2) == 1.0);
}

TEST_CASE("neural network autoregression is deterministic per seed", "[models]") {
    const auto y = ar1(120, 0.5, 10.0, 3);
    models::NnetarOptions opt;
    opt.repeats = 5;
    const auto a = models::nnetar_forecast(y, 1, 4, 99, opt);
    const auto b = models::nnetar_forecast(y, 1, 4, 99, opt);
    CHECK(a == b);
    for (double v : a) CHECK_THAT(v, WithinAbs(10.0, 3.0));
}
