#include "fformpp/decompose.hpp"
#include "fformpp/rng.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace fformpp;

namespace {

double var(const std::vector<double>& x) { return stats::variance(x); }

void check_additive(std::span<const double> y, const DecompositionResult& d) {
    for (std::size_t t = 0; t < y.size(); ++t) {
        double s = d.trend[t] + d.remainder[t];
        for (const auto& c : d.seasonal) s += c[t];
        CHECK(std::abs(s - y[t]) < 1e-8);
    }
}

} // namespace

TEST_CASE("constant series decompose to themselves", "[decompose]") {
    const std::vector<double> y(40, 5.0);
    for (std::vector<int> periods : {std::vector<int>{1}, std::vector<int>{4}}) {
        const auto d = decompose(y, periods);
        for (std::size_t t = 0; t < y.size(); ++t) {
            CHECK(std::abs(d.trend[t] - 5.0) < 1e-10);
            CHECK(std::abs(d.remainder[t]) < 1e-10);
        }
    }
}

TEST_CASE("a pure sinusoid is captured by the seasonal component", "[decompose]") {
    std::vector<double> y(120);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 12.0);
    const auto d = decompose(y, {12});
    check_additive(y, d);
    CHECK(var(d.seasonal[0]) / var(y) > 0.95);
    CHECK(var(d.remainder) / var(y) < 0.01);
}

TEST_CASE("a linear ramp is all trend", "[decompose]") {
    std::vector<double> y(48);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = static_cast<double>(t + 1);
    const auto d = decompose(y, {1});
    for (std::size_t t = 0; t < y.size(); ++t) {
        CHECK(std::abs(d.trend[t] - y[t]) < 1e-8);
        CHECK(std::abs(d.remainder[t]) < 1e-8);
    }
}

TEST_CASE("two seasonal periods are removed sequentially", "[decompose]") {
    Rng rng(5);
    std::normal_distribution<double> z(0.0, 0.1);
    std::vector<double> y(24 * 7 * 4);
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double td = static_cast<double>(t);
        y[t] = 0.01 * td + std::sin(2 * std::numbers::pi * td / 24.0) + 0.5 * std::cos(2 * std::numbers::pi * td / 168.0) + z(rng);
    }
    const auto d = decompose(y, {24, 168});
    check_additive(y, d);
    REQUIRE(d.seasonal.size() == 2);
    CHECK(var(d.seasonal[0]) > 0.4);
    CHECK(var(d.seasonal[1]) > 0.08);
    CHECK(var(d.remainder) < 0.05);
}

TEST_CASE("series shorter than two cycles are too short", "[decompose]") {
    const std::vector<double> y(7, 1.0);
    CHECK_THROWS_AS(decompose(y, {4}), Error);
}

TEST_CASE("stl with a moving seasonal window matches reference values", "[decompose][stl]") {
    const std::vector<double> y{13.429, 7.511,  11.393, 9.003,  12.883, 10.349, 10.886, 10.438, 13.794,
                                14.026, 13.658, 11.553, 15.403, 12.432, 13.961, 12.726, 17.137, 13.933,
                                16.57,  14.06,  18.017, 16.382, 17.482, 15.046, 19.072, 16.878};
    // statsmodels STL(period=4, seasonal=11, seasonal_deg=0)
    const std::vector<double> seasonal{
        2.13918029246262,  -0.874482116339869, 0.374114843326414, -1.63932658100309, 2.12301760379103,
        -0.853590948656125, 0.385008396235317, -1.65288734277705, 2.09405693697858,  -0.808049674153796,
        0.387846045562633, -1.67283321613544, 1.99684440295189,  -0.669249331876743, 0.39311605217654,
        -1.72160263306061, 1.95822101186758,  -0.623316333628516, 0.411085819442431, -1.74725738906846,
        1.94457687099449,  -0.610707582317166, 0.428477647917176, -1.76340780059017, 1.93666167611921,
        -0.605819766315403};
    const std::vector<double> trend{
        10.1838445940806, 10.2790630613284, 10.3541302564919, 10.5992864405081, 10.8432867811141,
        10.9420534618345, 11.2343707921169, 11.7686152510199, 12.6408612271197, 13.1941769321373,
        13.516252719419,  13.431871803604,  13.2843240332614, 13.4462343898827, 13.8187876270988,
        14.2856877640452, 14.7686154500095, 15.241074123955,  15.5511512973537, 15.9588491646082,
        16.3472027622813, 16.6354030845364, 16.8853660121566, 17.0480399404736, 17.2046392831788,
        17.3619955185035};
    const auto d = stl(y, 4);
    check_additive(y, d);
    for (std::size_t t = 0; t < y.size(); ++t) {
        CHECK(d.seasonal[0][t] == Catch::Approx(seasonal[t]).margin(1e-10));
        CHECK(d.trend[t] == Catch::Approx(trend[t]).margin(1e-10));
    }
}
