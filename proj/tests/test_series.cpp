#include "fformpp/series.hpp"
#include "fformpp/series_io.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

using namespace fformpp;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST_CASE("validate accepts a minimal series and rejects invariant violations", "[series]") {
    TimeSeries ok("a", {1, 2, 3}, {1});
    CHECK(validate(ok) == ok);
    CHECK(validate(validate(ok)) == ok);

    TimeSeries nan_series("b", {1, std::numeric_limits<double>::quiet_NaN()}, {1});
    CHECK(kind_of([&] { validate(nan_series); }) == ErrorKind::NonFinite);

    TimeSeries short_hourly("c", {1, 2}, {24, 168});
    CHECK(kind_of([&] { validate(short_hourly); }) == ErrorKind::BadPeriod);

    TimeSeries empty("d", {}, {1});
    CHECK(kind_of([&] { validate(empty); }) == ErrorKind::EmptySeries);

    TimeSeries unordered("e", std::vector<double>(400, 1.0), {168, 24});
    CHECK(kind_of([&] { validate(unordered); }) == ErrorKind::BadPeriod);
}

TEST_CASE("split keeps a fixed origin", "[series]") {
    TimeSeries s("s", {1, 2, 3, 4, 5}, {1});
    const auto sp = split(s, 2);
    CHECK(std::vector<double>(sp.train.values().begin(), sp.train.values().end()) == std::vector<double>{1, 2, 3});
    CHECK(std::vector<double>(sp.test.values().begin(), sp.test.values().end()) == std::vector<double>{4, 5});
    CHECK(sp.horizon == 2);

    TimeSeries two("t", {1, 2}, {1});
    CHECK(kind_of([&] { split(two, 2); }) == ErrorKind::HorizonTooLong);

    TimeSeries q("q", std::vector<double>(24, 1.0), {4});
    CHECK(split(q, 8).train.size() == 16);

    for (int h = 1; h < 5; ++h) {
        const auto p = split(s, h);
        std::vector<double> joined(p.train.values().begin(), p.train.values().end());
        joined.insert(joined.end(), p.test.values().begin(), p.test.values().end());
        CHECK(joined == s.data());
    }
}

TEST_CASE("frequency classes map to canonical periods and horizons", "[series]") {
    CHECK(canonical_periods(FrequencyClass::Yearly) == std::vector<int>{1});
    CHECK(canonical_periods(FrequencyClass::Quarterly) == std::vector<int>{4});
    CHECK(canonical_periods(FrequencyClass::Monthly) == std::vector<int>{12});
    CHECK(canonical_periods(FrequencyClass::Weekly) == std::vector<int>{52});
    CHECK(canonical_periods(FrequencyClass::Daily) == std::vector<int>{7, 365});
    CHECK(canonical_periods(FrequencyClass::Hourly) == std::vector<int>{24, 168});
    CHECK(default_horizon(FrequencyClass::Yearly) == 6);
    CHECK(default_horizon(FrequencyClass::Quarterly) == 8);
    CHECK(default_horizon(FrequencyClass::Monthly) == 18);
    CHECK(default_horizon(FrequencyClass::Weekly) == 13);
    CHECK(default_horizon(FrequencyClass::Daily) == 14);
    CHECK(default_horizon(FrequencyClass::Hourly) == 48);
    for (auto fc : kAllFrequencyClasses) {
        CHECK(parse_frequency_class(to_string(fc)) == fc);
        CHECK(frequency_class_of(canonical_periods(fc)) == fc);
    }
}

TEST_CASE("CSV and JSON-lines round trip losslessly", "[series][io]") {
    std::vector<TimeSeries> in{TimeSeries("x1", {0.1, 1.0 / 3.0, -2.5e-300, 1e300}, {4}),
                               TimeSeries("x2", {1, 2, 3, 4, 5}, {24, 168}),
                               TimeSeries("x3", {std::nextafter(1.0, 2.0)}, {1})};
    std::stringstream csv;
    write_series_csv(csv, in);
    CHECK(read_series_csv(csv) == in);

    std::stringstream jl;
    write_series_jsonl(jl, in);
    CHECK(read_series_jsonl(jl) == in);
}

TEST_CASE("malformed input is a format error", "[series][io]") {
    std::stringstream bad("a,4,1,2,x\n");
    CHECK(kind_of([&] { read_series_csv(bad); }) == ErrorKind::Format);
}
