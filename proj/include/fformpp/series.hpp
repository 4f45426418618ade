#pragma once

#include "fformpp/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fformpp {

/// Observations plus one or two seasonal periods. Immutable once built.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(std::string id, std::vector<double> values, std::vector<int> periods)
        : id_(std::move(id)), values_(std::move(values)), periods_(std::move(periods)) {}

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }
    [[nodiscard]] const std::vector<int>& periods() const noexcept { return periods_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

    /// Shortest seasonal period (1 for non-seasonal series).
    [[nodiscard]] int period() const noexcept { return periods_.empty() ? 1 : periods_.front(); }
    [[nodiscard]] int max_period() const noexcept { return periods_.empty() ? 1 : periods_.back(); }
    [[nodiscard]] bool seasonal() const noexcept { return max_period() > 1; }

    [[nodiscard]] TimeSeries with_values(std::vector<double> values) const {
        return TimeSeries(id_, std::move(values), periods_);
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::string id_;
    std::vector<double> values_;
    std::vector<int> periods_{1};
};

enum class FrequencyClass { Yearly, Quarterly, Monthly, Weekly, Daily, Hourly };

inline constexpr std::array<FrequencyClass, 6> kAllFrequencyClasses{
    FrequencyClass::Yearly, FrequencyClass::Quarterly, FrequencyClass::Monthly,
    FrequencyClass::Weekly, FrequencyClass::Daily,     FrequencyClass::Hourly};

inline std::vector<int> canonical_periods(FrequencyClass fc) {
    switch (fc) {
    case FrequencyClass::Yearly: return {1};
    case FrequencyClass::Quarterly: return {4};
    case FrequencyClass::Monthly: return {12};
    case FrequencyClass::Weekly: return {52};
    case FrequencyClass::Daily: return {7, 365};
    case FrequencyClass::Hourly: return {24, 168};
    }
    return {1};
}

/// M4 competition horizons.
inline int default_horizon(FrequencyClass fc) {
    switch (fc) {
    case FrequencyClass::Yearly: return 6;
    case FrequencyClass::Quarterly: return 8;
    case FrequencyClass::Monthly: return 18;
    case FrequencyClass::Weekly: return 13;
    case FrequencyClass::Daily: return 14;
    case FrequencyClass::Hourly: return 48;
    }
    return 1;
}

inline std::string_view to_string(FrequencyClass fc) {
    switch (fc) {
    case FrequencyClass::Yearly: return "yearly";
    case FrequencyClass::Quarterly: return "quarterly";
    case FrequencyClass::Monthly: return "monthly";
    case FrequencyClass::Weekly: return "weekly";
    case FrequencyClass::Daily: return "daily";
    case FrequencyClass::Hourly: return "hourly";
    }
    return "unknown";
}

inline FrequencyClass parse_frequency_class(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto fc : kAllFrequencyClasses) {
        if (to_string(fc) == lower) return fc;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown frequency class '" + std::string(name) + "'");
}

/// Infers the class whose canonical periods equal the given ones.
inline FrequencyClass frequency_class_of(const std::vector<int>& periods) {
    for (auto fc : kAllFrequencyClasses) {
        if (canonical_periods(fc) == periods) return fc;
    }
    throw Error(ErrorKind::BadPeriod, "periods do not match any frequency class");
}

/// Returns the series unchanged when it satisfies every invariant.
inline const TimeSeries& validate(const TimeSeries& series) {
    if (series.size() == 0) throw Error(ErrorKind::EmptySeries, "series '" + series.id() + "' is empty");
    for (double v : series.values()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "series '" + series.id() + "' has a non-finite value");
    }
    const auto& periods = series.periods();
    if (periods.empty() || periods.size() > 2) {
        throw Error(ErrorKind::BadPeriod, "series '" + series.id() + "' must have one or two periods");
    }
    for (int m : periods) {
        if (m < 1 || static_cast<std::size_t>(m) > series.size()) {
            throw Error(ErrorKind::BadPeriod, "series '" + series.id() + "' has period " + std::to_string(m) +
                                                  " outside [1, " + std::to_string(series.size()) + "]");
        }
    }
    if (periods.size() == 2 && periods[0] >= periods[1]) {
        throw Error(ErrorKind::BadPeriod, "series '" + series.id() + "' periods must be strictly increasing");
    }
    return series;
}

struct SplitSeries {
    TimeSeries train;
    TimeSeries test;
    int horizon = 0;
};

/// Fixed-origin split: the last `horizon` points become the test period.
inline SplitSeries split(const TimeSeries& series, int horizon) {
    if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    if (static_cast<std::size_t>(horizon) >= series.size()) {
        throw Error(ErrorKind::HorizonTooLong, "horizon " + std::to_string(horizon) + " >= length " +
                                                   std::to_string(series.size()) + " of '" + series.id() + "'");
    }
    const auto& v = series.data();
    const auto cut = v.end() - horizon;
    return SplitSeries{TimeSeries(series.id(), std::vector<double>(v.begin(), cut), series.periods()),
                       TimeSeries(series.id(), std::vector<double>(cut, v.end()), series.periods()), horizon};
}

} // namespace fformpp
