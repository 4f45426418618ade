#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fformpp {

enum class ErrorKind {
    NonFinite,
    EmptySeries,
    BadPeriod,
    HorizonTooLong,
    TooShort,
    FitFailed,
    ModelUnavailable,
    ZeroDenominator,
    EmptySet,
    LengthMismatch,
    DimensionMismatch,
    SingularDesign,
    FeatureMismatch,
    NumericalOverflow,
    Format,
    UnknownVersion,
    InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::BadPeriod: return "BadPeriod";
    case ErrorKind::HorizonTooLong: return "HorizonTooLong";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::FitFailed: return "FitFailed";
    case ErrorKind::ModelUnavailable: return "ModelUnavailable";
    case ErrorKind::ZeroDenominator: return "ZeroDenominator";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::FeatureMismatch: return "FeatureMismatch";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::Format: return "Format";
    case ErrorKind::UnknownVersion: return "UnknownVersion";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Rethrows with extra context prepended, keeping the original kind.
[[noreturn]] inline void rethrow_with_context(const Error& e, std::string_view context) {
    throw Error(e.kind(), std::string(context) + ": " + e.what());
}

} // namespace fformpp
