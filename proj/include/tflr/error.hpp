#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tflr {

enum class Errc {
    NegativeEntry,
    RowSumViolation,
    TooFewComponents,
    ZeroRowSum,
    EmptyMatrix,
    DimensionMismatch,
    InvalidConfig,
    NonFinite,
    NotPositiveDefinite,
    Infeasible,
    IterationLimit,
    InvalidAlpha,
    InvalidSpec,
    InvalidGrid,
    InsufficientSizes,
    UnpairedRecords,
    ParseError,
};

inline constexpr std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::NegativeEntry: return "NegativeEntry";
        case Errc::RowSumViolation: return "RowSumViolation";
        case Errc::TooFewComponents: return "TooFewComponents";
        case Errc::ZeroRowSum: return "ZeroRowSum";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::NonFinite: return "NonFinite";
        case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
        case Errc::Infeasible: return "Infeasible";
        case Errc::IterationLimit: return "IterationLimit";
        case Errc::InvalidAlpha: return "InvalidAlpha";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::InvalidGrid: return "InvalidGrid";
        case Errc::InsufficientSizes: return "InsufficientSizes";
        case Errc::UnpairedRecords: return "UnpairedRecords";
        case Errc::ParseError: return "ParseError";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code.
/// what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace tflr
