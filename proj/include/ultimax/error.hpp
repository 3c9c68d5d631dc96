#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ultimax {

enum class ErrorCode {
    NonPositiveVolatility,
    BadGeneratorRow,
    NonPositiveHorizon,
    InvalidModel,     ///< dimension mismatch, m = 0 or non-finite entries
    InvalidArgument,
    GridTooCoarse,
    NonMonotoneSlice,
    NotApplicable,
    Config,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NonPositiveVolatility: return "NonPositiveVolatility";
    case ErrorCode::BadGeneratorRow: return "BadGeneratorRow";
    case ErrorCode::NonPositiveHorizon: return "NonPositiveHorizon";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::NonMonotoneSlice: return "NonMonotoneSlice";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// what() without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace ultimax
