#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace btcg {

enum class Errc : std::uint8_t {
    // input / data errors
    InvalidArgument,
    EmptyInput,
    NonPositivePrice,
    LagTooLarge,
    BadHeader,
    NoValidRows,
    MissingAnchor,
    NonPositiveBlockTime,
    GridMismatch,
    NonPositiveStock,
    NoAnchorBeforeWindow,
    WindowUncovered,
    TooShort,
    SingularRegression,
    ZeroVariance,
    InsufficientData,
    UnknownColumn,
    NonPositiveInit,
    NonPositiveVariance,
    BadCounts,
    InvalidConfig,
    IoFailure,
    // estimation
    NoConvergence,
    AllReplicationsFailed,
    // internal
    InvariantViolation,
};

enum class ErrorCategory : std::uint8_t { input = 2, convergence = 3, internal = 4 };

std::string_view errc_name(Errc code) noexcept;
ErrorCategory errc_category(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }
    [[nodiscard]] ErrorCategory category() const noexcept { return errc_category(code_); }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& detail);

}  // namespace btcg
