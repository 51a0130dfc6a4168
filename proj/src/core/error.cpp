#include "btcgarch/error.hpp"

namespace btcg {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::NonPositivePrice: return "NonPositivePrice";
        case Errc::LagTooLarge: return "LagTooLarge";
        case Errc::BadHeader: return "BadHeader";
        case Errc::NoValidRows: return "NoValidRows";
        case Errc::MissingAnchor: return "MissingAnchor";
        case Errc::NonPositiveBlockTime: return "NonPositiveBlockTime";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::NonPositiveStock: return "NonPositiveStock";
        case Errc::NoAnchorBeforeWindow: return "NoAnchorBeforeWindow";
        case Errc::WindowUncovered: return "WindowUncovered";
        case Errc::TooShort: return "TooShort";
        case Errc::SingularRegression: return "SingularRegression";
        case Errc::ZeroVariance: return "ZeroVariance";
        case Errc::InsufficientData: return "InsufficientData";
        case Errc::UnknownColumn: return "UnknownColumn";
        case Errc::NonPositiveInit: return "NonPositiveInit";
        case Errc::NonPositiveVariance: return "NonPositiveVariance";
        case Errc::BadCounts: return "BadCounts";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoFailure: return "IoFailure";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::AllReplicationsFailed: return "AllReplicationsFailed";
        case Errc::InvariantViolation: return "InvariantViolation";
    }
    return "Unknown";
}

ErrorCategory errc_category(Errc code) noexcept {
    switch (code) {
        case Errc::NoConvergence:
        case Errc::AllReplicationsFailed:
            return ErrorCategory::convergence;
        case Errc::InvariantViolation:
            return ErrorCategory::internal;
        default:
            return ErrorCategory::input;
    }
}

void fail(Errc code, const std::string& detail) {
    std::string msg(errc_name(code));
    if (!detail.empty()) {
        msg += ": ";
        msg += detail;
    }
    throw Error(code, msg);
}

}  // namespace btcg
