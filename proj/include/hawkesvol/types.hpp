#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hawkesvol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Every failure surfaced by the core carries one of these codes; the C API maps
// them one-to-one onto hv_status values.
enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonConvergence,
    Unstable,
    Singular,
    DegenerateDenominator,
    ExplosionGuard,
    NegativeKernel,
    InsufficientSpan,
    UnsortedInput,
    EmptyHorizon,
    SingularSystem,
    InsufficientEvents,
    ZeroSigma,
    ZeroIntensity,
    EmptySeries,
    NonpositivePrice,
    InconsistentQuotes,
    TooFewObservations,
    SchemaViolation,
    UnparseableTimestamp,
    NoEligibleAgents,
    Io,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Level-I order types. The index order is fixed and used for every per-type
// array and for the 8-wide blocks of agent-vs-market fits.
enum class EventType : std::uint8_t {
    PriceUp = 0,   // P+
    PriceDown = 1, // P-
    TradeAsk = 2,  // Ta
    TradeBid = 3,  // Tb
    LimitAsk = 4,  // La
    LimitBid = 5,  // Lb
    CancelAsk = 6, // Ca
    CancelBid = 7, // Cb
};

inline constexpr std::size_t kNumEventTypes = 8;

inline constexpr std::array<EventType, kNumEventTypes> kAllEventTypes = {
    EventType::PriceUp,  EventType::PriceDown, EventType::TradeAsk,  EventType::TradeBid,
    EventType::LimitAsk, EventType::LimitBid,  EventType::CancelAsk, EventType::CancelBid,
};

constexpr std::size_t type_index(EventType type) noexcept { return static_cast<std::size_t>(type); }

constexpr bool is_price_type(EventType type) noexcept {
    return type == EventType::PriceUp || type == EventType::PriceDown;
}

std::string_view event_type_name(EventType type);
std::optional<EventType> parse_event_type(std::string_view name);

} // namespace hawkesvol
