#include "hawkesvol/types.hpp"

namespace hawkesvol {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ExplosionGuard: return "ExplosionGuard";
    case ErrorCode::NegativeKernel: return "NegativeKernel";
    case ErrorCode::InsufficientSpan: return "InsufficientSpan";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::EmptyHorizon: return "EmptyHorizon";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InsufficientEvents: return "InsufficientEvents";
    case ErrorCode::ZeroSigma: return "ZeroSigma";
    case ErrorCode::ZeroIntensity: return "ZeroIntensity";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::NonpositivePrice: return "NonpositivePrice";
    case ErrorCode::InconsistentQuotes: return "InconsistentQuotes";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnparseableTimestamp: return "UnparseableTimestamp";
    case ErrorCode::NoEligibleAgents: return "NoEligibleAgents";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

namespace {
constexpr std::array<std::string_view, kNumEventTypes> kTypeNames = {"P+", "P-", "Ta", "Tb",
                                                                     "La", "Lb", "Ca", "Cb"};
}

std::string_view event_type_name(EventType type) { return kTypeNames[type_index(type)]; }

std::optional<EventType> parse_event_type(std::string_view name) {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
        if (kTypeNames[i] == name) {
            return static_cast<EventType>(i);
        }
    }
    return std::nullopt;
}

} // namespace hawkesvol
