#pragma once

#include "hawkesvol/event_stream.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hawkesvol {

enum class OrderAction { Insert, Cancel, Modify, Trade };
enum class Side { Bid, Ask };

/// One raw order-flow record with level-I context. Prices are in half-ticks;
/// for trades `side` is the agent's direction (bid = buy, ask = sell).
struct RawOrderRecord {
    std::int64_t ts_ns = 0; // nanoseconds since midnight
    std::string agent;
    OrderAction action = OrderAction::Insert;
    Side side = Side::Bid;
    double price = 0.0;
    double size = 0.0;
    std::string order_id; // empty when the feed carries none
    double bb_pre = 0.0;
    double ba_pre = 0.0;
    double bb_post = 0.0;
    double ba_post = 0.0;
    bool aggressor = false;
};

struct Classification {
    std::optional<EventType> type; // nullopt: deep book or passive fill, dropped
    double delta = 0.0;
};

/// Maps a record to one of the eight level-I types (or none). A mid-price
/// change wins over the action; otherwise the action and the quote it touches
/// decide. Passive trade fills never produce an event.
Classification classify(const RawOrderRecord& record);

struct SessionWindow {
    double open = 8.0 * 3600.0;   // seconds since midnight
    double close = 16.5 * 3600.0;

    [[nodiscard]] double duration() const noexcept { return close - open; }
};

struct IngestReport {
    std::size_t rows = 0;
    std::size_t kept = 0;
    std::size_t out_of_session = 0;
    std::size_t unclassified = 0;
};

/// Parses either an integer nanosecond count or HH:MM:SS[.fraction].
std::int64_t parse_timestamp(std::string_view text, std::size_t row);

EventStream read_events_csv(std::istream& in, const SessionWindow& session, const std::string& day,
                            IngestReport* report = nullptr);
EventStream read_events_csv(const std::filesystem::path& path, const SessionWindow& session,
                            IngestReport* report = nullptr);
void write_events_csv(std::ostream& out, const EventStream& stream);
void write_events_csv(const std::filesystem::path& path, const EventStream& stream);

std::vector<RawOrderRecord> read_raw_csv(std::istream& in, const SessionWindow& session,
                                         IngestReport* report = nullptr);
std::vector<RawOrderRecord> read_raw_csv(const std::filesystem::path& path, const SessionWindow& session,
                                         IngestReport* report = nullptr);

/// Classifies time-ordered records into a stream; dropped records are counted
/// in `report->unclassified`.
EventStream classify_records(std::span<const RawOrderRecord> records, const SessionWindow& session,
                             const std::string& day, IngestReport* report = nullptr);

/// Permutes agent labels independently within each event type.
EventStream shuffle_control(const EventStream& stream, std::uint64_t seed);

struct DailyAgentFeatures {
    std::string agent;
    std::string day;
    std::optional<double> eod_position_ratio;          // %
    std::optional<double> order_lifetime_median;       // s
    std::optional<double> inter_event_time_median;     // s
    std::optional<double> aggressive_volume_fraction;  // %
    std::optional<double> presence_l1;                 // %, supplied externally
    std::array<std::size_t, kNumEventTypes> counts{};
    bool missing_order_ids = false;
};

DailyAgentFeatures compute_features(std::span<const RawOrderRecord> records, const EventStream& stream,
                                    const std::string& agent, std::optional<double> presence = std::nullopt);

void write_features_csv(std::ostream& out, std::span<const DailyAgentFeatures> rows);

struct DecileSummary {
    std::string feature;
    std::array<double, 11> edges{};
    std::array<double, 10> mean{};
    std::array<double, 10> standard_error{};
    std::array<std::size_t, 10> count{};
};

/// Pools all (feature, target) observations, splits them into ten rank
/// deciles (stable on ties) and reports mean and standard error per decile.
DecileSummary decile_conditional_mean(std::span<const std::pair<double, double>> observations,
                                      std::string feature = {});

double median(std::vector<double> values);

} // namespace hawkesvol
