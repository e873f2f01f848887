#pragma once

#include "hawkesvol/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hawkesvol {

using AgentId = std::uint32_t;

struct Event {
    double t = 0.0; // seconds since session open
    AgentId agent = 0;
    EventType type = EventType::PriceUp;
    double delta = 0.0; // signed half-ticks, nonzero only on P+/P-

    bool operator==(const Event&) const = default;
};

/// One trading day of labeled level-I events. Agent labels are interned; an
/// event's `agent` indexes `agents()`.
class EventStream {
public:
    EventStream() = default;
    EventStream(double session_open, double duration, std::string day = {});

    AgentId intern(const std::string& agent);
    [[nodiscard]] std::optional<AgentId> find_agent(const std::string& agent) const;
    [[nodiscard]] const std::vector<std::string>& agents() const noexcept { return agents_; }
    [[nodiscard]] const std::string& agent_name(AgentId id) const { return agents_.at(id); }

    void push_back(const Event& event) { events_.push_back(event); }
    [[nodiscard]] const std::vector<Event>& events() const noexcept { return events_; }
    std::vector<Event>& mutable_events() noexcept { return events_; }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }

    /// Seconds since midnight at which the session opens.
    [[nodiscard]] double session_open() const noexcept { return open_; }
    [[nodiscard]] double duration() const noexcept { return duration_; }
    [[nodiscard]] const std::string& day() const noexcept { return day_; }
    void set_day(std::string day) { day_ = std::move(day); }

    /// Stable sort by (t, agent name, type).
    void sort_canonical();
    /// Throws UnsortedInput / InvalidArgument when the stream invariants fail.
    void validate() const;
    [[nodiscard]] bool is_sorted() const;

    /// Per-agent, per-type event counts; rows follow `agents()`.
    [[nodiscard]] std::vector<std::array<std::size_t, kNumEventTypes>> counts() const;

    bool operator==(const EventStream&) const = default;

private:
    double open_ = 0.0;
    double duration_ = 0.0;
    std::string day_;
    std::vector<std::string> agents_;
    std::vector<Event> events_;
};

/// Copy of `stream` in which every agent not in `keep` is relabeled as
/// `remainder`. Event order is untouched.
EventStream merge_agents(const EventStream& stream, const std::vector<std::string>& keep,
                         const std::string& remainder);

} // namespace hawkesvol
