#include "hawkesvol/event_stream.hpp"

#include <algorithm>
#include <cmath>

namespace hawkesvol {

EventStream::EventStream(double session_open, double duration, std::string day)
    : open_(session_open), duration_(duration), day_(std::move(day)) {
    if (!(duration > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "session duration must be positive");
    }
}

AgentId EventStream::intern(const std::string& agent) {
    if (auto id = find_agent(agent)) {
        return *id;
    }
    agents_.push_back(agent);
    return static_cast<AgentId>(agents_.size() - 1);
}

std::optional<AgentId> EventStream::find_agent(const std::string& agent) const {
    const auto it = std::find(agents_.begin(), agents_.end(), agent);
    if (it == agents_.end()) {
        return std::nullopt;
    }
    return static_cast<AgentId>(it - agents_.begin());
}

void EventStream::sort_canonical() {
    std::stable_sort(events_.begin(), events_.end(), [this](const Event& a, const Event& b) {
        if (a.t != b.t) {
            return a.t < b.t;
        }
        if (a.agent != b.agent) {
            return agents_[a.agent] < agents_[b.agent];
        }
        return type_index(a.type) < type_index(b.type);
    });
}

bool EventStream::is_sorted() const {
    return std::is_sorted(events_.begin(), events_.end(),
                          [](const Event& a, const Event& b) { return a.t < b.t; });
}

void EventStream::validate() const {
    if (!is_sorted()) {
        throw Error(ErrorCode::UnsortedInput, "event timestamps decrease");
    }
    for (const Event& e : events_) {
        if (!(e.t >= 0.0) || !(e.t < duration_)) {
            throw Error(ErrorCode::InvalidArgument, "event outside the session window");
        }
        if (e.agent >= agents_.size()) {
            throw Error(ErrorCode::InvalidArgument, "event references an unknown agent");
        }
        const bool sign_ok = (e.type == EventType::PriceUp && e.delta > 0.0) ||
                             (e.type == EventType::PriceDown && e.delta < 0.0) ||
                             (!is_price_type(e.type) && e.delta == 0.0);
        if (!sign_ok) {
            throw Error(ErrorCode::InvalidArgument, "jump sign does not match event type");
        }
    }
}

std::vector<std::array<std::size_t, kNumEventTypes>> EventStream::counts() const {
    std::vector<std::array<std::size_t, kNumEventTypes>> out(agents_.size());
    for (auto& row : out) {
        row.fill(0);
    }
    for (const Event& e : events_) {
        ++out[e.agent][type_index(e.type)];
    }
    return out;
}

EventStream merge_agents(const EventStream& stream, const std::vector<std::string>& keep,
                         const std::string& remainder) {
    EventStream out(stream.session_open(), stream.duration(), stream.day());
    std::vector<AgentId> remap(stream.agents().size());
    for (const auto& name : keep) {
        out.intern(name);
    }
    for (AgentId a = 0; a < stream.agents().size(); ++a) {
        const auto& name = stream.agent_name(a);
        const bool kept = std::find(keep.begin(), keep.end(), name) != keep.end();
        remap[a] = out.intern(kept ? name : remainder);
    }
    for (Event e : stream.events()) {
        e.agent = remap[e.agent];
        out.push_back(e);
    }
    return out;
}

} // namespace hawkesvol
