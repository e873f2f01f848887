#include "hawkesvol/data_pipeline.hpp"

#include "hawkesvol/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace hawkesvol {

namespace {

constexpr std::string_view kEventsHeader = "ts_ns,agent_id,event_type,delta_half_ticks";
constexpr std::string_view kRawHeader =
    "ts_ns,agent_id,action,side,price_ht,size,order_id,bb_pre,ba_pre,bb_post,ba_post,aggressor";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

[[noreturn]] void schema_error(std::size_t row, const std::string& what) {
    throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(row) + ": " + what);
}

double parse_double(std::string_view text, std::size_t row, const char* column) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        schema_error(row, std::string("column ") + column + " is not a number: '" + std::string(text) + "'");
    }
    return value;
}

// Reads the header line and checks it against the schema.
void expect_header(std::istream& in, std::string_view header) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::SchemaViolation, "missing header; expected '" + std::string(header) + "'");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line.erase(0, 3); // UTF-8 byte order mark
    }
    const auto got = split(line);
    const auto want = split(header);
    if (got != want) {
        throw Error(ErrorCode::SchemaViolation,
                    "header mismatch: got '" + std::string(trim(line)) + "', expected '" + std::string(header) + "'");
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return in;
}

bool in_session(std::int64_t ts_ns, const SessionWindow& session) {
    const double t = static_cast<double>(ts_ns) * 1e-9;
    return t >= session.open && t < session.close;
}

double mid_sum(double bid, double ask) { return bid + ask; }

} // namespace

std::int64_t parse_timestamp(std::string_view text, std::size_t row) {
    text = trim(text);
    if (text.empty()) {
        throw Error(ErrorCode::UnparseableTimestamp, "row " + std::to_string(row) + ": empty timestamp");
    }
    if (text.find(':') == std::string_view::npos) {
        std::int64_t ns = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), ns);
        if (ec != std::errc() || ptr != text.data() + text.size() || ns < 0) {
            throw Error(ErrorCode::UnparseableTimestamp,
                        "row " + std::to_string(row) + ": '" + std::string(text) + "'");
        }
        return ns;
    }
    // HH:MM:SS[.fraction]
    int hh = 0;
    int mm = 0;
    int ss = 0;
    std::int64_t frac_ns = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    auto read_int = [&](int& out) {
        const auto [ptr, ec] = std::from_chars(p, end, out);
        if (ec != std::errc() || ptr == p) {
            return false;
        }
        p = ptr;
        return true;
    };
    bool ok = read_int(hh) && p < end && *p++ == ':' && read_int(mm) && p < end && *p++ == ':' && read_int(ss);
    if (ok && p < end) {
        ok = *p++ == '.';
        int digits = 0;
        while (ok && p < end && digits < 9) {
            if (*p < '0' || *p > '9') {
                ok = false;
                break;
            }
            frac_ns = frac_ns * 10 + (*p++ - '0');
            ++digits;
        }
        ok = ok && p == end && digits > 0;
        for (; digits < 9; ++digits) {
            frac_ns *= 10;
        }
    }
    if (!ok || hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 59) {
        throw Error(ErrorCode::UnparseableTimestamp, "row " + std::to_string(row) + ": '" + std::string(text) + "'");
    }
    return ((static_cast<std::int64_t>(hh) * 60 + mm) * 60 + ss) * 1'000'000'000LL + frac_ns;
}

EventStream read_events_csv(std::istream& in, const SessionWindow& session, const std::string& day,
                            IngestReport* report) {
    expect_header(in, kEventsHeader);
    EventStream stream(session.open, session.duration(), day);
    IngestReport local;
    struct Row {
        std::int64_t ts;
        Event event;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        ++local.rows;
        const auto fields = split(line);
        if (fields.size() != 4) {
            schema_error(row, "expected 4 columns, found " + std::to_string(fields.size()));
        }
        const std::int64_t ts = parse_timestamp(fields[0], row);
        if (fields[1].empty()) {
            schema_error(row, "empty agent_id");
        }
        const auto type = parse_event_type(fields[2]);
        if (!type) {
            schema_error(row, "unknown event_type '" + std::string(fields[2]) + "'");
        }
        const double delta = parse_double(fields[3], row, "delta_half_ticks");
        const bool sign_ok = (*type == EventType::PriceUp && delta > 0.0) ||
                             (*type == EventType::PriceDown && delta < 0.0) ||
                             (!is_price_type(*type) && delta == 0.0);
        if (!sign_ok) {
            schema_error(row, "delta_half_ticks sign does not match event_type");
        }
        if (!in_session(ts, session)) {
            ++local.out_of_session;
            continue;
        }
        const AgentId agent = stream.intern(std::string(fields[1]));
        rows.push_back({ts, Event{static_cast<double>(ts) * 1e-9 - session.open, agent, *type, delta}});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (const Row& r : rows) {
        stream.push_back(r.event);
    }
    local.kept = rows.size();
    if (report) {
        *report = local;
    }
    return stream;
}

EventStream read_events_csv(const std::filesystem::path& path, const SessionWindow& session,
                            IngestReport* report) {
    auto in = open_input(path);
    try {
        return read_events_csv(in, session, path.stem().string(), report);
    } catch (const Error& err) {
        throw Error(err.code(), path.string() + ": " + err.what());
    }
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
    out << kEventsHeader << '\n';
    for (const Event& e : stream.events()) {
        const auto ts = static_cast<std::int64_t>(std::llround((stream.session_open() + e.t) * 1e9));
        out << ts << ',' << stream.agent_name(e.agent) << ',' << event_type_name(e.type) << ','
            << format_number(e.delta) << '\n';
    }
}

void write_events_csv(const std::filesystem::path& path, const EventStream& stream) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    write_events_csv(out, stream);
}

std::vector<RawOrderRecord> read_raw_csv(std::istream& in, const SessionWindow& session, IngestReport* report) {
    expect_header(in, kRawHeader);
    IngestReport local;
    std::vector<RawOrderRecord> records;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        ++local.rows;
        const auto f = split(line);
        if (f.size() != 12) {
            schema_error(row, "expected 12 columns, found " + std::to_string(f.size()));
        }
        RawOrderRecord r;
        r.ts_ns = parse_timestamp(f[0], row);
        if (f[1].empty()) {
            schema_error(row, "empty agent_id");
        }
        r.agent = std::string(f[1]);
        if (f[2] == "insert") {
            r.action = OrderAction::Insert;
        } else if (f[2] == "cancel") {
            r.action = OrderAction::Cancel;
        } else if (f[2] == "modify") {
            r.action = OrderAction::Modify;
        } else if (f[2] == "trade") {
            r.action = OrderAction::Trade;
        } else {
            schema_error(row, "unknown action '" + std::string(f[2]) + "'");
        }
        if (f[3] == "bid") {
            r.side = Side::Bid;
        } else if (f[3] == "ask") {
            r.side = Side::Ask;
        } else {
            schema_error(row, "side must be bid or ask");
        }
        r.price = parse_double(f[4], row, "price_ht");
        r.size = parse_double(f[5], row, "size");
        r.order_id = std::string(f[6]);
        r.bb_pre = parse_double(f[7], row, "bb_pre");
        r.ba_pre = parse_double(f[8], row, "ba_pre");
        r.bb_post = parse_double(f[9], row, "bb_post");
        r.ba_post = parse_double(f[10], row, "ba_post");
        if (f[11] == "1" || f[11] == "true") {
            r.aggressor = true;
        } else if (f[11] == "0" || f[11] == "false" || f[11].empty()) {
            r.aggressor = false;
        } else {
            schema_error(row, "aggressor must be 0/1");
        }
        if (r.size < 0.0) {
            schema_error(row, "negative size");
        }
        if (!in_session(r.ts_ns, session)) {
            ++local.out_of_session;
            continue;
        }
        records.push_back(std::move(r));
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const RawOrderRecord& a, const RawOrderRecord& b) { return a.ts_ns < b.ts_ns; });
    local.kept = records.size();
    if (report) {
        *report = local;
    }
    return records;
}

std::vector<RawOrderRecord> read_raw_csv(const std::filesystem::path& path, const SessionWindow& session,
                                         IngestReport* report) {
    auto in = open_input(path);
    try {
        return read_raw_csv(in, session, report);
    } catch (const Error& err) {
        throw Error(err.code(), path.string() + ": " + err.what());
    }
}

Classification classify(const RawOrderRecord& r) {
    if (!(r.bb_pre < r.ba_pre) || !(r.bb_post < r.ba_post)) {
        throw Error(ErrorCode::InconsistentQuotes, "crossed or locked quotes for agent " + r.agent);
    }
    if (r.action == OrderAction::Trade && !r.aggressor) {
        return {};
    }
    // Mid change in half-ticks: ((bb + ba)_post - (bb + ba)_pre) / 2.
    const double delta = 0.5 * (mid_sum(r.bb_post, r.ba_post) - mid_sum(r.bb_pre, r.ba_pre));
    if (delta > 0.0) {
        return {EventType::PriceUp, delta};
    }
    if (delta < 0.0) {
        return {EventType::PriceDown, delta};
    }
    switch (r.action) {
    case OrderAction::Trade:
        if (r.price == r.ba_pre) {
            return {EventType::TradeAsk, 0.0};
        }
        if (r.price == r.bb_pre) {
            return {EventType::TradeBid, 0.0};
        }
        return {};
    case OrderAction::Insert:
        if (r.side == Side::Ask && r.price == r.ba_pre) {
            return {EventType::LimitAsk, 0.0};
        }
        if (r.side == Side::Bid && r.price == r.bb_pre) {
            return {EventType::LimitBid, 0.0};
        }
        return {};
    case OrderAction::Cancel:
    case OrderAction::Modify:
        if (r.side == Side::Ask && r.price == r.ba_pre) {
            return {EventType::CancelAsk, 0.0};
        }
        if (r.side == Side::Bid && r.price == r.bb_pre) {
            return {EventType::CancelBid, 0.0};
        }
        return {};
    }
    return {};
}

EventStream classify_records(std::span<const RawOrderRecord> records, const SessionWindow& session,
                             const std::string& day, IngestReport* report) {
    EventStream stream(session.open, session.duration(), day);
    std::size_t dropped = 0;
    for (const auto& r : records) {
        const Classification c = classify(r);
        if (!c.type) {
            ++dropped;
            continue;
        }
        const double t = static_cast<double>(r.ts_ns) * 1e-9 - session.open;
        if (t < 0.0 || t >= session.duration()) {
            continue;
        }
        stream.push_back(Event{t, stream.intern(r.agent), *c.type, c.delta});
    }
    if (!stream.is_sorted()) {
        std::stable_sort(stream.mutable_events().begin(), stream.mutable_events().end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    if (report) {
        report->unclassified += dropped;
        report->kept = stream.size();
    }
    return stream;
}

EventStream shuffle_control(const EventStream& stream, std::uint64_t seed) {
    EventStream out = stream;
    std::mt19937_64 rng(seed);
    auto& events = out.mutable_events();
    for (EventType type : kAllEventTypes) {
        std::vector<std::size_t> positions;
        std::vector<AgentId> labels;
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (events[i].type == type) {
                positions.push_back(i);
                labels.push_back(events[i].agent);
            }
        }
        std::shuffle(labels.begin(), labels.end(), rng);
        for (std::size_t k = 0; k < positions.size(); ++k) {
            events[positions[k]].agent = labels[k];
        }
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

DailyAgentFeatures compute_features(std::span<const RawOrderRecord> records, const EventStream& stream,
                                    const std::string& agent, std::optional<double> presence) {
    DailyAgentFeatures f;
    f.agent = agent;
    f.day = stream.day();
    f.presence_l1 = presence;
    f.counts.fill(0);

    std::vector<const RawOrderRecord*> mine;
    for (const auto& r : records) {
        if (r.agent == agent) {
            mine.push_back(&r);
        }
    }
    std::stable_sort(mine.begin(), mine.end(),
                     [](const RawOrderRecord* a, const RawOrderRecord* b) { return a->ts_ns < b->ts_ns; });

    double signed_volume = 0.0;
    double volume = 0.0;
    double aggressive = 0.0;
    std::map<std::string, std::int64_t> open_orders;
    std::vector<double> lifetimes;
    for (const RawOrderRecord* r : mine) {
        switch (r->action) {
        case OrderAction::Trade:
            signed_volume += r->side == Side::Bid ? r->size : -r->size;
            volume += r->size;
            if (r->aggressor) {
                aggressive += r->size;
            }
            break;
        case OrderAction::Insert:
            if (r->order_id.empty()) {
                f.missing_order_ids = true;
            } else {
                open_orders.emplace(r->order_id, r->ts_ns);
            }
            break;
        case OrderAction::Cancel:
        case OrderAction::Modify:
            if (r->order_id.empty()) {
                f.missing_order_ids = true;
            } else if (auto it = open_orders.find(r->order_id); it != open_orders.end()) {
                lifetimes.push_back(static_cast<double>(r->ts_ns - it->second) * 1e-9);
                open_orders.erase(it);
            }
            break;
        }
    }
    if (volume > 0.0) {
        f.eod_position_ratio = 100.0 * std::abs(signed_volume) / volume;
        f.aggressive_volume_fraction = 100.0 * aggressive / volume;
    }
    if (!lifetimes.empty() && !f.missing_order_ids) {
        f.order_lifetime_median = median(lifetimes);
    }

    if (const auto id = stream.find_agent(agent)) {
        std::vector<double> gaps;
        double previous = 0.0;
        bool first = true;
        for (const Event& e : stream.events()) {
            if (e.agent != *id) {
                continue;
            }
            ++f.counts[type_index(e.type)];
            if (!first) {
                gaps.push_back(e.t - previous);
            }
            previous = e.t;
            first = false;
        }
        if (!gaps.empty()) {
            f.inter_event_time_median = median(gaps);
        }
    }
    return f;
}

void write_features_csv(std::ostream& out, std::span<const DailyAgentFeatures> rows) {
    out << "day,agent_id,eod_position_ratio,order_lifetime_median,inter_event_time_median,"
           "aggressive_volume_fraction,presence_l1,missing_order_ids";
    for (EventType type : kAllEventTypes) {
        out << ",n_" << event_type_name(type);
    }
    out << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const auto& f : rows) {
        out << f.day << ',' << f.agent << ',' << opt(f.eod_position_ratio) << ',' << opt(f.order_lifetime_median)
            << ',' << opt(f.inter_event_time_median) << ',' << opt(f.aggressive_volume_fraction) << ','
            << opt(f.presence_l1) << ',' << (f.missing_order_ids ? 1 : 0);
        for (auto c : f.counts) {
            out << ',' << c;
        }
        out << '\n';
    }
}

DecileSummary decile_conditional_mean(std::span<const std::pair<double, double>> observations,
                                      std::string feature) {
    const std::size_t n = observations.size();
    if (n < 10) {
        throw Error(ErrorCode::TooFewObservations, "deciles need at least 10 observations");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return observations[a].first < observations[b].first;
    });

    DecileSummary out;
    out.feature = std::move(feature);
    std::array<double, 10> sum{};
    std::array<double, 10> sum_sq{};
    out.count.fill(0);
    out.edges.fill(0.0);
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t q = rank * 10 / n;
        const auto& obs = observations[order[rank]];
        if (out.count[q] == 0) {
            out.edges[q] = obs.first;
        }
        ++out.count[q];
        sum[q] += obs.second;
    }
    out.edges[10] = observations[order.back()].first;
    for (std::size_t q = 0; q < 10; ++q) {
        out.mean[q] = sum[q] / static_cast<double>(out.count[q]);
    }
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t q = rank * 10 / n;
        const double d = observations[order[rank]].second - out.mean[q];
        sum_sq[q] += d * d;
    }
    for (std::size_t q = 0; q < 10; ++q) {
        const auto c = static_cast<double>(out.count[q]);
        out.standard_error[q] = out.count[q] > 1 ? std::sqrt(sum_sq[q] / (c - 1.0) / c) : 0.0;
    }
    return out;
}

} // namespace hawkesvol
