#include "hawkesvol/config.hpp"

#include "hawkesvol/format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <vector>

namespace hawkesvol {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': '" + value + "' " + why);
}

double to_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "is not a number");
    }
    return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "is not a nonnegative integer");
    }
    return out;
}

// Seconds since midnight from "HH:MM", "HH:MM:SS[.f]" or a plain number.
double to_clock(const std::string& key, const std::string& value) {
    if (value.find(':') == std::string::npos) {
        return to_double(key, value);
    }
    std::string text = value;
    if (std::count(text.begin(), text.end(), ':') == 1) {
        text += ":00";
    }
    try {
        return static_cast<double>(parse_timestamp(text, 0)) * 1e-9;
    } catch (const Error&) {
        bad_value(key, value, "is not a clock time");
    }
}

std::string clock_text(double seconds) {
    const auto s = static_cast<long>(seconds);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld:%02ld", s / 3600, (s / 60) % 60, s % 60);
    return buf;
}

struct Key {
    const char* name;
    const char* description;
    std::function<void(RunConfig&, const std::string&)> assign;
    std::function<std::string(const RunConfig&)> show;
};

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        {"events", "events.csv file or directory of day files",
         [](RunConfig& c, const std::string& v) { c.events = v; },
         [](const RunConfig& c) { return c.events.string(); }},
        {"raw", "raw.csv file or directory of day files",
         [](RunConfig& c, const std::string& v) { c.raw = v; }, [](const RunConfig& c) { return c.raw.string(); }},
        {"out", "output directory", [](RunConfig& c, const std::string& v) { c.out = v; },
         [](const RunConfig& c) { return c.out.string(); }},
        {"spec", "model spec JSON for simulate", [](RunConfig& c, const std::string& v) { c.spec = v; },
         [](const RunConfig& c) { return c.spec.string(); }},
        {"presence", "optional CSV day,agent_id,presence_l1",
         [](RunConfig& c, const std::string& v) { c.presence = v; },
         [](const RunConfig& c) { return c.presence.string(); }},
        {"basis_size", "number of exponential kernels L",
         [](RunConfig& c, const std::string& v) { c.basis_size = to_unsigned("basis_size", v); },
         [](const RunConfig& c) { return std::to_string(c.basis_size); }},
        {"tau_min", "shortest kernel time scale (s)",
         [](RunConfig& c, const std::string& v) { c.tau_min = to_double("tau_min", v); },
         [](const RunConfig& c) { return format_number(c.tau_min); }},
        {"tau_max", "longest kernel time scale (s)",
         [](RunConfig& c, const std::string& v) { c.tau_max = to_double("tau_max", v); },
         [](const RunConfig& c) { return format_number(c.tau_max); }},
        {"baseline_bins", "equal baseline bins K per session",
         [](RunConfig& c, const std::string& v) { c.baseline_bins = to_unsigned("baseline_bins", v); },
         [](const RunConfig& c) { return std::to_string(c.baseline_bins); }},
        {"session_open", "session open, HH:MM[:SS] or seconds since midnight",
         [](RunConfig& c, const std::string& v) { c.session_open = to_clock("session_open", v); },
         [](const RunConfig& c) { return clock_text(c.session_open); }},
        {"session_close", "session close, HH:MM[:SS] or seconds since midnight",
         [](RunConfig& c, const std::string& v) { c.session_close = to_clock("session_close", v); },
         [](const RunConfig& c) { return clock_text(c.session_close); }},
        {"min_events", "minimum daily events for an agent to get its own fit",
         [](RunConfig& c, const std::string& v) { c.min_events = to_unsigned("min_events", v); },
         [](const RunConfig& c) { return std::to_string(c.min_events); }},
        {"ridge", "relative ridge on the equilibrated normal equations",
         [](RunConfig& c, const std::string& v) { c.ridge = to_double("ridge", v); },
         [](const RunConfig& c) { return format_number(c.ridge); }},
        {"seed", "base RNG seed", [](RunConfig& c, const std::string& v) { c.seed = to_unsigned("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        {"control_replicates", "shuffled control replicates per day",
         [](RunConfig& c, const std::string& v) { c.control_replicates = to_unsigned("control_replicates", v); },
         [](const RunConfig& c) { return std::to_string(c.control_replicates); }},
        {"window_days", "centered window (days) for the baseline-driven volatility",
         [](RunConfig& c, const std::string& v) { c.window_days = to_unsigned("window_days", v); },
         [](const RunConfig& c) { return std::to_string(c.window_days); }},
        {"p0", "opening price for annualization (price units); unset skips it",
         [](RunConfig& c, const std::string& v) { c.open_price = to_double("p0", v); },
         [](const RunConfig& c) { return c.open_price ? format_number(*c.open_price) : std::string("unset"); }},
        {"half_tick", "price units per half-tick",
         [](RunConfig& c, const std::string& v) { c.half_tick = to_double("half_tick", v); },
         [](const RunConfig& c) { return format_number(c.half_tick); }},
        {"jobs", "days processed in parallel",
         [](RunConfig& c, const std::string& v) { c.jobs = to_unsigned("jobs", v); },
         [](const RunConfig& c) { return std::to_string(c.jobs); }},
        {"horizon", "simulated seconds per day; defaults to the session length",
         [](RunConfig& c, const std::string& v) { c.horizon = to_double("horizon", v); },
         [](const RunConfig& c) { return c.horizon ? format_number(*c.horizon) : std::string("session"); }},
        {"days", "simulated days", [](RunConfig& c, const std::string& v) { c.days = to_unsigned("days", v); },
         [](const RunConfig& c) { return std::to_string(c.days); }},
        {"rv_tau", "sampling scale (s) of the realized variance in fit outputs",
         [](RunConfig& c, const std::string& v) { c.rv_tau = to_double("rv_tau", v); },
         [](const RunConfig& c) { return format_number(c.rv_tau); }},
        {"max_events", "simulation event cap per day",
         [](RunConfig& c, const std::string& v) { c.max_events = to_unsigned("max_events", v); },
         [](const RunConfig& c) { return std::to_string(c.max_events); }},
    };
    return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) {
        throw Error(ErrorCode::InvalidArgument, "config key '" + key + "': " + what);
    }
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const Key& k : keys()) {
        if (key == k.name) {
            k.assign(*this, value);
            return;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw Error(ErrorCode::Io, "cannot read config " + path.string());
    }
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& err) {
        throw Error(ErrorCode::InvalidArgument, "config " + path.string() + ": " + err.message() + " (line " +
                                                    std::to_string(err.line()) + ")");
    }
    for (const auto& [key, node] : tree) {
        if (!node.empty()) {
            throw Error(ErrorCode::InvalidArgument, "config " + path.string() + ": sections are not supported ('" +
                                                        key + "')");
        }
        set(key, node.get_value<std::string>());
    }
}

void RunConfig::validate() const {
    require(basis_size > 0, "basis_size", "must be positive");
    require(tau_min > 0.0, "tau_min", "must be positive");
    require(tau_min < tau_max || (basis_size == 1 && tau_min <= tau_max), "tau_max", "must exceed tau_min");
    require(baseline_bins > 0, "baseline_bins", "must be positive");
    require(session_open >= 0.0 && session_close <= 86400.0, "session_open", "must lie within the day");
    require(session_open < session_close, "session_close", "must be after session_open");
    require(min_events > 0, "min_events", "must be positive");
    require(ridge > 0.0, "ridge", "must be positive");
    require(control_replicates > 0, "control_replicates", "must be positive");
    require(window_days > 0, "window_days", "must be positive");
    require(!open_price || *open_price > 0.0, "p0", "must be positive");
    require(half_tick > 0.0, "half_tick", "must be positive");
    require(jobs > 0, "jobs", "must be positive");
    require(!horizon || *horizon > 0.0, "horizon", "must be positive");
    require(days > 0, "days", "must be positive");
    require(rv_tau > 0.0, "rv_tau", "must be positive");
    require(max_events > 0, "max_events", "must be positive");
}

FitConfig RunConfig::fit_config() const {
    FitConfig config;
    config.basis = BasisDictionary::log_spaced(basis_size, tau_min, tau_max);
    config.baseline_bins = baseline_bins;
    config.min_events = min_events;
    config.relative_ridge = ridge;
    return config;
}

std::string RunConfig::help() {
    const RunConfig defaults;
    std::ostringstream out;
    out << "Config file: one 'key = value' per line ('#' or ';' starts a comment).\n";
    for (const Key& k : keys()) {
        std::string name = k.name;
        name.resize(20, ' ');
        out << "  " << name << k.description << " [default: " << k.show(defaults) << "]\n";
    }
    return out.str();
}

} // namespace hawkesvol
