#include "hawkesvol/pipeline.hpp"

#include "hawkesvol/format.hpp"
#include "hawkesvol/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace hawkesvol {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFitsSchema = "hawkesvol.fits/1";
constexpr const char* kReportSchema = "hawkesvol.report/1";
constexpr const char* kControlSchema = "hawkesvol.control/1";

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Returns one message
// per index, empty when fn(i) succeeded.
std::vector<std::string> parallel_for(std::size_t count, std::size_t jobs,
                                      const std::function<void(std::size_t)>& fn) {
    std::vector<std::string> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (const std::exception& err) {
                errors[i] = err.what();
                if (errors[i].empty()) {
                    errors[i] = "unknown error";
                }
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), count);
    if (threads <= 1) {
        worker();
        return errors;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    return errors;
}

Json optional_number(const std::optional<double>& value) {
    return value && std::isfinite(*value) ? Json(*value) : Json(nullptr);
}

std::string csv_cell(const std::optional<double>& value) {
    return value && std::isfinite(*value) ? format_number(*value) : std::string();
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    return out;
}

fs::path events_input(const RunConfig& config) {
    return config.events.empty() ? config.out / "events" : config.events;
}

std::vector<fs::path> require_inputs(const fs::path& path, const std::string& extension, const std::string& key) {
    auto inputs = list_inputs(path, extension);
    if (inputs.empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    "config key '" + key + "': no " + extension + " inputs at '" + path.string() + "'");
    }
    return inputs;
}

const AgentFitResult* find_fit(const DayFit& day, const std::string& agent) {
    if (agent == kRemainderAgent) {
        return day.remainder ? &*day.remainder : nullptr;
    }
    for (const auto& fit : day.fits) {
        if (fit.agent == agent) {
            return &fit;
        }
    }
    return nullptr;
}

std::map<std::pair<std::string, std::string>, double> read_presence(const fs::path& path) {
    std::map<std::pair<std::string, std::string>, double> out;
    if (path.empty()) {
        return out;
    }
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("day,agent_id,presence_l1", 0) != 0) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": expected header 'day,agent_id,presence_l1'");
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::stringstream ss(line);
        std::string day;
        std::string agent;
        std::string value;
        std::getline(ss, day, ',');
        std::getline(ss, agent, ',');
        std::getline(ss, value);
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            out[{day, agent}] = v;
        } catch (const std::exception&) {
            throw Error(ErrorCode::SchemaViolation, path.string() + ": row " + std::to_string(row) + ": bad presence");
        }
    }
    return out;
}

struct FeatureTable {
    std::vector<std::string> names;
    std::map<std::pair<std::string, std::string>, std::vector<std::optional<double>>> rows;
};

FeatureTable read_feature_table(const fs::path& path) {
    FeatureTable table;
    std::ifstream in(path);
    if (!in) {
        return table;
    }
    static const std::vector<std::string> wanted = {"eod_position_ratio", "order_lifetime_median",
                                                    "inter_event_time_median", "aggressive_volume_fraction",
                                                    "presence_l1"};
    auto split_line = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) {
        return table;
    }
    const auto header = split_line(line);
    std::vector<std::size_t> columns;
    for (const auto& name : wanted) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it != header.end()) {
            table.names.push_back(name);
            columns.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    while (std::getline(in, line)) {
        const auto cells = split_line(line);
        if (cells.size() < header.size()) {
            continue;
        }
        std::vector<std::optional<double>> values;
        for (std::size_t c : columns) {
            if (cells[c].empty()) {
                values.emplace_back();
            } else {
                values.emplace_back(std::stod(cells[c]));
            }
        }
        table.rows[{cells[0], cells[1]}] = std::move(values);
    }
    return table;
}

struct ControlResidual {
    std::optional<double> rho;
    std::optional<double> xi;
};

std::map<std::string, ControlResidual> read_control_residuals(const fs::path& path) {
    std::map<std::string, ControlResidual> out;
    if (!fs::exists(path)) {
        return out;
    }
    const Json doc = read_json(path);
    for (const auto& entry : doc.at("agents")) {
        ControlResidual r;
        if (entry.at("rho_residual").is_number()) {
            r.rho = entry.at("rho_residual").get<double>();
        }
        if (entry.at("xi_residual").is_number()) {
            r.xi = entry.at("xi_residual").get<double>();
        }
        out[entry.at("agent").get<std::string>()] = r;
    }
    return out;
}

Json decile_to_json(const DecileSummary& d, const std::string& target) {
    return Json{{"feature", d.feature},   {"target", target},
                {"edges", d.edges},       {"mean", d.mean},
                {"standard_error", d.standard_error}, {"count", d.count}};
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ a) ^ b);
}

std::vector<fs::path> list_inputs(const fs::path& path, const std::string& extension) {
    std::vector<fs::path> out;
    if (path.empty() || !fs::exists(path)) {
        return out;
    }
    if (!fs::is_directory(path)) {
        out.push_back(path);
        return out;
    }
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

DayFit fit_day(const EventStream& stream, const RunConfig& config) {
    DayFit day;
    day.day = stream.day();
    day.session_open = stream.session_open();
    day.duration = stream.duration();
    day.rv_tau = config.rv_tau;

    const auto counts = stream.counts();
    for (std::size_t a = 0; a < counts.size(); ++a) {
        std::size_t total = 0;
        for (auto c : counts[a]) {
            total += c;
        }
        (total >= config.min_events ? day.eligible : day.remainder_members).push_back(stream.agents()[a]);
    }
    std::sort(day.eligible.begin(), day.eligible.end());
    std::sort(day.remainder_members.begin(), day.remainder_members.end());
    if (day.eligible.empty()) {
        throw Error(ErrorCode::NoEligibleAgents, "day " + day.day + ": no agent has at least " +
                                                     std::to_string(config.min_events) + " events");
    }

    const EventStream merged =
        day.remainder_members.empty() ? stream : merge_agents(stream, day.eligible, kRemainderAgent);
    const FitConfig fit_config = config.fit_config();
    for (const auto& agent : day.eligible) {
        day.fits.push_back(fit_agent_vs_market(merged, agent, fit_config));
    }
    if (!day.remainder_members.empty()) {
        try {
            day.remainder = fit_agent_vs_market(merged, kRemainderAgent, fit_config);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::InsufficientEvents) {
                throw;
            }
            day.flags.push_back("remainder_below_threshold");
        }
    }

    const PricePath path = build_price_path(stream, 0.0);
    try {
        day.realized_variance = realized_variance(path, config.rv_tau);
    } catch (const Error& err) {
        if (err.code() != ErrorCode::InsufficientSpan) {
            throw;
        }
        day.flags.push_back("realized_variance_span_too_short");
    }
    return day;
}

Json day_fit_to_json(const DayFit& day) {
    Json fits = Json::array();
    for (const auto& fit : day.fits) {
        fits.push_back(fit_to_json(fit));
    }
    return Json{{"schema", kFitsSchema},
                {"day", day.day},
                {"session_open", day.session_open},
                {"duration", day.duration},
                {"eligible", day.eligible},
                {"remainder",
                 {{"agent", kRemainderAgent},
                  {"members", day.remainder_members},
                  {"fit", day.remainder ? fit_to_json(*day.remainder) : Json(nullptr)}}},
                {"realized_variance", {{"tau", day.rv_tau}, {"value", optional_number(day.realized_variance)}}},
                {"flags", day.flags},
                {"fits", std::move(fits)}};
}

DayFit day_fit_from_json(const Json& doc) {
    try {
        if (doc.at("schema").get<std::string>() != kFitsSchema) {
            throw Error(ErrorCode::InvalidArgument, "unsupported fits schema '" + doc.at("schema").dump() + "'");
        }
        DayFit day;
        day.day = doc.at("day").get<std::string>();
        day.session_open = doc.at("session_open").get<double>();
        day.duration = doc.at("duration").get<double>();
        day.eligible = doc.at("eligible").get<std::vector<std::string>>();
        const Json& rest = doc.at("remainder");
        day.remainder_members = rest.at("members").get<std::vector<std::string>>();
        if (!rest.at("fit").is_null()) {
            day.remainder = fit_from_json(rest.at("fit"));
        }
        const Json& rv = doc.at("realized_variance");
        day.rv_tau = rv.at("tau").get<double>();
        if (rv.at("value").is_number()) {
            day.realized_variance = rv.at("value").get<double>();
        }
        day.flags = doc.at("flags").get<std::vector<std::string>>();
        for (const auto& fit : doc.at("fits")) {
            day.fits.push_back(fit_from_json(fit));
        }
        if (day.fits.size() != day.eligible.size()) {
            throw Error(ErrorCode::InvalidArgument, "fits and eligible agents differ in number");
        }
        return day;
    } catch (const Json::exception& err) {
        throw Error(ErrorCode::InvalidArgument, std::string("malformed fits document: ") + err.what());
    }
}

std::vector<std::string> agent_universe(const std::vector<DayFit>& days) {
    std::set<std::string> names;
    bool remainder = false;
    for (const auto& day : days) {
        names.insert(day.eligible.begin(), day.eligible.end());
        remainder = remainder || !day.remainder_members.empty();
    }
    std::vector<std::string> out(names.begin(), names.end());
    if (remainder) {
        out.emplace_back(kRemainderAgent);
    }
    return out;
}

DayAttribution attribute_day(const DayFit& day, const std::vector<std::string>& universe, const RunConfig& config) {
    std::vector<AgentSlot> slots;
    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(universe.size() * kNumEventTypes));
    for (std::size_t i = 0; i < universe.size(); ++i) {
        AgentSlot slot{universe[i], std::nullopt};
        if (const AgentFitResult* fit = find_fit(day, universe[i])) {
            slot.fit = *fit;
            for (std::size_t a = 0; a < kNumEventTypes; ++a) {
                lambda[static_cast<Eigen::Index>(i * kNumEventTypes + a)] = fit->rate[a];
            }
        }
        slots.push_back(std::move(slot));
    }
    const GlobalModel global = assemble_global(slots, lambda);

    DayAttribution out;
    out.day = day.day;
    out.realized_variance = day.realized_variance;
    out.mean_baseline = global.mean_baseline;
    const Vector jumps = global.model.jump_vector();
    out.sigma2_poisson = lambda.dot(jumps.cwiseAbs2());
    for (std::size_t c : global.negative_baselines) {
        out.negative_baselines.push_back(component_name(global.model.components[c]));
    }

    const std::size_t n = global.model.dim();
    Vector xi = Vector::Zero(static_cast<Eigen::Index>(n));
    out.u = Vector::Zero(static_cast<Eigen::Index>(n));
    out.stable = global.stable();
    if (out.stable) {
        const BranchingSummary& summary = *global.summary;
        out.spectral_radius = summary.rho_spec;
        out.sigma2 = sigma2_asymptotic(summary, jumps);
        xi = xi_per_event(summary, jumps);
        out.u = u_vector(summary, jumps);
        if (config.open_price) {
            out.annualized = annualize(out.sigma2, config.half_tick, *config.open_price);
        }
    } else {
        out.instability = global.instability;
        try {
            out.spectral_radius = spectral_radius(global.phi);
        } catch (const Error&) {
            out.spectral_radius = std::numeric_limits<double>::quiet_NaN();
        }
    }

    for (std::size_t c = 0; c < n; ++c) {
        const auto e = static_cast<Eigen::Index>(c);
        out.components.push_back({global.model.components[c].agent, global.model.components[c].type, lambda[e],
                                  global.mean_baseline[e], jumps[e], xi[e], out.u[e]});
    }

    for (std::size_t i = 0; i < universe.size(); ++i) {
        AgentReport agent;
        agent.agent = universe[i];
        agent.present = slots[i].fit.has_value();
        const auto comps = agent_components(i);
        double rate = 0.0;
        double weighted_xi = 0.0;
        for (std::size_t c : comps) {
            rate += lambda[static_cast<Eigen::Index>(c)];
            weighted_xi += lambda[static_cast<Eigen::Index>(c)] * xi[static_cast<Eigen::Index>(c)];
        }
        agent.events = rate * day.duration;
        if (rate > 0.0) {
            agent.exogenous_fraction = exogenous_fraction(global.mean_baseline, lambda, comps);
        }
        if (out.stable) {
            if (rate > 0.0) {
                agent.xi = weighted_xi / rate;
            }
            if (out.sigma2 > 0.0) {
                agent.rho = rho_impact(*global.summary, jumps, global.mean_baseline, comps);
            }
        }
        out.agents.push_back(std::move(agent));
    }
    return out;
}

CommandReport run_simulate(const RunConfig& config) {
    config.validate();
    if (config.spec.empty()) {
        throw Error(ErrorCode::InvalidArgument, "config key 'spec': required for simulate");
    }
    const double horizon = config.simulation_horizon();
    if (horizon > config.session_close - config.session_open) {
        throw Error(ErrorCode::InvalidArgument, "config key 'horizon': exceeds the session length");
    }
    const HawkesModel model = model_from_json(read_json(config.spec));
    const double radius = spectral_radius(integrate_kernels(model.kernels));
    if (!(radius < 1.0)) {
        throw Error(ErrorCode::Unstable,
                    "spec " + config.spec.string() + ": spectral radius " + format_number(radius) + " >= 1");
    }

    const fs::path events_dir = config.out / "events";
    ensure_directory(events_dir);
    write_json(config.out / "truth.json", model_to_json(model, config.session_open));

    CommandReport report;
    const auto errors = parallel_for(config.days, config.jobs, [&](std::size_t d) {
        char name[32];
        std::snprintf(name, sizeof name, "day_%03zu", d);
        SimulationOptions options;
        options.max_events = config.max_events;
        options.session_open = config.session_open;
        options.day = name;
        const EventStream stream = simulate_thinning(model, horizon, derive_seed(config.seed, d), options);
        write_events_csv(events_dir / (std::string(name) + ".csv"), stream);
    });
    for (std::size_t d = 0; d < errors.size(); ++d) {
        if (!errors[d].empty()) {
            report.partial = true;
            report.notes.push_back("day " + std::to_string(d) + ": " + errors[d]);
        }
    }
    if (std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); })) {
        throw Error(ErrorCode::ExplosionGuard, "every simulated day failed: " + errors.front());
    }
    report.notes.push_back("simulated " + std::to_string(config.days) + " day(s) into " + events_dir.string());
    return report;
}

CommandReport run_fit(const RunConfig& config) {
    config.validate();
    const auto inputs = require_inputs(events_input(config), ".csv", "events");
    const fs::path fits_dir = config.out / "fits";
    ensure_directory(fits_dir);

    std::vector<std::string> summaries(inputs.size());
    std::vector<bool> no_agents(inputs.size(), false);
    const auto errors = parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
        const EventStream stream = read_events_csv(inputs[i], config.session());
        try {
            const DayFit day = fit_day(stream, config);
            write_json(fits_dir / (day.day + ".json"), day_fit_to_json(day));
            std::size_t failed = 0;
            for (const auto& fit : day.fits) {
                failed += static_cast<std::size_t>(std::count(fit.failed.begin(), fit.failed.end(), true));
            }
            summaries[i] = "day " + day.day + ": " + std::to_string(day.fits.size()) + " agent fit(s), remainder " +
                           (day.remainder ? "fitted" : day.remainder_members.empty() ? "empty" : "absent") +
                           (failed ? ", " + std::to_string(failed) + " component fit(s) failed" : "");
            if (failed) {
                throw Error(ErrorCode::SingularSystem, summaries[i]);
            }
        } catch (const Error& err) {
            no_agents[i] = err.code() == ErrorCode::NoEligibleAgents;
            throw;
        }
    });

    CommandReport report;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!summaries[i].empty()) {
            report.notes.push_back(summaries[i]);
        }
        if (!errors[i].empty()) {
            ++failures;
            report.partial = true;
            if (summaries[i].empty()) {
                report.notes.push_back(inputs[i].string() + ": " + errors[i]);
            }
        }
    }
    if (std::all_of(no_agents.begin(), no_agents.end(), [](bool b) { return b; })) {
        throw Error(ErrorCode::NoEligibleAgents, "no day has an agent with at least " +
                                                     std::to_string(config.min_events) + " events");
    }
    if (failures == inputs.size()) {
        throw Error(ErrorCode::InvalidArgument, "every day failed; first error: " + errors.front());
    }
    return report;
}

CommandReport run_attribute(const RunConfig& config) {
    config.validate();
    const auto inputs = require_inputs(config.out / "fits", ".json", "out");
    std::vector<DayFit> days;
    for (const auto& path : inputs) {
        try {
            days.push_back(day_fit_from_json(read_json(path)));
        } catch (const Error& err) {
            throw Error(err.code(), path.string() + ": " + err.what());
        }
    }
    const auto universe = agent_universe(days);

    std::vector<std::optional<DayAttribution>> results(days.size());
    const auto errors = parallel_for(days.size(), config.jobs,
                                     [&](std::size_t i) { results[i] = attribute_day(days[i], universe, config); });

    CommandReport report;
    std::vector<DailyDecomposition> series;
    std::vector<std::string> series_days;
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (!errors[i].empty()) {
            report.partial = true;
            report.notes.push_back("day " + days[i].day + ": " + errors[i]);
        } else if (!results[i]->stable) {
            report.partial = true;
            report.notes.push_back("day " + days[i].day + ": unstable (" + results[i]->instability + ")");
        } else {
            series.push_back({results[i]->mean_baseline, results[i]->u});
            series_days.push_back(days[i].day);
        }
    }
    std::vector<RatioPoint> ratio;
    if (!series.empty()) {
        ratio = sigma2_mu_ratio(series, config.window_days);
    }

    std::map<std::string, std::map<std::string, ControlResidual>> controls;
    for (const auto& day : days) {
        controls[day.day] = read_control_residuals(config.out / "control" / (day.day + ".json"));
    }

    Json day_docs = Json::array();
    auto csv = open_output(config.out / "report.csv");
    csv << "day,row,agent,type,lambda,mean_baseline,delta,xi,u,rho,exogenous_fraction,events,rho_residual,"
           "xi_residual\n";
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (!results[i]) {
            day_docs.push_back({{"day", days[i].day}, {"error", errors[i]}});
            continue;
        }
        const DayAttribution& r = *results[i];
        Json comps = Json::array();
        for (const auto& c : r.components) {
            const std::string type(event_type_name(c.type));
            comps.push_back({{"agent", c.agent},
                             {"type", type},
                             {"lambda", c.lambda},
                             {"mean_baseline", c.mean_baseline},
                             {"delta", c.delta},
                             {"xi", r.stable ? Json(c.xi) : Json(nullptr)},
                             {"u", r.stable ? Json(c.u) : Json(nullptr)}});
            csv << r.day << ",component," << c.agent << ',' << type << ',' << format_number(c.lambda) << ','
                << format_number(c.mean_baseline) << ',' << format_number(c.delta) << ','
                << (r.stable ? format_number(c.xi) : "") << ',' << (r.stable ? format_number(c.u) : "")
                << ",,,,,\n";
        }
        Json agents = Json::array();
        for (const auto& a : r.agents) {
            const auto residual = controls[r.day].find(a.agent);
            const ControlResidual res = residual == controls[r.day].end() ? ControlResidual{} : residual->second;
            agents.push_back({{"agent", a.agent},
                              {"present", a.present},
                              {"events", a.events},
                              {"rho", optional_number(a.rho)},
                              {"exogenous_fraction", optional_number(a.exogenous_fraction)},
                              {"xi", optional_number(a.xi)},
                              {"rho_residual", optional_number(res.rho)},
                              {"xi_residual", optional_number(res.xi)}});
            csv << r.day << ",agent," << a.agent << ",,,,,," << ',' << csv_cell(a.xi) << ',' << ','
                << csv_cell(a.rho) << ',' << csv_cell(a.exogenous_fraction) << ',' << format_number(a.events)
                << ',' << csv_cell(res.rho) << ',' << csv_cell(res.xi) << '\n';
        }
        day_docs.push_back({{"day", r.day},
                            {"stable", r.stable},
                            {"instability", r.instability},
                            {"spectral_radius", optional_number(r.spectral_radius)},
                            {"sigma2", r.stable ? Json(r.sigma2) : Json(nullptr)},
                            {"sigma2_poisson", r.sigma2_poisson},
                            {"realized_variance", optional_number(r.realized_variance)},
                            {"annualized_volatility", optional_number(r.annualized)},
                            {"negative_baselines", r.negative_baselines},
                            {"components", std::move(comps)},
                            {"agents", std::move(agents)}});
    }

    Json ratio_doc = Json::array();
    auto ratio_csv = open_output(config.out / "ratio.csv");
    ratio_csv << "day,sigma2,sigma2_mu,ratio,window_days,truncated\n";
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        const RatioPoint& p = ratio[k];
        ratio_doc.push_back({{"day", series_days[k]},
                             {"sigma2", p.sigma2},
                             {"sigma2_mu", p.sigma2_mu},
                             {"ratio", optional_number(p.ratio)},
                             {"window_days", p.window_days},
                             {"truncated", p.truncated}});
        ratio_csv << series_days[k] << ',' << format_number(p.sigma2) << ',' << format_number(p.sigma2_mu) << ','
                  << format_number(p.ratio) << ',' << p.window_days << ',' << (p.truncated ? 1 : 0) << '\n';
    }

    // Decile conditioning against per-(agent, day) features when available.
    Json deciles = Json::array();
    const FeatureTable features = read_feature_table(config.out / "features.csv");
    if (!features.names.empty()) {
        auto decile_csv = open_output(config.out / "deciles.csv");
        decile_csv << "feature,target,decile,lower,upper,mean,standard_error,count\n";
        using Target = std::function<std::optional<double>(const DayAttribution&, const AgentReport&)>;
        const std::vector<std::pair<std::string, Target>> targets = {
            {"xi", [](const DayAttribution&, const AgentReport& a) { return a.xi; }},
            {"rho_sigma2_per_event",
             [](const DayAttribution& d, const AgentReport& a) -> std::optional<double> {
                 if (!a.rho || !(a.events > 0.0)) {
                     return std::nullopt;
                 }
                 return *a.rho * d.sigma2 / a.events;
             }},
            {"exogenous_fraction", [](const DayAttribution&, const AgentReport& a) { return a.exogenous_fraction; }},
            {"rho_residual",
             [&](const DayAttribution& d, const AgentReport& a) -> std::optional<double> {
                 const auto& m = controls[d.day];
                 const auto it = m.find(a.agent);
                 return it == m.end() ? std::nullopt : it->second.rho;
             }},
        };
        for (std::size_t f = 0; f < features.names.size(); ++f) {
            for (const auto& [target_name, target] : targets) {
                std::vector<std::pair<double, double>> obs;
                for (const auto& result : results) {
                    if (!result || !result->stable) {
                        continue;
                    }
                    for (const auto& a : result->agents) {
                        const auto row = features.rows.find({result->day, a.agent});
                        const auto y = target(*result, a);
                        if (row == features.rows.end() || !row->second[f] || !y || !std::isfinite(*y)) {
                            continue;
                        }
                        obs.emplace_back(*row->second[f], *y);
                    }
                }
                if (obs.size() < 10) {
                    continue;
                }
                const DecileSummary d = decile_conditional_mean(obs, features.names[f]);
                deciles.push_back(decile_to_json(d, target_name));
                for (std::size_t q = 0; q < 10; ++q) {
                    decile_csv << d.feature << ',' << target_name << ',' << q + 1 << ',' << format_number(d.edges[q])
                               << ',' << format_number(d.edges[q + 1]) << ',' << format_number(d.mean[q]) << ','
                               << format_number(d.standard_error[q]) << ',' << d.count[q] << '\n';
                }
            }
        }
    }

    write_json(config.out / "report.json", Json{{"schema", kReportSchema},
                                                {"agents", universe},
                                                {"window_days", config.window_days},
                                                {"days", std::move(day_docs)},
                                                {"sigma2_ratio", std::move(ratio_doc)},
                                                {"deciles", std::move(deciles)}});
    report.notes.push_back("attributed " + std::to_string(days.size()) + " day(s) over " +
                           std::to_string(universe.size()) + " agent slot(s)");
    if (std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); })) {
        throw Error(ErrorCode::InvalidArgument, "every day failed; first error: " + errors.front());
    }
    return report;
}

CommandReport run_control(const RunConfig& config) {
    config.validate();
    const auto inputs = require_inputs(events_input(config), ".csv", "events");
    const fs::path control_dir = config.out / "control";
    ensure_directory(control_dir);

    struct AgentResidual {
        std::string agent;
        std::optional<double> rho_actual;
        std::optional<double> xi_actual;
        std::optional<double> rho_control;
        std::optional<double> xi_control;
        std::size_t replicates = 0;
    };
    std::vector<std::vector<AgentResidual>> per_day(inputs.size());
    std::vector<std::string> day_names(inputs.size());
    std::vector<std::size_t> failed_replicates(inputs.size(), 0);

    const auto errors = parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
        const EventStream stream = read_events_csv(inputs[i], config.session());
        day_names[i] = stream.day();
        const DayFit actual_fit = fit_day(stream, config);
        const auto universe = agent_universe({actual_fit});
        const DayAttribution actual = attribute_day(actual_fit, universe, config);

        std::vector<AgentResidual> rows(universe.size());
        std::vector<double> rho_mean(universe.size(), 0.0);
        std::vector<double> xi_mean(universe.size(), 0.0);
        std::vector<std::size_t> rho_n(universe.size(), 0);
        std::vector<std::size_t> xi_n(universe.size(), 0);
        for (std::size_t r = 0; r < config.control_replicates; ++r) {
            try {
                const EventStream shuffled = shuffle_control(stream, derive_seed(config.seed, i, r));
                const DayAttribution control = attribute_day(fit_day(shuffled, config), universe, config);
                if (!control.stable) {
                    ++failed_replicates[i];
                    continue;
                }
                // Running means: identical replicates average to themselves exactly.
                for (std::size_t a = 0; a < universe.size(); ++a) {
                    if (control.agents[a].rho) {
                        ++rho_n[a];
                        rho_mean[a] += (*control.agents[a].rho - rho_mean[a]) / static_cast<double>(rho_n[a]);
                    }
                    if (control.agents[a].xi) {
                        ++xi_n[a];
                        xi_mean[a] += (*control.agents[a].xi - xi_mean[a]) / static_cast<double>(xi_n[a]);
                    }
                }
            } catch (const Error&) {
                ++failed_replicates[i];
            }
        }
        for (std::size_t a = 0; a < universe.size(); ++a) {
            rows[a].agent = universe[a];
            rows[a].rho_actual = actual.agents[a].rho;
            rows[a].xi_actual = actual.agents[a].xi;
            rows[a].replicates = rho_n[a];
            if (rho_n[a] > 0) {
                rows[a].rho_control = rho_mean[a];
            }
            if (xi_n[a] > 0) {
                rows[a].xi_control = xi_mean[a];
            }
        }
        per_day[i] = std::move(rows);

        auto diff = [](const std::optional<double>& x, const std::optional<double>& y) -> std::optional<double> {
            if (!x || !y) {
                return std::nullopt;
            }
            return *x - *y;
        };
        Json agents = Json::array();
        for (const auto& row : per_day[i]) {
            agents.push_back({{"agent", row.agent},
                              {"replicates", row.replicates},
                              {"rho_actual", optional_number(row.rho_actual)},
                              {"rho_control", optional_number(row.rho_control)},
                              {"rho_residual", optional_number(diff(row.rho_actual, row.rho_control))},
                              {"xi_actual", optional_number(row.xi_actual)},
                              {"xi_control", optional_number(row.xi_control)},
                              {"xi_residual", optional_number(diff(row.xi_actual, row.xi_control))}});
        }
        write_json(control_dir / (stream.day() + ".json"),
                   Json{{"schema", kControlSchema},
                        {"day", stream.day()},
                        {"replicates", config.control_replicates},
                        {"failed_replicates", failed_replicates[i]},
                        {"agents", std::move(agents)}});
    });

    CommandReport report;
    auto csv = open_output(config.out / "control_residuals.csv");
    csv << "day,agent,replicates,rho_actual,rho_control,rho_residual,xi_actual,xi_control,xi_residual\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!errors[i].empty()) {
            report.partial = true;
            report.notes.push_back(inputs[i].string() + ": " + errors[i]);
            continue;
        }
        if (failed_replicates[i] > 0) {
            report.partial = true;
            report.notes.push_back("day " + day_names[i] + ": " + std::to_string(failed_replicates[i]) +
                                   " control replicate(s) failed");
        }
        for (const auto& row : per_day[i]) {
            auto residual = [](const std::optional<double>& x, const std::optional<double>& y) {
                return x && y ? format_number(*x - *y) : std::string();
            };
            csv << day_names[i] << ',' << row.agent << ',' << row.replicates << ',' << csv_cell(row.rho_actual)
                << ',' << csv_cell(row.rho_control) << ',' << residual(row.rho_actual, row.rho_control) << ','
                << csv_cell(row.xi_actual) << ',' << csv_cell(row.xi_control) << ','
                << residual(row.xi_actual, row.xi_control) << '\n';
        }
    }
    if (std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); })) {
        throw Error(ErrorCode::InvalidArgument, "every day failed; first error: " + errors.front());
    }
    report.notes.push_back("control residuals for " + std::to_string(inputs.size()) + " day(s)");
    return report;
}

CommandReport run_features(const RunConfig& config) {
    config.validate();
    const auto inputs = require_inputs(config.raw, ".csv", "raw");
    const auto presence = read_presence(config.presence);
    const fs::path events_dir = config.out / "events";
    ensure_directory(events_dir);

    std::vector<std::vector<DailyAgentFeatures>> rows(inputs.size());
    std::vector<IngestReport> ingest(inputs.size());
    const auto errors = parallel_for(inputs.size(), config.jobs, [&](std::size_t i) {
        const std::string day = inputs[i].stem().string();
        const auto records = read_raw_csv(inputs[i], config.session(), &ingest[i]);
        const EventStream stream = classify_records(records, config.session(), day, &ingest[i]);
        write_events_csv(events_dir / (day + ".csv"), stream);
        std::set<std::string> agents;
        for (const auto& r : records) {
            agents.insert(r.agent);
        }
        for (const auto& agent : agents) {
            const auto it = presence.find({day, agent});
            rows[i].push_back(compute_features(records, stream, agent,
                                               it == presence.end() ? std::nullopt : std::optional(it->second)));
        }
    });

    CommandReport report;
    std::vector<DailyAgentFeatures> all;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!errors[i].empty()) {
            report.partial = true;
            report.notes.push_back(inputs[i].string() + ": " + errors[i]);
            continue;
        }
        const auto& ing = ingest[i];
        report.notes.push_back(inputs[i].stem().string() + ": " + std::to_string(ing.rows) + " row(s), " +
                               std::to_string(ing.out_of_session) + " out of session, " +
                               std::to_string(ing.unclassified) + " unclassified, " + std::to_string(ing.kept) +
                               " event(s)");
        for (const auto& f : rows[i]) {
            if (f.missing_order_ids) {
                report.notes.push_back(inputs[i].stem().string() + ": agent " + f.agent +
                                       " has records without order ids; lifetime left empty");
            }
        }
        all.insert(all.end(), rows[i].begin(), rows[i].end());
    }
    auto out = open_output(config.out / "features.csv");
    write_features_csv(out, all);
    if (std::all_of(errors.begin(), errors.end(), [](const std::string& e) { return !e.empty(); })) {
        throw Error(ErrorCode::InvalidArgument, "every day failed; first error: " + errors.front());
    }
    return report;
}

} // namespace hawkesvol
