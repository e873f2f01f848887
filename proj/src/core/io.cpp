#include "hawkesvol/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace hawkesvol {

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, path + ": " + what);
}

const Json& member(const Json& doc, const std::string& key, const std::string& path) {
    if (!doc.is_object() || !doc.contains(key)) {
        bad_field(path + "." + key, "missing");
    }
    return doc.at(key);
}

const Json& array_of(const Json& doc, std::size_t size, const std::string& path) {
    if (!doc.is_array()) {
        bad_field(path, "expected an array");
    }
    if (size != 0 && doc.size() != size) {
        bad_field(path, "expected " + std::to_string(size) + " entries, found " + std::to_string(doc.size()));
    }
    return doc;
}

double number(const Json& doc, const std::string& path) {
    if (doc.is_null()) {
        return std::numeric_limits<double>::quiet_NaN(); // NaN is written as null
    }
    if (!doc.is_number()) {
        bad_field(path, "expected a number");
    }
    return doc.get<double>();
}

std::vector<double> numbers(const Json& doc, std::size_t size, const std::string& path) {
    array_of(doc, size, path);
    std::vector<double> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        out.push_back(number(doc[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

template <std::size_t N>
std::array<double, N> fixed_numbers(const Json& doc, const std::string& path) {
    const auto v = numbers(doc, N, path);
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

Json tensor(std::vector<std::size_t> shape, const std::vector<double>& values) {
    return Json{{"shape", std::move(shape)}, {"values", values}};
}

std::vector<double> tensor_values(const Json& doc, const std::vector<std::size_t>& shape, const std::string& path) {
    const auto got = member(doc, "shape", path).get<std::vector<std::size_t>>();
    if (got != shape) {
        bad_field(path + ".shape", "unexpected tensor shape");
    }
    std::size_t size = 1;
    for (auto s : shape) {
        size *= s;
    }
    return numbers(member(doc, "values", path), size, path + ".values");
}

} // namespace

Json model_to_json(const HawkesModel& model, double session_open) {
    const std::size_t n = model.dim();
    const std::size_t nl = model.kernels.basis().size();
    Json components = Json::array();
    for (std::size_t c = 0; c < n; ++c) {
        components.push_back({{"agent", model.components[c].agent},
                              {"type", std::string(event_type_name(model.components[c].type))},
                              {"delta", model.jumps[c]}});
    }
    Json kernels = Json::array();
    for (std::size_t t = 0; t < n; ++t) {
        Json row = Json::array();
        for (std::size_t s = 0; s < n; ++s) {
            Json cell = Json::array();
            for (std::size_t l = 0; l < nl; ++l) {
                cell.push_back(model.kernels.at(t, s, l));
            }
            row.push_back(std::move(cell));
        }
        kernels.push_back(std::move(row));
    }
    Json values = Json::array();
    for (std::size_t c = 0; c < n; ++c) {
        Json row = Json::array();
        for (std::size_t k = 0; k < model.baseline.bins(); ++k) {
            row.push_back(model.baseline.value(c, k));
        }
        values.push_back(std::move(row));
    }
    return Json{{"session_open", session_open},
                {"decays", model.kernels.basis().decays()},
                {"components", std::move(components)},
                {"kernels", std::move(kernels)},
                {"baseline", {{"edges", model.baseline.edges()}, {"values", std::move(values)}}}};
}

HawkesModel model_from_json(const Json& doc, double* session_open) {
    if (!doc.is_object()) {
        bad_field("$", "expected an object");
    }
    if (session_open) {
        *session_open = doc.contains("session_open") ? number(doc["session_open"], "$.session_open") : 8.0 * 3600.0;
    }
    const auto decays = numbers(member(doc, "decays", "$"), 0, "$.decays");
    BasisDictionary basis = [&] {
        try {
            return BasisDictionary(decays);
        } catch (const Error& err) {
            bad_field("$.decays", err.what());
        }
    }();

    const Json& comps = array_of(member(doc, "components", "$"), 0, "$.components");
    const std::size_t n = comps.size();
    std::vector<ComponentLabel> components;
    std::vector<double> jumps;
    for (std::size_t c = 0; c < n; ++c) {
        const std::string path = "$.components[" + std::to_string(c) + "]";
        const Json& entry = comps[c];
        const Json& agent = member(entry, "agent", path);
        if (!agent.is_string()) {
            bad_field(path + ".agent", "expected a string");
        }
        const Json& type_text = member(entry, "type", path);
        const auto type = type_text.is_string() ? parse_event_type(type_text.get<std::string>()) : std::nullopt;
        if (!type) {
            bad_field(path + ".type", "expected one of P+,P-,Ta,Tb,La,Lb,Ca,Cb");
        }
        components.push_back({agent.get<std::string>(), *type});
        jumps.push_back(entry.contains("delta") ? number(entry["delta"], path + ".delta")
                                                : (*type == EventType::PriceUp     ? 1.0
                                                   : *type == EventType::PriceDown ? -1.0
                                                                                   : 0.0));
    }

    KernelMatrix kernels(n, basis);
    const Json& k = array_of(member(doc, "kernels", "$"), n, "$.kernels");
    for (std::size_t t = 0; t < n; ++t) {
        const std::string row_path = "$.kernels[" + std::to_string(t) + "]";
        array_of(k[t], n, row_path);
        for (std::size_t s = 0; s < n; ++s) {
            const auto cell = numbers(k[t][s], basis.size(), row_path + "[" + std::to_string(s) + "]");
            for (std::size_t l = 0; l < basis.size(); ++l) {
                kernels.at(t, s, l) = cell[l];
            }
        }
    }

    const Json& base = member(doc, "baseline", "$");
    const Json& raw_values = array_of(member(base, "values", "$.baseline"), n, "$.baseline.values");
    std::vector<double> edges;
    if (base.contains("edges")) {
        edges = numbers(base["edges"], 0, "$.baseline.edges");
    } else {
        edges = {0.0, 8.5 * 3600.0};
    }
    PiecewiseBaseline baseline = [&] {
        try {
            return PiecewiseBaseline(edges, n);
        } catch (const Error& err) {
            bad_field("$.baseline.edges", err.what());
        }
    }();
    for (std::size_t c = 0; c < n; ++c) {
        const std::string path = "$.baseline.values[" + std::to_string(c) + "]";
        // A bare number is a constant rate over every bin.
        if (raw_values[c].is_number()) {
            for (std::size_t b = 0; b < baseline.bins(); ++b) {
                baseline.value(c, b) = raw_values[c].get<double>();
            }
            continue;
        }
        const auto row = numbers(raw_values[c], baseline.bins(), path);
        for (std::size_t b = 0; b < baseline.bins(); ++b) {
            baseline.value(c, b) = row[b];
        }
    }

    HawkesModel model{std::move(components), std::move(kernels), std::move(baseline), std::move(jumps)};
    try {
        model.validate();
    } catch (const Error& err) {
        bad_field("$", err.what());
    }
    return model;
}

Json fit_to_json(const AgentFitResult& fit) {
    const std::size_t nl = fit.basis_size();
    const std::size_t bins = static_cast<std::size_t>(fit.baseline.cols());
    std::vector<double> baseline;
    baseline.reserve(kNumEventTypes * bins);
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        for (std::size_t k = 0; k < bins; ++k) {
            baseline.push_back(fit.baseline(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)));
        }
    }
    return Json{{"agent", fit.agent},
                {"day", fit.day},
                {"decays", fit.decays},
                {"edges", fit.edges},
                {"counts", fit.counts},
                {"rate", fit.rate},
                {"delta", fit.delta},
                {"contrast", fit.contrast},
                {"failed", fit.failed},
                {"flags", fit.flags},
                {"baseline", tensor({kNumEventTypes, bins}, baseline)},
                {"self", tensor({kNumEventTypes, kNumEventTypes, nl}, fit.self_coeffs)},
                {"market", tensor({kNumEventTypes, kNumEventTypes, nl}, fit.market_coeffs)}};
}

AgentFitResult fit_from_json(const Json& doc) {
    AgentFitResult fit;
    fit.agent = member(doc, "agent", "fit").get<std::string>();
    const std::string path = "fit[" + fit.agent + "]";
    fit.day = member(doc, "day", path).get<std::string>();
    fit.decays = numbers(member(doc, "decays", path), 0, path + ".decays");
    fit.edges = numbers(member(doc, "edges", path), 0, path + ".edges");
    if (fit.decays.empty() || fit.edges.size() < 2) {
        bad_field(path, "empty decays or edges");
    }
    const std::size_t nl = fit.decays.size();
    const std::size_t bins = fit.edges.size() - 1;
    const auto counts = numbers(member(doc, "counts", path), kNumEventTypes, path + ".counts");
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        fit.counts[a] = static_cast<std::size_t>(counts[a]);
    }
    fit.rate = fixed_numbers<kNumEventTypes>(member(doc, "rate", path), path + ".rate");
    fit.delta = fixed_numbers<kNumEventTypes>(member(doc, "delta", path), path + ".delta");
    fit.contrast = fixed_numbers<kNumEventTypes>(member(doc, "contrast", path), path + ".contrast");
    const Json& failed = array_of(member(doc, "failed", path), kNumEventTypes, path + ".failed");
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        fit.failed[a] = failed[a].get<bool>();
    }
    fit.flags = member(doc, "flags", path).get<std::vector<std::string>>();
    const auto baseline = tensor_values(member(doc, "baseline", path), {kNumEventTypes, bins}, path + ".baseline");
    fit.baseline = Matrix(kNumEventTypes, static_cast<Eigen::Index>(bins));
    for (std::size_t a = 0; a < kNumEventTypes; ++a) {
        for (std::size_t k = 0; k < bins; ++k) {
            fit.baseline(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) = baseline[a * bins + k];
        }
    }
    fit.self_coeffs = tensor_values(member(doc, "self", path), {kNumEventTypes, kNumEventTypes, nl}, path + ".self");
    fit.market_coeffs =
        tensor_values(member(doc, "market", path), {kNumEventTypes, kNumEventTypes, nl}, path + ".market");
    return fit;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& err) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + err.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

} // namespace hawkesvol
