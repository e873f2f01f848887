#pragma once

#include "hawkesvol/estimation.hpp"
#include "hawkesvol/model_core.hpp"

#include "json.hpp"

#include <filesystem>

namespace hawkesvol {

using Json = nlohmann::ordered_json;

/// Model spec / truth file:
///   {"session_open": s, "decays": [L], "components": [{"agent", "type", "delta"}],
///    "kernels": [n][n][L], "baseline": {"edges": [K+1], "values": [n][K]}}
Json model_to_json(const HawkesModel& model, double session_open);
/// Throws InvalidArgument naming the offending field path.
HawkesModel model_from_json(const Json& doc, double* session_open = nullptr);

Json fit_to_json(const AgentFitResult& fit);
AgentFitResult fit_from_json(const Json& doc);

Json read_json(const std::filesystem::path& path);
/// Two-space indented dump with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& doc);

} // namespace hawkesvol
