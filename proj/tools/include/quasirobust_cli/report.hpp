#pragma once

#include <string>

#include "json.hpp"
#include "quasirobust/robust.hpp"

namespace quasirobust::cli {

/// Marker line separating the human-readable part of a report from its JSON block.
inline constexpr const char* kMachineMarker = "--- machine-readable ---";

nlohmann::json report_to_json(const SolveReport& report);

/// Inverse of report_to_json for the numeric fields and measures.
SolveReport report_from_json(const nlohmann::json& j, const Reference& reference);

/// Extracts and parses the JSON block of a full report text.
nlohmann::json machine_block(const std::string& report_text);

/// Full-precision scientific notation used in CSV and text output.
std::string sci(double v);

/// Encodes non-finite values as the strings "inf", "-inf" and "nan".
nlohmann::json encode(double v);
double decode(const nlohmann::json& j);

}  // namespace quasirobust::cli
