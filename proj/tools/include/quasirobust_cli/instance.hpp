#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "quasirobust/ambiguity.hpp"
#include "quasirobust/market.hpp"
#include "quasirobust/measure.hpp"
#include "quasirobust/utility.hpp"

namespace quasirobust::cli {

struct RunBlock {
  std::vector<double> xs{1.0};
  bool grid = false;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  bool oracle = true;
  int y_samples = 20;
  int axiom_samples = 10000;
  int saddle_samples = 500;
};

struct Instance {
  std::string source;
  std::optional<FiniteMarket> market;
  std::optional<UtilitySpec> utility;
  std::optional<AmbiguitySpec> ambiguity;
  std::optional<MeasureFamily> family;
  RunBlock run;
};

/// Parses and validates an instance document. Throws Error(SchemaError) whose
/// message starts with the offending field path.
Instance parse_instance(const nlohmann::json& doc, const std::string& source = "<memory>");

/// Reads a file and parses it; JSON syntax errors carry line and column.
Instance load_instance(const std::string& path);

}  // namespace quasirobust::cli
