#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "freecircle/limits.hpp"
#include "freecircle/measure.hpp"

namespace freecircle::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Literal parsers. `field` is the config path used in error messages.
CircleMeasure parse_measure(const json& j, const std::string& field);
AtomicMeasure parse_atomic(const json& j, const std::string& field);
SequenceSpec parse_sequence(const json& j, const std::string& field);

struct Budget {
  double flops = 2e11;
  int max_letters = 24;
};

// "<flops>[:<max_letters>]", e.g. "5e11" or "1e12:28".
Budget parse_budget(const std::string& text);
Budget budget_from_env();

// Sorted keys, floats at 17 significant digits, non-finite as null.
std::string dump(const json& j);

struct RunOptions {
  std::optional<std::string> output;
  std::optional<std::string> format;
  Budget budget;
};

struct RunOutcome {
  int exit_code = 0;
  std::string document;  // what was written
};

// Runs one experiment config. Results go to the output path (atomically) or
// to `out` when none is configured; diagnostics go to `err`.
int run(const std::string& config_path, const RunOptions& options, std::ostream& out, std::ostream& err);

// Same on an already-parsed config; throws freecircle::Error on bad input.
RunOutcome execute(const json& config, const RunOptions& options);

void write_atomic(const std::string& path, const std::string& content);

}  // namespace freecircle::cli
