#pragma once

// Scenario config files (JSON), trajectory CSV and metric reports.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vdsc/scenarios.hpp"

namespace vdsc::io {

class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Strict loader: unknown keys, wrong types and invalid values raise ConfigError
/// with the dotted key path.
[[nodiscard]] Scenario scenario_from_json(const nlohmann::json& doc, const std::string& default_name = "scenario");
[[nodiscard]] nlohmann::json scenario_to_json(const Scenario& scn);

/// Reads and parses a config file. Syntax errors report line and column.
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& path);

/// 17 significant digits; parses back to the same double.
[[nodiscard]] std::string format_double(double v);

[[nodiscard]] std::string csv_header(int order);
void write_csv(std::ostream& os, const Trajectory& traj);
void write_csv(const std::filesystem::path& path, const Trajectory& traj);

[[nodiscard]] nlohmann::json metrics_to_json(const Metrics& m);
[[nodiscard]] nlohmann::json comparison_to_json(const Scenario& scn, const Comparison& cmp);
void write_error_difference_csv(const std::filesystem::path& path, const Comparison& cmp);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace vdsc::io
