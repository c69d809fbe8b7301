#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vdsc/dsc.hpp"
#include "vdsc/model.hpp"
#include "vdsc/sim.hpp"

namespace vdsc {

struct MetricSettings {
    double band = kDefaultBand;
    double window = kDefaultWindow;
};

struct Scenario {
    std::string name;
    SystemSpec system;
    ReferenceSpec reference;
    ControllerConfig controller;
    SimConfig sim;
    std::optional<ControllerConfig> baseline;
    MetricSettings metrics;
};

/// Structural checks across all parts; throws ModelError or ConfigError.
void validate(const Scenario& scn);

enum class Builtin { PaperSin, PaperExp };

class UnknownScenarioError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Third-order non-triangular plant
///   x1' = x1^2 + x2^3 + x3,  x2' = x1^2 x2 + x3^5,  x3' = u + x1 x2 x3^2
/// with k = (3, 3, 3), threshold 0.1, sigma_2 = sigma_3 = exp(-t) + 0.05,
/// x(0) = (0, -1, 1), a(0) = (0, 0). PaperSin tracks sin(t), PaperExp 1 - exp(-t).
/// The baseline is the same controller with p = q surfaces.
[[nodiscard]] Scenario builtin(Builtin which);
[[nodiscard]] Scenario builtin(std::string_view name);
[[nodiscard]] std::vector<std::string> builtin_names();

struct MetricDeltas {
    double ise = 0.0;
    double peak_error = 0.0;
    double settling_time = 0.0;
    double control_effort = 0.0;
    double ss_error = 0.0;
};

/// Main controller minus baseline.
[[nodiscard]] MetricDeltas metric_deltas(const Metrics& main, const Metrics& baseline);

struct Comparison {
    Trajectory vpsef;
    Trajectory baseline;
    Metrics vpsef_metrics;
    Metrics baseline_metrics;
    MetricDeltas deltas;
    std::vector<double> t;
    std::vector<double> abs_error_diff;  // |e_vpsef(t)| - |e_baseline(t)|
};

/// Error from one side of a comparison; which() is "vpsef" or "baseline".
class ComparisonError : public std::runtime_error {
   public:
    ComparisonError(std::string which, const std::string& what)
        : std::runtime_error(which + " controller failed: " + what), which_(std::move(which)) {}
    [[nodiscard]] const std::string& which() const noexcept { return which_; }

   private:
    std::string which_;
};

class NoBaselineError : public std::invalid_argument {
   public:
    NoBaselineError() : std::invalid_argument("no baseline configured") {}
};

/// Runs the main and baseline controllers concurrently on identical plant,
/// reference and initial state.
[[nodiscard]] Comparison compare(const Scenario& scn);

}  // namespace vdsc
