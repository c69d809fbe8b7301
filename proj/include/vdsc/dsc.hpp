#pragma once

// Switched backstepping dynamic-surface controller.
//
// Stage 1      e_1 = x_1 - y_r            beta_2     = -k_1 psi_1 - f_1(x) + y_r'
// Stage i<n    e_i = x_i - a_i            beta_{i+1} = -k_i psi_i - f_i(x) + a_i'
// Stage n      e_n = x_n - a_n            u          = (-k_n psi_n - f_n(x) + a_n') / g_n(x)
// Filters      sigma_i(t) a_i' + a_i = beta_i, so a_i' = (beta_i - a_i) / sigma_i(t)
//
// psi_i is the variable-power surface of e_i. Stage i only reads a_i and a_i',
// which is what lets the loop be evaluated front to back without feedback from u.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdsc/expr.hpp"
#include "vdsc/model.hpp"
#include "vdsc/vpsef.hpp"

namespace vdsc {

/// Filter time constant: either constant or scale*exp(-t) + floor.
struct FilterSchedule {
    enum class Kind { Constant, ExpDecay };

    Kind kind = Kind::Constant;
    double value = 1.0;  // Constant
    double floor = 0.0;  // ExpDecay
    double scale = 0.0;  // ExpDecay

    [[nodiscard]] static FilterSchedule constant(double c);
    [[nodiscard]] static FilterSchedule exp_decay(double floor, double scale);
    [[nodiscard]] double at(double t) const noexcept;
};

struct ControllerConfig {
    std::vector<double> gains;           // k_1..k_n
    VpsefConfig vpsef;
    std::vector<FilterSchedule> sigma;   // sigma_2..sigma_n
    double gain_guard = 1e-8;

    /// Same controller with plain (p = q) surfaces.
    [[nodiscard]] ControllerConfig baseline() const;
};

/// Invalid configuration value; key() is the dotted path, e.g. "controller.gains[0]".
class ConfigError : public std::invalid_argument {
   public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

   private:
    std::string key_;
};

/// Checks sizes against `order`, k_i > 0, sigma_i(t) > 0 for t >= 0 and the vpsef block.
void validate(const ControllerConfig& cfg, int order, const std::string& prefix = "controller");

/// Failure inside the control recursion; stage() is 1-based (0 means plant dynamics).
class ControlError : public std::runtime_error {
   public:
    ControlError(int stage, const std::string& what)
        : std::runtime_error("stage " + std::to_string(stage) + ": " + what), stage_(stage) {}
    [[nodiscard]] int stage() const noexcept { return stage_; }

   private:
    int stage_;
};

class GainSingularityError : public ControlError {
   public:
    GainSingularityError(int stage, double t, std::vector<double> x, double gain);
    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] const std::vector<double>& state() const noexcept { return x_; }
    [[nodiscard]] double gain() const noexcept { return gain_; }

   private:
    double t_;
    std::vector<double> x_;
    double gain_;
};

struct StageOutput {
    SurfaceValue psi;
    double beta = 0.0;  // beta_{i+1}
};

struct ActualOutput {
    SurfaceValue psi;
    double u = 0.0;
};

/// Stage 1: psi_1 from e_1 = x_1 - y_r(t), returns beta_2.
[[nodiscard]] StageOutput virtual_law_first(std::span<const double> x, double t, const ReferenceSpec& ref,
                                            const expr::Expr& f1, const ControllerConfig& cfg,
                                            std::optional<Regime> previous = std::nullopt);

/// a' = (beta - a) / sigma. Throws std::invalid_argument unless sigma > 0.
[[nodiscard]] double filter_derivative(double beta, double a, double sigma);

/// Stage i, 2 <= i <= n-1: psi_i from e_i = x_i - a_i, returns beta_{i+1}.
[[nodiscard]] StageOutput virtual_law_mid(int stage, std::span<const double> x, double t, double a_i,
                                          double a_dot_i, const expr::Expr& fi, const ControllerConfig& cfg,
                                          std::optional<Regime> previous = std::nullopt);

/// Stage n: actual control. Throws GainSingularityError when |g_n(x)| < cfg.gain_guard.
[[nodiscard]] ActualOutput actual_law(std::span<const double> x, double t, double a_n, double a_dot_n,
                                      const expr::Expr& fn, const expr::Expr& gn, const ControllerConfig& cfg,
                                      std::optional<Regime> previous = std::nullopt);

struct ControlTrace {
    std::vector<SurfaceValue> psi;  // n
    std::vector<double> beta;       // beta_2..beta_n
    std::vector<double> a_dot;      // a_2'..a_n'
    double u = 0.0;
};

/// Closed loop over the stacked state [x_1..x_n, a_2..a_n] (length 2n-1).
class ClosedLoop {
   public:
    struct Unchecked {};

    ClosedLoop(SystemSpec spec, ReferenceSpec ref, ControllerConfig cfg);
    /// Skips controller validation (dimensions are still checked).
    ClosedLoop(SystemSpec spec, ReferenceSpec ref, ControllerConfig cfg, Unchecked);

    [[nodiscard]] int order() const noexcept { return spec_.order; }
    [[nodiscard]] std::size_t dimension() const noexcept { return 2 * static_cast<std::size_t>(spec_.order) - 1; }
    [[nodiscard]] const SystemSpec& system() const noexcept { return spec_; }
    [[nodiscard]] const ReferenceSpec& reference() const noexcept { return ref_; }
    [[nodiscard]] const ControllerConfig& controller() const noexcept { return cfg_; }

    /// Writes the stacked derivative into `out`. `previous` (empty, or one regime
    /// per stage) only matters when the vpsef hysteresis band is nonzero.
    ControlTrace derivative(double t, std::span<const double> state, std::span<double> out,
                            std::span<const Regime> previous = {}) const;

   private:
    void check_dimensions() const;

    SystemSpec spec_;
    ReferenceSpec ref_;
    ControllerConfig cfg_;
    std::vector<expr::Expr> strict_;
};

struct LoopDerivative {
    std::vector<double> derivative;
    ControlTrace trace;
};

[[nodiscard]] LoopDerivative closed_loop_derivative(std::span<const double> state, double t, const SystemSpec& spec,
                                                    const ReferenceSpec& ref, const ControllerConfig& cfg);

}  // namespace vdsc
