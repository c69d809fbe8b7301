#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdsc/dsc.hpp"

namespace vdsc {

/// Derivative callback: writes dy/dt at (t, y) into dy.
using Derivative = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

class IntegrationError : public std::runtime_error {
   public:
    IntegrationError(int stage, double t, const std::string& what)
        : std::runtime_error(what), stage_(stage), t_(t) {}
    /// RK4 stage (1..4) whose derivative was non-finite.
    [[nodiscard]] int stage() const noexcept { return stage_; }
    [[nodiscard]] double time() const noexcept { return t_; }

   private:
    int stage_;
    double t_;
};

/// Classical RK4 with stage times t, t+h/2, t+h/2, t+h.
[[nodiscard]] std::vector<double> rk4_step(const Derivative& f, std::span<const double> y, double t, double h);

struct SimConfig {
    double h = 1e-3;
    double t_end = 10.0;
    std::vector<double> x0;
    std::vector<double> a0;
};

/// Throws ConfigError (keys under "sim.") for invalid integration settings.
void validate(const SimConfig& sim, int order);

/// Number of records: floor(t_end/h) + 1.
[[nodiscard]] std::size_t record_count(const SimConfig& sim);

struct Record {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> a;
    std::vector<SurfaceValue> psi;
    std::vector<double> beta;
    double u = 0.0;
    double yr = 0.0;
    double e = 0.0;  // x_1 - y_r
};

struct Trajectory {
    int order = 0;
    double h = 0.0;
    std::vector<Record> records;
};

/// Failure during simulate(); time() is the start of the step that failed.
class SimulationError : public std::runtime_error {
   public:
    SimulationError(double t, const std::string& what) : std::runtime_error(what), t_(t) {}
    [[nodiscard]] double time() const noexcept { return t_; }

   private:
    double t_;
};

/// State or stage derivative became non-finite.
class DivergenceError : public SimulationError {
   public:
    using SimulationError::SimulationError;
};

struct SimOptions {
    /// Off only for deliberate destabilisation studies (e.g. negative gains).
    bool validate_controller = true;
};

/// Fixed-step RK4 integration of the closed loop, recording every step.
[[nodiscard]] Trajectory simulate(const SystemSpec& spec, const ReferenceSpec& ref, const ControllerConfig& cfg,
                                  const SimConfig& sim, SimOptions options = {});

struct Metrics {
    double settling_time = 0.0;  // t_end sentinel when not settled
    bool settled = false;
    double ss_error = 0.0;        // max |e| over the final window
    double ise = 0.0;             // trapezoidal integral of e^2
    double peak_overshoot = 0.0;  // max |e| from first band entry on
    double peak_error = 0.0;      // max |e| overall
    double control_effort = 0.0;  // trapezoidal integral of u^2
};

inline constexpr double kDefaultBand = 0.01;
inline constexpr double kDefaultWindow = 0.3;

[[nodiscard]] Metrics compute_metrics(const Trajectory& traj, double band = kDefaultBand,
                                      double window = kDefaultWindow);

/// max |e| over records with t0 <= t <= t1.
[[nodiscard]] double peak_abs_error(const Trajectory& traj, double t0, double t1);

/// True when every recorded value is finite.
[[nodiscard]] bool all_finite(const Trajectory& traj);

/// Bitwise equality of every recorded value and branch label.
[[nodiscard]] bool bit_identical(const Trajectory& a, const Trajectory& b);

}  // namespace vdsc
