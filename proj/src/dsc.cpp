#include "vdsc/dsc.hpp"

#include <cmath>
#include <sstream>

namespace vdsc {

FilterSchedule FilterSchedule::constant(double c) {
    FilterSchedule s;
    s.kind = Kind::Constant;
    s.value = c;
    return s;
}

FilterSchedule FilterSchedule::exp_decay(double floor, double scale) {
    FilterSchedule s;
    s.kind = Kind::ExpDecay;
    s.floor = floor;
    s.scale = scale;
    return s;
}

double FilterSchedule::at(double t) const noexcept {
    return kind == Kind::Constant ? value : scale * std::exp(-t) + floor;
}

ControllerConfig ControllerConfig::baseline() const {
    ControllerConfig out = *this;
    out.vpsef = VpsefConfig::identity(vpsef.threshold);
    out.vpsef.hysteresis = vpsef.hysteresis;
    return out;
}

void validate(const ControllerConfig& cfg, int order, const std::string& prefix) {
    const auto n = static_cast<std::size_t>(order);
    if (cfg.gains.size() != n) {
        throw ConfigError(prefix + ".gains", "expected " + std::to_string(n) + " gains, got " +
                                                 std::to_string(cfg.gains.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(cfg.gains[i] > 0.0) || !std::isfinite(cfg.gains[i])) {
            throw ConfigError(prefix + ".gains[" + std::to_string(i) + "]", "gain must be positive and finite");
        }
    }
    if (cfg.sigma.size() + 1 != n) {
        throw ConfigError(prefix + ".sigma", "expected " + std::to_string(n - 1) + " filter schedules, got " +
                                                 std::to_string(cfg.sigma.size()));
    }
    for (std::size_t i = 0; i < cfg.sigma.size(); ++i) {
        const auto& s = cfg.sigma[i];
        const std::string key = prefix + ".sigma[" + std::to_string(i) + "]";
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (s.kind == FilterSchedule::Kind::Constant) {
            if (!positive(s.value)) throw ConfigError(key + ".value", "filter constant must be positive");
        } else {
            if (!positive(s.floor)) throw ConfigError(key + ".floor", "floor must be positive");
            if (!positive(s.scale)) throw ConfigError(key + ".scale", "scale must be positive");
        }
    }
    if (!(cfg.gain_guard > 0.0)) throw ConfigError(prefix + ".gain_guard", "must be positive");
    try {
        validate(cfg.vpsef);
    } catch (const VpsefConfigError& e) {
        throw ConfigError(prefix + ".vpsef." + e.key(), e.what());
    }
}

GainSingularityError::GainSingularityError(int stage, double t, std::vector<double> x, double gain)
    : ControlError(stage,
                   [&] {
                       std::ostringstream os;
                       os.precision(17);
                       os << "control gain g_n = " << gain << " below singularity guard at t = " << t << ", x = (";
                       for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
                       os << ")";
                       return os.str();
                   }()),
      t_(t),
      x_(std::move(x)),
      gain_(gain) {}

namespace {

SurfaceValue shape(double e, const ControllerConfig& cfg, std::optional<Regime> previous) {
    return previous ? surface_error(e, cfg.vpsef, *previous) : surface_error(e, cfg.vpsef);
}

}  // namespace

StageOutput virtual_law_first(std::span<const double> x, double t, const ReferenceSpec& ref, const expr::Expr& f1,
                              const ControllerConfig& cfg, std::optional<Regime> previous) {
    const expr::Env env{t, x};
    StageOutput out;
    out.psi = shape(x[0] - expr::eval(ref.yr, env), cfg, previous);
    out.beta = -cfg.gains[0] * out.psi.shaped - expr::eval(f1, env) + expr::eval(ref.yr_dot, env);
    return out;
}

double filter_derivative(double beta, double a, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("filter time constant must be positive");
    return (beta - a) / sigma;
}

StageOutput virtual_law_mid(int stage, std::span<const double> x, double t, double a_i, double a_dot_i,
                            const expr::Expr& fi, const ControllerConfig& cfg, std::optional<Regime> previous) {
    if (stage < 2 || static_cast<std::size_t>(stage) >= x.size()) {
        throw std::invalid_argument("intermediate stage index " + std::to_string(stage) + " out of range");
    }
    const auto i = static_cast<std::size_t>(stage - 1);
    StageOutput out;
    out.psi = shape(x[i] - a_i, cfg, previous);
    out.beta = -cfg.gains[i] * out.psi.shaped - expr::eval(fi, {t, x}) + a_dot_i;
    return out;
}

ActualOutput actual_law(std::span<const double> x, double t, double a_n, double a_dot_n, const expr::Expr& fn,
                        const expr::Expr& gn, const ControllerConfig& cfg, std::optional<Regime> previous) {
    const expr::Env env{t, x};
    const int n = static_cast<int>(x.size());
    const double g = expr::eval(gn, env);
    if (!(std::fabs(g) >= cfg.gain_guard)) {
        throw GainSingularityError(n, t, std::vector<double>(x.begin(), x.end()), g);
    }
    ActualOutput out;
    out.psi = shape(x.back() - a_n, cfg, previous);
    out.u = (-cfg.gains.back() * out.psi.shaped - expr::eval(fn, env) + a_dot_n) / g;
    return out;
}

// ---------------------------------------------------------------------------

ClosedLoop::ClosedLoop(SystemSpec spec, ReferenceSpec ref, ControllerConfig cfg)
    : ClosedLoop(std::move(spec), std::move(ref), std::move(cfg), Unchecked{}) {
    validate(cfg_, spec_.order);
}

ClosedLoop::ClosedLoop(SystemSpec spec, ReferenceSpec ref, ControllerConfig cfg, Unchecked)
    : spec_(std::move(spec)), ref_(std::move(ref)), cfg_(std::move(cfg)) {
    validate(spec_);
    check_dimensions();
    strict_ = to_strict_form(spec_);
}

void ClosedLoop::check_dimensions() const {
    const auto n = static_cast<std::size_t>(spec_.order);
    if (cfg_.gains.size() != n) throw ConfigError("controller.gains", "size does not match system order");
    if (cfg_.sigma.size() + 1 != n) throw ConfigError("controller.sigma", "size does not match system order");
}

ControlTrace ClosedLoop::derivative(double t, std::span<const double> state, std::span<double> out,
                                    std::span<const Regime> previous) const {
    const auto n = static_cast<std::size_t>(spec_.order);
    if (state.size() != dimension() || out.size() != dimension()) {
        throw std::invalid_argument("closed-loop state must have length 2n-1 = " + std::to_string(dimension()));
    }
    if (!previous.empty() && previous.size() != n) {
        throw std::invalid_argument("previous regimes must have one entry per stage");
    }
    auto prev = [&](std::size_t stage) -> std::optional<Regime> {
        return previous.empty() ? std::nullopt : std::optional<Regime>(previous[stage - 1]);
    };

    const auto x = state.first(n);
    const auto a = state.subspan(n);  // a[j] holds a_{j+2}
    ControlTrace trace;
    trace.psi.resize(n);
    trace.beta.resize(n - 1);
    trace.a_dot.resize(n - 1);

    std::size_t stage = 1;
    try {
        if (n == 1) {
            // Degenerate loop: the reference plays the role of the filter output.
            const expr::Env env{t, x};
            const double yr = expr::eval(ref_.yr, env);
            const double yr_dot = expr::eval(ref_.yr_dot, env);
            ActualOutput act = actual_law(x, t, yr, yr_dot, spec_.drift, spec_.gain, cfg_, prev(1));
            trace.psi[0] = act.psi;
            trace.u = act.u;
        } else {
            StageOutput s = virtual_law_first(x, t, ref_, strict_[0], cfg_, prev(1));
            trace.psi[0] = s.psi;
            trace.beta[0] = s.beta;
            trace.a_dot[0] = filter_derivative(s.beta, a[0], cfg_.sigma[0].at(t));
            for (stage = 2; stage < n; ++stage) {
                const std::size_t j = stage - 2;  // a_stage lives at a[j]
                s = virtual_law_mid(static_cast<int>(stage), x, t, a[j], trace.a_dot[j], strict_[stage - 1], cfg_,
                                    prev(stage));
                trace.psi[stage - 1] = s.psi;
                trace.beta[j + 1] = s.beta;
                trace.a_dot[j + 1] = filter_derivative(s.beta, a[j + 1], cfg_.sigma[j + 1].at(t));
            }
            stage = n;
            ActualOutput act =
                actual_law(x, t, a[n - 2], trace.a_dot[n - 2], spec_.drift, spec_.gain, cfg_, prev(n));
            trace.psi[n - 1] = act.psi;
            trace.u = act.u;
        }

        stage = 0;
        const expr::Env env{t, x};
        for (std::size_t i = 0; i + 1 < n; ++i) out[i] = expr::eval(spec_.fstar[i], env);
        out[n - 1] = expr::eval(spec_.gain, env) * trace.u + expr::eval(spec_.drift, env);
        for (std::size_t j = 0; j + 1 < n; ++j) out[n + j] = trace.a_dot[j];
    } catch (const ControlError&) {
        throw;
    } catch (const std::exception& e) {
        throw ControlError(static_cast<int>(stage), e.what());
    }
    return trace;
}

LoopDerivative closed_loop_derivative(std::span<const double> state, double t, const SystemSpec& spec,
                                      const ReferenceSpec& ref, const ControllerConfig& cfg) {
    ClosedLoop loop(spec, ref, cfg);
    LoopDerivative out;
    out.derivative.resize(loop.dimension());
    out.trace = loop.derivative(t, state, out.derivative, {});
    return out;
}

}  // namespace vdsc
