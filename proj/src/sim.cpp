#include "vdsc/sim.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace vdsc {

namespace {

void require_finite(std::span<const double> v, int stage, double t) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw IntegrationError(stage, t,
                                   "non-finite derivative component " + std::to_string(i) + " at RK4 stage " +
                                       std::to_string(stage) + " (t = " + std::to_string(t) + ")");
        }
    }
}

}  // namespace

std::vector<double> rk4_step(const Derivative& f, std::span<const double> y, double t, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const double half = 0.5 * h;

    f(t, y, k1);
    require_finite(k1, 1, t);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k1[i];
    f(t + half, tmp, k2);
    require_finite(k2, 2, t + half);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k2[i];
    f(t + half, tmp, k3);
    require_finite(k3, 3, t + half);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    f(t + h, tmp, k4);
    require_finite(k4, 4, t + h);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

void validate(const SimConfig& sim, int order) {
    if (!(sim.h > 0.0) || !std::isfinite(sim.h)) throw ConfigError("sim.h", "step size must be positive");
    if (!(sim.t_end > 0.0) || !std::isfinite(sim.t_end)) throw ConfigError("sim.t_end", "horizon must be positive");
    if (sim.h > sim.t_end) throw ConfigError("sim.h", "step size exceeds horizon");
    if (sim.x0.size() != static_cast<std::size_t>(order)) {
        throw ConfigError("sim.x0", "expected " + std::to_string(order) + " initial states");
    }
    if (sim.a0.size() + 1 != static_cast<std::size_t>(order)) {
        throw ConfigError("sim.a0", "expected " + std::to_string(order - 1) + " initial filter states");
    }
    for (std::size_t i = 0; i < sim.x0.size(); ++i) {
        if (!std::isfinite(sim.x0[i])) throw ConfigError("sim.x0[" + std::to_string(i) + "]", "must be finite");
    }
    for (std::size_t i = 0; i < sim.a0.size(); ++i) {
        if (!std::isfinite(sim.a0[i])) throw ConfigError("sim.a0[" + std::to_string(i) + "]", "must be finite");
    }
}

std::size_t record_count(const SimConfig& sim) {
    // Relative slack absorbs t_end/h landing a hair below an integer (10/0.001).
    return static_cast<std::size_t>(std::floor(sim.t_end / sim.h * (1.0 + 1e-12))) + 1;
}

Trajectory simulate(const SystemSpec& spec, const ReferenceSpec& ref, const ControllerConfig& cfg,
                    const SimConfig& sim, SimOptions options) {
    validate(sim, spec.order);
    const ClosedLoop loop = options.validate_controller ? ClosedLoop(spec, ref, cfg)
                                                        : ClosedLoop(spec, ref, cfg, ClosedLoop::Unchecked{});
    const auto n = static_cast<std::size_t>(spec.order);
    const bool latch = cfg.vpsef.hysteresis > 0.0;

    std::vector<double> y(sim.x0);
    y.insert(y.end(), sim.a0.begin(), sim.a0.end());
    std::vector<double> scratch(y.size());
    std::vector<Regime> regimes;

    Trajectory traj;
    traj.order = spec.order;
    traj.h = sim.h;
    const std::size_t count = record_count(sim);
    traj.records.reserve(count);

    auto fail = [](double t, const std::exception& e) -> SimulationError {
        return SimulationError(t, "simulation failed at t = " + std::to_string(t) + ": " + e.what());
    };

    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * sim.h;
        ControlTrace trace;
        try {
            trace = loop.derivative(t, y, scratch, regimes);
        } catch (const std::exception& e) {
            throw fail(t, e);
        }

        Record rec;
        rec.t = t;
        rec.x.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
        rec.a.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
        rec.psi = trace.psi;
        rec.beta = trace.beta;
        rec.u = trace.u;
        rec.yr = expr::eval(ref.yr, {t, rec.x});
        rec.e = rec.x[0] - rec.yr;
        traj.records.push_back(std::move(rec));

        if (latch) {
            regimes.resize(n);
            for (std::size_t i = 0; i < n; ++i) regimes[i] = trace.psi[i].regime;
        }
        if (k + 1 == count) break;

        const Derivative f = [&](double ts, std::span<const double> ys, std::span<double> dy) {
            loop.derivative(ts, ys, dy, regimes);
        };
        try {
            y = rk4_step(f, y, t, sim.h);
        } catch (const IntegrationError& e) {
            throw DivergenceError(t, "divergence at t = " + std::to_string(t) + ": " + e.what());
        } catch (const std::exception& e) {
            throw fail(t, e);
        }
        for (double v : y) {
            if (!std::isfinite(v)) {
                throw DivergenceError(t, "divergence: non-finite state after step from t = " + std::to_string(t));
            }
        }
    }
    return traj;
}

Metrics compute_metrics(const Trajectory& traj, double band, double window) {
    if (traj.records.empty()) throw std::invalid_argument("cannot compute metrics of an empty trajectory");
    if (!(band > 0.0)) throw std::invalid_argument("settling band must be positive");
    if (!(window > 0.0 && window <= 1.0)) throw std::invalid_argument("window must be in (0, 1]");

    const auto& r = traj.records;
    const double t_end = r.back().t;
    Metrics m;

    std::ptrdiff_t last_out = -1;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (std::fabs(r[i].e) > band) last_out = static_cast<std::ptrdiff_t>(i);
    }
    if (last_out < 0) {
        m.settled = true;
        m.settling_time = r.front().t;
    } else if (static_cast<std::size_t>(last_out) + 1 < r.size()) {
        m.settled = true;
        m.settling_time = r[static_cast<std::size_t>(last_out) + 1].t;
    } else {
        m.settled = false;
        m.settling_time = t_end;
    }

    const double window_start = t_end - window * t_end;
    std::size_t first_in = r.size();
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double ae = std::fabs(r[i].e);
        m.peak_error = std::max(m.peak_error, ae);
        if (r[i].t >= window_start) m.ss_error = std::max(m.ss_error, ae);
        if (first_in == r.size() && ae <= band) first_in = i;
        if (i > 0) {
            const double dt = r[i].t - r[i - 1].t;
            m.ise += 0.5 * dt * (r[i].e * r[i].e + r[i - 1].e * r[i - 1].e);
            m.control_effort += 0.5 * dt * (r[i].u * r[i].u + r[i - 1].u * r[i - 1].u);
        }
    }
    if (first_in == r.size()) {
        m.peak_overshoot = m.peak_error;
    } else {
        for (std::size_t i = first_in; i < r.size(); ++i) m.peak_overshoot = std::max(m.peak_overshoot, std::fabs(r[i].e));
    }
    return m;
}

double peak_abs_error(const Trajectory& traj, double t0, double t1) {
    double peak = 0.0;
    for (const auto& rec : traj.records) {
        if (rec.t >= t0 && rec.t <= t1) peak = std::max(peak, std::fabs(rec.e));
    }
    return peak;
}

bool all_finite(const Trajectory& traj) {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
    };
    for (const auto& rec : traj.records) {
        if (!finite(rec.x) || !finite(rec.a) || !finite(rec.beta)) return false;
        if (!std::isfinite(rec.u) || !std::isfinite(rec.yr) || !std::isfinite(rec.e)) return false;
        for (const auto& p : rec.psi) {
            if (!std::isfinite(p.raw) || !std::isfinite(p.shaped)) return false;
        }
    }
    return true;
}

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
               return same_bits(x, y);
           });
}

}  // namespace

bool bit_identical(const Trajectory& a, const Trajectory& b) {
    if (a.order != b.order || a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        if (!same_bits(ra.t, rb.t) || !same_bits(ra.x, rb.x) || !same_bits(ra.a, rb.a) ||
            !same_bits(ra.beta, rb.beta) || !same_bits(ra.u, rb.u) || !same_bits(ra.yr, rb.yr) ||
            !same_bits(ra.e, rb.e) || ra.psi.size() != rb.psi.size()) {
            return false;
        }
        for (std::size_t j = 0; j < ra.psi.size(); ++j) {
            if (!same_bits(ra.psi[j].raw, rb.psi[j].raw) || !same_bits(ra.psi[j].shaped, rb.psi[j].shaped) ||
                ra.psi[j].branch != rb.psi[j].branch) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace vdsc
