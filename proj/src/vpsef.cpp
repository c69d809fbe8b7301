#include "vdsc/vpsef.hpp"

#include <cmath>

namespace vdsc {

VpsefConfig VpsefConfig::identity(double threshold) {
    VpsefConfig cfg;
    cfg.threshold = threshold;
    cfg.p_hi = cfg.q_hi = 1;
    cfg.p_lo = cfg.q_lo = 1;
    return cfg;
}

void validate(const VpsefConfig& cfg) {
    if (!(cfg.threshold > 0.0) || !std::isfinite(cfg.threshold)) {
        throw VpsefConfigError("threshold", "must be a finite positive number");
    }
    if (cfg.p_hi < 1) throw VpsefConfigError("p_hi", "must be a positive integer");
    if (cfg.q_hi < 1) throw VpsefConfigError("q_hi", "must be a positive integer");
    if (cfg.p_lo < 1) throw VpsefConfigError("p_lo", "must be a positive integer");
    if (cfg.q_lo < 1) throw VpsefConfigError("q_lo", "must be a positive integer");
    if (cfg.p_hi < cfg.q_hi) throw VpsefConfigError("p_hi", "large-error branch needs p_hi >= q_hi");
    if (cfg.p_lo > cfg.q_lo) throw VpsefConfigError("p_lo", "small-error branch needs p_lo <= q_lo");
    if (!(cfg.hysteresis >= 0.0) || !std::isfinite(cfg.hysteresis)) {
        throw VpsefConfigError("hysteresis", "must be a finite non-negative number");
    }
    if (cfg.hysteresis / 2.0 >= cfg.threshold) {
        throw VpsefConfigError("hysteresis", "half band must be smaller than the threshold");
    }
}

const char* to_string(Branch b) noexcept {
    switch (b) {
        case Branch::Large: return "large";
        case Branch::Small: return "small";
        case Branch::Identity: return "identity";
    }
    return "?";
}

namespace {

SurfaceValue shape(double e, const VpsefConfig& cfg, Regime regime) noexcept {
    const bool large = regime == Regime::Large;
    const int p = large ? cfg.p_hi : cfg.p_lo;
    const int q = large ? cfg.q_hi : cfg.q_lo;
    SurfaceValue out;
    out.raw = e;
    out.regime = regime;
    if (p == q) {
        out.shaped = e;
        out.branch = Branch::Identity;
        return out;
    }
    out.branch = large ? Branch::Large : Branch::Small;
    const double mag = std::pow(std::fabs(e), static_cast<double>(p) / static_cast<double>(q));
    out.shaped = std::copysign(mag, e);
    if (e == 0.0) out.shaped = e;
    return out;
}

}  // namespace

SurfaceValue surface_error(double e, const VpsefConfig& cfg) noexcept {
    return shape(e, cfg, std::fabs(e) > cfg.threshold ? Regime::Large : Regime::Small);
}

SurfaceValue surface_error(double e, const VpsefConfig& cfg, Regime previous) noexcept {
    if (cfg.hysteresis <= 0.0) return surface_error(e, cfg);
    const double half = cfg.hysteresis / 2.0;
    const double mag = std::fabs(e);
    Regime regime = previous;
    if (previous == Regime::Small && mag > cfg.threshold + half) regime = Regime::Large;
    if (previous == Regime::Large && mag <= cfg.threshold - half) regime = Regime::Small;
    return shape(e, cfg, regime);
}

}  // namespace vdsc
