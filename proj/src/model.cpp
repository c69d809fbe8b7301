#include "vdsc/model.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace vdsc {

using expr::Expr;

namespace {

void check_vars(const Expr& e, int order, const std::string& label) {
    int k = expr::max_state_index(e);
    if (k > order) {
        throw ModelError(label + " '" + expr::to_string(e) + "' references x" + std::to_string(k) +
                         " but the system order is " + std::to_string(order));
    }
}

double anchor_coordinate(std::pair<double, double> iv) {
    return iv.first <= 0.0 && 0.0 <= iv.second ? 0.0 : 0.5 * (iv.first + iv.second);
}

// The first sample is the box's anchor (the origin, clipped per axis to the interval
// midpoint when 0 lies outside). Zero sets of g_n typically pass through it.
std::vector<double> anchor(const SampleBox& box, double& t) {
    std::vector<double> x(box.state.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = anchor_coordinate(box.state[i]);
    t = anchor_coordinate(box.time);
    return x;
}

std::vector<double> draw(std::mt19937_64& rng, const SampleBox& box, double& t) {
    std::vector<double> x(box.state.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::uniform_real_distribution<double>(box.state[i].first, box.state[i].second)(rng);
    }
    t = box.time.first == box.time.second
            ? box.time.first
            : std::uniform_real_distribution<double>(box.time.first, box.time.second)(rng);
    return x;
}

void check_box(const SystemSpec& spec, const SampleBox& box, std::size_t samples) {
    if (samples < 1) throw ModelError("sample count must be >= 1");
    if (box.state.size() != static_cast<std::size_t>(spec.order)) {
        throw ModelError("sample box has " + std::to_string(box.state.size()) + " intervals, expected " +
                         std::to_string(spec.order));
    }
    auto ok = [](std::pair<double, double> iv) {
        return std::isfinite(iv.first) && std::isfinite(iv.second) && iv.first <= iv.second;
    };
    for (const auto& iv : box.state) {
        if (!ok(iv)) throw ModelError("sample box bounds must be finite with lo <= hi");
    }
    if (!ok(box.time)) throw ModelError("sample time interval must be finite with lo <= hi");
}

}  // namespace

SystemSpec make_system(int order, const std::vector<std::string>& fstar, const std::string& drift,
                       const std::string& gain) {
    if (order < 1) throw ModelError("system order must be >= 1");
    SystemSpec spec;
    spec.order = order;
    for (const auto& s : fstar) spec.fstar.push_back(expr::parse(s, order));
    spec.drift = expr::parse(drift, order);
    spec.gain = expr::parse(gain, order);
    validate(spec);
    return spec;
}

void validate(const SystemSpec& spec) {
    if (spec.order < 1) throw ModelError("system order must be >= 1");
    if (spec.fstar.size() != static_cast<std::size_t>(spec.order - 1)) {
        throw ModelError("expected " + std::to_string(spec.order - 1) + " fstar entries, got " +
                         std::to_string(spec.fstar.size()));
    }
    for (std::size_t i = 0; i < spec.fstar.size(); ++i) {
        check_vars(spec.fstar[i], spec.order, "fstar[" + std::to_string(i) + "]");
    }
    check_vars(spec.drift, spec.order, "fn");
    check_vars(spec.gain, spec.order, "gn");
}

bool is_time_varying(const SystemSpec& spec) {
    auto tv = [](const Expr& e) { return expr::depends_on(e, 0); };
    for (const auto& f : spec.fstar) {
        if (tv(f)) return true;
    }
    return tv(spec.drift) || tv(spec.gain);
}

ReferenceSpec ReferenceSpec::from(Expr yr) {
    if (expr::max_state_index(yr) != 0) {
        throw ModelError("reference '" + expr::to_string(yr) + "' must depend on t only");
    }
    ReferenceSpec ref;
    ref.yr_dot = expr::differentiate(yr, "t");
    ref.yr_ddot = expr::differentiate(ref.yr_dot, "t");
    ref.yr = std::move(yr);
    return ref;
}

ReferenceSpec ReferenceSpec::parse(const std::string& source) {
    // Parse with a generous order so x<k> is reported as a reference error, not a range error.
    return from(expr::parse(source, std::numeric_limits<int>::max()));
}

std::vector<Expr> to_strict_form(const SystemSpec& spec) {
    std::vector<Expr> out;
    out.reserve(spec.fstar.size());
    for (std::size_t i = 0; i < spec.fstar.size(); ++i) {
        out.push_back(Expr::binary(expr::BinaryOp::Sub, spec.fstar[i], Expr::state(static_cast<int>(i) + 2)));
    }
    return out;
}

SampleBox SampleBox::uniform(int order, double lo, double hi) {
    SampleBox box;
    box.state.assign(static_cast<std::size_t>(order), {lo, hi});
    return box;
}

bool MonotoneReport::ok() const {
    for (const auto& e : entries) {
        if (!e.violations.empty()) return false;
    }
    return true;
}

GainReport check_gain_nonzero(const SystemSpec& spec, const SampleBox& box, std::size_t samples,
                              std::uint64_t seed) {
    check_box(spec, box, samples);
    std::mt19937_64 rng(seed);
    GainReport report;
    report.samples = samples;
    report.min_abs_gain = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        double t = 0.0;
        std::vector<double> x = s == 0 ? anchor(box, t) : draw(rng, box, t);
        double g = 0.0;
        try {
            g = std::fabs(expr::eval(spec.gain, {t, x}));
        } catch (const expr::DomainError&) {
            ++report.domain_failures;
            continue;
        }
        report.min_abs_gain = std::min(report.min_abs_gain, g);
        if (g < kGainViolation) report.violations.push_back({t, std::move(x), g});
    }
    return report;
}

MonotoneReport check_monotone_assumption(const SystemSpec& spec, const SampleBox& box, std::size_t samples,
                                         std::uint64_t seed) {
    check_box(spec, box, samples);
    MonotoneReport report;
    report.samples = samples;
    for (std::size_t i = 0; i < spec.fstar.size(); ++i) {
        MonotoneEntry entry;
        entry.index = static_cast<int>(i) + 1;
        entry.min_derivative = std::numeric_limits<double>::infinity();
        report.entries.push_back(std::move(entry));
    }
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        double t = 0.0;
        const std::vector<double> x = s == 0 ? anchor(box, t) : draw(rng, box, t);
        for (std::size_t i = 0; i < spec.fstar.size(); ++i) {
            auto& entry = report.entries[i];
            std::vector<double> xp = x;
            std::vector<double> xm = x;
            xp[i + 1] += kMonotoneStep;
            xm[i + 1] -= kMonotoneStep;
            double d = 0.0;
            try {
                d = (expr::eval(spec.fstar[i], {t, xp}) - expr::eval(spec.fstar[i], {t, xm})) /
                    (2.0 * kMonotoneStep);
            } catch (const expr::DomainError&) {
                ++entry.domain_failures;
                continue;
            }
            entry.min_derivative = std::min(entry.min_derivative, d);
            if (d < kMonotoneViolation) entry.violations.push_back({t, x, d});
        }
    }
    return report;
}

}  // namespace vdsc
