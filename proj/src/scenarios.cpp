#include "vdsc/scenarios.hpp"

#include <future>

namespace vdsc {

void validate(const Scenario& scn) {
    validate(scn.system);
    validate(scn.controller, scn.system.order, "controller");
    if (scn.baseline) validate(*scn.baseline, scn.system.order, "baseline");
    validate(scn.sim, scn.system.order);
    if (!(scn.metrics.band > 0.0)) throw ConfigError("metrics.band", "must be positive");
    if (!(scn.metrics.window > 0.0 && scn.metrics.window <= 1.0)) {
        throw ConfigError("metrics.window", "must be in (0, 1]");
    }
}

Scenario builtin(Builtin which) {
    Scenario scn;
    scn.system = make_system(3, {"x1^2 + x2^3 + x3", "x1^2*x2 + x3^5"}, "x1*x2*x3^2", "1");

    switch (which) {
        case Builtin::PaperSin:
            scn.name = "paper_sin";
            scn.reference = ReferenceSpec::parse("sin(t)");
            break;
        case Builtin::PaperExp:
            scn.name = "paper_exp";
            scn.reference = ReferenceSpec::parse("1 - exp(-t)");
            break;
    }

    scn.controller.gains = {3.0, 3.0, 3.0};
    scn.controller.vpsef = VpsefConfig{};
    scn.controller.vpsef.threshold = 0.1;
    scn.controller.sigma = {FilterSchedule::exp_decay(0.05, 1.0), FilterSchedule::exp_decay(0.05, 1.0)};

    scn.sim.h = 1e-3;
    scn.sim.t_end = 10.0;
    scn.sim.x0 = {0.0, -1.0, 1.0};
    scn.sim.a0 = {0.0, 0.0};

    scn.baseline = scn.controller.baseline();
    validate(scn);
    return scn;
}

Scenario builtin(std::string_view name) {
    if (name == "paper_sin") return builtin(Builtin::PaperSin);
    if (name == "paper_exp") return builtin(Builtin::PaperExp);
    throw UnknownScenarioError("unknown builtin scenario '" + std::string(name) + "' (known: paper_sin, paper_exp)");
}

std::vector<std::string> builtin_names() { return {"paper_sin", "paper_exp"}; }

MetricDeltas metric_deltas(const Metrics& main, const Metrics& baseline) {
    MetricDeltas d;
    d.ise = main.ise - baseline.ise;
    d.peak_error = main.peak_error - baseline.peak_error;
    d.settling_time = main.settling_time - baseline.settling_time;
    d.control_effort = main.control_effort - baseline.control_effort;
    d.ss_error = main.ss_error - baseline.ss_error;
    return d;
}

Comparison compare(const Scenario& scn) {
    if (!scn.baseline) throw NoBaselineError();

    auto run = [&scn](const ControllerConfig& cfg) { return simulate(scn.system, scn.reference, cfg, scn.sim); };
    auto baseline_run = std::async(std::launch::async, run, std::cref(*scn.baseline));

    Comparison out;
    std::exception_ptr vpsef_failure;
    try {
        out.vpsef = run(scn.controller);
    } catch (...) {
        vpsef_failure = std::current_exception();
    }
    try {
        out.baseline = baseline_run.get();
    } catch (const std::exception& e) {
        if (!vpsef_failure) throw ComparisonError("baseline", e.what());
    }
    if (vpsef_failure) {
        try {
            std::rethrow_exception(vpsef_failure);
        } catch (const std::exception& e) {
            throw ComparisonError("vpsef", e.what());
        }
    }

    out.vpsef_metrics = compute_metrics(out.vpsef, scn.metrics.band, scn.metrics.window);
    out.baseline_metrics = compute_metrics(out.baseline, scn.metrics.band, scn.metrics.window);
    out.deltas = metric_deltas(out.vpsef_metrics, out.baseline_metrics);

    const std::size_t count = out.vpsef.records.size();
    out.t.reserve(count);
    out.abs_error_diff.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.t.push_back(out.vpsef.records[i].t);
        out.abs_error_diff.push_back(std::fabs(out.vpsef.records[i].e) - std::fabs(out.baseline.records[i].e));
    }
    return out;
}

}  // namespace vdsc
