#include "vdsc/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "vdsc/io.hpp"
#include "vdsc/scenarios.hpp"

namespace vdsc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Source {
    std::string builtin;
    std::string config;
};

struct Overrides {
    std::optional<double> h;
    std::optional<double> t_end;
    std::optional<double> threshold;
};

Scenario load(const Source& src) {
    if (src.builtin.empty() == src.config.empty()) {
        throw ConfigError("source", "exactly one of --builtin or --config is required");
    }
    if (!src.builtin.empty()) return builtin(src.builtin);
    return io::load_scenario(src.config);
}

json apply(Scenario& scn, const Overrides& ov) {
    json echoed = json::object();
    if (ov.h) {
        scn.sim.h = *ov.h;
        echoed["h"] = *ov.h;
    }
    if (ov.t_end) {
        scn.sim.t_end = *ov.t_end;
        echoed["t_end"] = *ov.t_end;
    }
    if (ov.threshold) {
        scn.controller.vpsef.threshold = *ov.threshold;
        if (scn.baseline) scn.baseline->vpsef.threshold = *ov.threshold;
        echoed["threshold"] = *ov.threshold;
    }
    validate(scn);
    return echoed;
}

json provenance(const Scenario& scn, const Source& src, const json& overrides) {
    const auto& v = scn.controller.vpsef;
    return {{"source", src.builtin.empty() ? src.config : "builtin:" + src.builtin},
            {"overrides", overrides},
            {"h", scn.sim.h},
            {"t_end", scn.sim.t_end},
            {"vpsef",
             {{"threshold", v.threshold}, {"p_hi", v.p_hi}, {"q_hi", v.q_hi}, {"p_lo", v.p_lo}, {"q_lo", v.q_lo},
              {"hysteresis", v.hysteresis}}}};
}

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw io::IoError("cannot create output directory '" + dir + "'");
    return p;
}

std::uint64_t sampler_seed() {
    const char* env = std::getenv("VPSEF_DSC_SEED");
    if (env == nullptr || *env == '\0') return kDefaultSeed;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0') {
        throw ConfigError("VPSEF_DSC_SEED", "not an unsigned integer: '" + std::string(env) + "'");
    }
    return v;
}

int cmd_run(const Source& src, const Overrides& ov, const std::string& out_dir, std::ostream& out) {
    Scenario scn = load(src);
    const json echoed = apply(scn, ov);
    const fs::path dir = prepare_dir(out_dir);

    const Trajectory traj = simulate(scn.system, scn.reference, scn.controller, scn.sim);
    const Metrics m = compute_metrics(traj, scn.metrics.band, scn.metrics.window);

    io::write_csv(dir / "trajectory.csv", traj);
    json report = io::metrics_to_json(m);
    report["scenario"] = scn.name;
    report["band"] = scn.metrics.band;
    report["window"] = scn.metrics.window;
    report["provenance"] = provenance(scn, src, echoed);
    io::write_json(dir / "metrics.json", report);

    out << scn.name << ": " << traj.records.size() << " records, settled=" << (m.settled ? "true" : "false")
        << " settling_time=" << m.settling_time << " ss_error=" << m.ss_error << " ise=" << m.ise << '\n';
    return kOk;
}

int cmd_compare(const Source& src, const Overrides& ov, const std::string& out_dir, std::ostream& out) {
    Scenario scn = load(src);
    const json echoed = apply(scn, ov);
    if (!scn.baseline) throw NoBaselineError();
    const fs::path dir = prepare_dir(out_dir);

    const Comparison cmp = compare(scn);
    io::write_csv(dir / "trajectory_vpsef.csv", cmp.vpsef);
    io::write_csv(dir / "trajectory_baseline.csv", cmp.baseline);
    io::write_error_difference_csv(dir / "error_difference.csv", cmp);
    json report = io::comparison_to_json(scn, cmp);
    report["provenance"] = provenance(scn, src, echoed);
    io::write_json(dir / "comparison.json", report);

    out << scn.name << ": ise vpsef=" << cmp.vpsef_metrics.ise << " baseline=" << cmp.baseline_metrics.ise
        << " delta=" << cmp.deltas.ise << '\n';
    return kOk;
}

std::string point_string(const SamplePoint& p) {
    std::string s = "t=" + io::format_double(p.t) + " x=(";
    for (std::size_t i = 0; i < p.x.size(); ++i) s += (i ? ", " : "") + io::format_double(p.x[i]);
    return s + ")";
}

int cmd_validate(const Source& src, std::size_t samples, double radius, std::ostream& out) {
    const Scenario scn = load(src);
    const int n = scn.system.order;
    out << "structure: ok (" << scn.name << ", order " << n << ")\n";
    if (n == 1) out << "note: order 1 is the degenerate single-stage loop\n";
    if (is_time_varying(scn.system)) out << "note: plant is time-varying (t appears in the dynamics)\n";

    SampleBox box = SampleBox::uniform(n, -radius, radius);
    box.time = {0.0, scn.sim.t_end};
    const std::uint64_t seed = sampler_seed();
    out << "sampling " << samples << " points over [" << -radius << ", " << radius << "]^" << n << ", seed "
        << seed << '\n';

    int warnings = 0;
    const GainReport gain = check_gain_nonzero(scn.system, box, samples, seed);
    out << "gain: min |gn| = " << gain.min_abs_gain << '\n';
    if (!gain.violations.empty()) {
        ++warnings;
        out << "warning: control gain gn nearly vanishes (|gn| < " << kGainViolation << ") at "
            << gain.violations.size() << " sample(s), e.g. " << point_string(gain.violations.front()) << '\n';
    }
    if (gain.domain_failures > 0) {
        ++warnings;
        out << "warning: gn undefined at " << gain.domain_failures << " sample(s)\n";
    }

    const MonotoneReport mono = check_monotone_assumption(scn.system, box, samples, seed);
    for (const auto& e : mono.entries) {
        const std::string name = "d fstar[" + std::to_string(e.index - 1) + "]/d x" + std::to_string(e.index + 1);
        out << "monotonicity: min " << name << " = " << e.min_derivative << '\n';
        if (!e.violations.empty()) {
            ++warnings;
            out << "warning: monotonicity assumption " << name << " >= 0 violated at " << e.violations.size()
                << " sample(s), e.g. " << point_string(e.violations.front())
                << " value=" << e.violations.front().value << '\n';
        }
        if (e.domain_failures > 0) {
            ++warnings;
            out << "warning: fstar[" << e.index - 1 << "] undefined at " << e.domain_failures << " sample(s)\n";
        }
    }
    out << warnings << " warning(s)\n";
    return kOk;
}

int cmd_dump(const std::string& name, const std::string& path, std::ostream& out) {
    const Scenario scn = builtin(name);
    const json doc = io::scenario_to_json(scn);
    if (path.empty()) {
        out << doc.dump(2) << '\n';
    } else {
        io::write_json(path, doc);
    }
    return kOk;
}

void add_source(CLI::App* cmd, Source& src) {
    auto* b = cmd->add_option("--builtin", src.builtin, "Built-in scenario: paper_sin or paper_exp");
    auto* c = cmd->add_option("--config", src.config, "Scenario config file (JSON)");
    b->excludes(c);
    c->excludes(b);
}

void add_overrides(CLI::App* cmd, Overrides& ov) {
    cmd->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    cmd->add_option("--h", ov.h, "Override integration step (s)");
    cmd->add_option("--t-end", ov.t_end, "Override horizon (s)");
    cmd->add_option("--threshold", ov.threshold, "Override the surface switching threshold");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Switched variable-power backstepping DSC: simulate, validate and compare scenarios", "vpsef_dsc"};
    app.require_subcommand(1);

    Source src;
    Overrides ov;
    std::string out_dir;
    std::size_t samples = 10000;
    double radius = 2.0;
    std::string dump_name;
    std::string dump_path;

    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario; writes trajectory.csv and metrics.json");
    add_source(run_cmd, src);
    add_overrides(run_cmd, ov);
    run_cmd->add_option("--out", out_dir, "Output directory")->required();

    auto* cmp_cmd = app.add_subcommand("compare", "Run the controller against its baseline");
    add_source(cmp_cmd, src);
    add_overrides(cmp_cmd, ov);
    cmp_cmd->add_option("--out", out_dir, "Output directory")->required();

    auto* val_cmd = app.add_subcommand("validate", "Check a scenario and sample the plant assumptions");
    add_source(val_cmd, src);
    val_cmd->add_option("--samples", samples, "Number of sample points")->check(CLI::PositiveNumber);
    val_cmd->add_option("--box-radius", radius, "Sample states from [-r, r]")->check(CLI::PositiveNumber);

    auto* dump_cmd = app.add_subcommand("dump", "Print a built-in scenario as a config file");
    dump_cmd->add_option("--builtin", dump_name, "Built-in scenario")->required();
    dump_cmd->add_option("--out", dump_path, "Write to this file instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(src, ov, out_dir, out);
        if (*cmp_cmd) return cmd_compare(src, ov, out_dir, out);
        if (*val_cmd) return cmd_validate(src, samples, radius, out);
        if (*dump_cmd) return cmd_dump(dump_name, dump_path, out);
    } catch (const io::IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const ComparisonError& e) {
        err << "error: " << e.what() << '\n';
        return kSimulationError;
    } catch (const SimulationError& e) {
        err << "error: " << e.what() << '\n';
        return kSimulationError;
    } catch (const ControlError& e) {
        err << "error: " << e.what() << '\n';
        return kSimulationError;
    } catch (const std::invalid_argument& e) {  // ConfigError, NoBaselineError, UnknownScenarioError
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const expr::ExprError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kConfigError;
}

}  // namespace vdsc::cli
