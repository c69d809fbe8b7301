#include "vdsc/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace vdsc::io {

using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

void expect_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object, got " + type_name(j));
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(path.empty() ? key : path + "." + key, "unknown key");
    }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(join(path, key), "missing required key");
    return j.at(key);
}

double as_number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key, "expected a number, got " + type_name(j));
    return j.get<double>();
}

int as_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError(key, "expected an integer, got " + type_name(j));
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& key) {
    if (!j.is_string()) throw ConfigError(key, "expected a string, got " + type_name(j));
    return j.get<std::string>();
}

std::vector<double> as_numbers(const json& j, const std::string& key) {
    if (!j.is_array()) throw ConfigError(key, "expected an array, got " + type_name(j));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

expr::Expr as_expr(const json& j, const std::string& key, int order) {
    const std::string src = as_string(j, key);
    try {
        return expr::parse(src, order);
    } catch (const expr::ExprError& e) {
        throw ConfigError(key, "in expression '" + src + "': " + e.what());
    }
}

SystemSpec read_system(const json& j) {
    expect_keys(j, "system", {"n", "fstar", "fn", "gn"});
    const int n = as_int(require(j, "system", "n"), "system.n");
    if (n < 1) throw ConfigError("system.n", "order must be >= 1");
    SystemSpec spec;
    spec.order = n;
    const json& fstar = require(j, "system", "fstar");
    if (!fstar.is_array()) throw ConfigError("system.fstar", "expected an array of expression strings");
    if (fstar.size() != static_cast<std::size_t>(n - 1)) {
        throw ConfigError("system.fstar",
                          "expected " + std::to_string(n - 1) + " entries, got " + std::to_string(fstar.size()));
    }
    for (std::size_t i = 0; i < fstar.size(); ++i) {
        spec.fstar.push_back(as_expr(fstar[i], "system.fstar[" + std::to_string(i) + "]", n));
    }
    spec.drift = as_expr(require(j, "system", "fn"), "system.fn", n);
    spec.gain = as_expr(require(j, "system", "gn"), "system.gn", n);
    return spec;
}

ReferenceSpec read_reference(const json& j) {
    expect_keys(j, "reference", {"yr"});
    const std::string src = as_string(require(j, "reference", "yr"), "reference.yr");
    try {
        return ReferenceSpec::parse(src);
    } catch (const std::exception& e) {
        throw ConfigError("reference.yr", "in expression '" + src + "': " + e.what());
    }
}

VpsefConfig read_vpsef(const json& j, const std::string& path) {
    expect_keys(j, path, {"threshold", "p_hi", "q_hi", "p_lo", "q_lo", "hysteresis"});
    VpsefConfig cfg;
    if (j.contains("threshold")) cfg.threshold = as_number(j["threshold"], path + ".threshold");
    if (j.contains("p_hi")) cfg.p_hi = as_int(j["p_hi"], path + ".p_hi");
    if (j.contains("q_hi")) cfg.q_hi = as_int(j["q_hi"], path + ".q_hi");
    if (j.contains("p_lo")) cfg.p_lo = as_int(j["p_lo"], path + ".p_lo");
    if (j.contains("q_lo")) cfg.q_lo = as_int(j["q_lo"], path + ".q_lo");
    if (j.contains("hysteresis")) cfg.hysteresis = as_number(j["hysteresis"], path + ".hysteresis");
    return cfg;
}

FilterSchedule read_schedule(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected a filter schedule object");
    const std::string type = as_string(require(j, path, "type"), path + ".type");
    if (type == "constant") {
        expect_keys(j, path, {"type", "value"});
        return FilterSchedule::constant(as_number(require(j, path, "value"), path + ".value"));
    }
    if (type == "exp_decay") {
        expect_keys(j, path, {"type", "floor", "scale"});
        return FilterSchedule::exp_decay(as_number(require(j, path, "floor"), path + ".floor"),
                                         as_number(require(j, path, "scale"), path + ".scale"));
    }
    throw ConfigError(path + ".type", "unknown schedule type '" + type + "' (expected constant or exp_decay)");
}

ControllerConfig read_controller(const json& j, const std::string& path) {
    expect_keys(j, path, {"gains", "sigma", "vpsef", "gain_guard"});
    ControllerConfig cfg;
    cfg.gains = as_numbers(require(j, path, "gains"), path + ".gains");
    const json& sigma = require(j, path, "sigma");
    if (!sigma.is_array()) throw ConfigError(path + ".sigma", "expected an array of filter schedules");
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        cfg.sigma.push_back(read_schedule(sigma[i], path + ".sigma[" + std::to_string(i) + "]"));
    }
    if (j.contains("vpsef")) cfg.vpsef = read_vpsef(j["vpsef"], path + ".vpsef");
    if (j.contains("gain_guard")) cfg.gain_guard = as_number(j["gain_guard"], path + ".gain_guard");
    return cfg;
}

SimConfig read_sim(const json& j, int order) {
    expect_keys(j, "sim", {"h", "t_end", "x0", "a0"});
    SimConfig sim;
    if (j.contains("h")) sim.h = as_number(j["h"], "sim.h");
    if (j.contains("t_end")) sim.t_end = as_number(j["t_end"], "sim.t_end");
    sim.x0 = as_numbers(require(j, "sim", "x0"), "sim.x0");
    if (j.contains("a0")) {
        sim.a0 = as_numbers(j["a0"], "sim.a0");
    } else {
        sim.a0.assign(static_cast<std::size_t>(std::max(order - 1, 0)), 0.0);
    }
    return sim;
}

json vpsef_to_json(const VpsefConfig& v) {
    return {{"threshold", v.threshold}, {"p_hi", v.p_hi}, {"q_hi", v.q_hi},
            {"p_lo", v.p_lo},           {"q_lo", v.q_lo}, {"hysteresis", v.hysteresis}};
}

json controller_to_json(const ControllerConfig& c) {
    json sigma = json::array();
    for (const auto& s : c.sigma) {
        if (s.kind == FilterSchedule::Kind::Constant) {
            sigma.push_back({{"type", "constant"}, {"value", s.value}});
        } else {
            sigma.push_back({{"type", "exp_decay"}, {"floor", s.floor}, {"scale", s.scale}});
        }
    }
    return {{"gains", c.gains}, {"sigma", sigma}, {"vpsef", vpsef_to_json(c.vpsef)}, {"gain_guard", c.gain_guard}};
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::string& default_name) {
    expect_keys(doc, "", {"name", "system", "reference", "controller", "sim", "baseline", "metrics"});
    Scenario scn;
    scn.name = doc.contains("name") ? as_string(doc["name"], "name") : default_name;
    scn.system = read_system(require(doc, "", "system"));
    scn.reference = read_reference(require(doc, "", "reference"));
    scn.controller = read_controller(require(doc, "", "controller"), "controller");
    scn.sim = read_sim(require(doc, "", "sim"), scn.system.order);
    if (doc.contains("baseline")) scn.baseline = read_controller(doc["baseline"], "baseline");
    if (doc.contains("metrics")) {
        const json& m = doc["metrics"];
        expect_keys(m, "metrics", {"band", "window"});
        if (m.contains("band")) scn.metrics.band = as_number(m["band"], "metrics.band");
        if (m.contains("window")) scn.metrics.window = as_number(m["window"], "metrics.window");
    }
    try {
        validate(scn);
    } catch (const ModelError& e) {
        throw ConfigError("system", e.what());
    }
    return scn;
}

json scenario_to_json(const Scenario& scn) {
    json fstar = json::array();
    for (const auto& f : scn.system.fstar) fstar.push_back(expr::to_string(f));
    json doc = {
        {"name", scn.name},
        {"system",
         {{"n", scn.system.order},
          {"fstar", fstar},
          {"fn", expr::to_string(scn.system.drift)},
          {"gn", expr::to_string(scn.system.gain)}}},
        {"reference", {{"yr", expr::to_string(scn.reference.yr)}}},
        {"controller", controller_to_json(scn.controller)},
        {"sim", {{"h", scn.sim.h}, {"t_end", scn.sim.t_end}, {"x0", scn.sim.x0}, {"a0", scn.sim.a0}}},
        {"metrics", {{"band", scn.metrics.band}, {"window", scn.metrics.window}}},
    };
    if (scn.baseline) doc["baseline"] = controller_to_json(*scn.baseline);
    return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte is 1-based and points just past the offending character
        const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path.string(), "JSON syntax error at line " + std::to_string(line) + ", column " +
                                             std::to_string(col) + ": " + e.what());
    }
    return scenario_from_json(doc, path.stem().string());
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

std::string csv_header(int order) {
    std::string h = "t";
    for (int i = 1; i <= order; ++i) h += ",x" + std::to_string(i);
    for (int i = 2; i <= order; ++i) h += ",a" + std::to_string(i);
    for (int i = 1; i <= order; ++i) h += ",psi" + std::to_string(i);
    for (int i = 2; i <= order; ++i) h += ",beta" + std::to_string(i);
    h += ",u,yr,e";
    for (int i = 1; i <= order; ++i) h += ",branch" + std::to_string(i);
    return h;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
    os << csv_header(traj.order) << '\n';
    std::string line;
    for (const auto& r : traj.records) {
        line = format_double(r.t);
        auto put = [&line](double v) {
            line += ',';
            line += format_double(v);
        };
        for (double v : r.x) put(v);
        for (double v : r.a) put(v);
        for (const auto& p : r.psi) put(p.shaped);
        for (double v : r.beta) put(v);
        put(r.u);
        put(r.yr);
        put(r.e);
        for (const auto& p : r.psi) {
            line += ',';
            line += to_string(p.branch);
        }
        os << line << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_csv(out, traj);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

json metrics_to_json(const Metrics& m) {
    return {{"settling_time", m.settling_time}, {"settled", m.settled},
            {"ss_error", m.ss_error},           {"ise", m.ise},
            {"peak_overshoot", m.peak_overshoot}, {"peak_error", m.peak_error},
            {"control_effort", m.control_effort}};
}

json comparison_to_json(const Scenario& scn, const Comparison& cmp) {
    double max_diff = 0.0;
    double mean_diff = 0.0;
    for (double d : cmp.abs_error_diff) {
        max_diff = std::max(max_diff, std::fabs(d));
        mean_diff += d;
    }
    if (!cmp.abs_error_diff.empty()) mean_diff /= static_cast<double>(cmp.abs_error_diff.size());
    return {
        {"scenario", scn.name},
        {"band", scn.metrics.band},
        {"window", scn.metrics.window},
        {"vpsef", metrics_to_json(cmp.vpsef_metrics)},
        {"baseline", metrics_to_json(cmp.baseline_metrics)},
        {"deltas",
         {{"ise", cmp.deltas.ise},
          {"peak_error", cmp.deltas.peak_error},
          {"settling_time", cmp.deltas.settling_time},
          {"control_effort", cmp.deltas.control_effort},
          {"ss_error", cmp.deltas.ss_error}}},
        {"ise_vpsef", cmp.vpsef_metrics.ise},
        {"ise_baseline", cmp.baseline_metrics.ise},
        {"error_difference", {{"max_abs", max_diff}, {"mean", mean_diff}}},
    };
}

void write_error_difference_csv(const std::filesystem::path& path, const Comparison& cmp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "t,abs_e_vpsef,abs_e_baseline,diff\n";
    for (std::size_t i = 0; i < cmp.t.size(); ++i) {
        out << format_double(cmp.t[i]) << ',' << format_double(std::fabs(cmp.vpsef.records[i].e)) << ','
            << format_double(std::fabs(cmp.baseline.records[i].e)) << ',' << format_double(cmp.abs_error_diff[i])
            << '\n';
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace vdsc::io
