#include <doctest.h>

#include <cmath>

#include "vdsc/sim.hpp"

using namespace vdsc;

namespace {

double decay_endpoint_error(double h) {
    const Derivative f = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
    std::vector<double> y{1.0};
    const int steps = static_cast<int>(std::lround(1.0 / h));
    for (int k = 0; k < steps; ++k) y = rk4_step(f, y, k * h, h);
    return std::fabs(y[0] - std::exp(-1.0));
}

ControllerConfig plain(int n, double k, double sigma = 0.1) {
    ControllerConfig cfg;
    cfg.gains.assign(static_cast<std::size_t>(n), k);
    cfg.sigma.assign(static_cast<std::size_t>(n - 1), FilterSchedule::constant(sigma));
    cfg.vpsef = VpsefConfig::identity();
    return cfg;
}

SimConfig horizon(double t_end, std::vector<double> x0, std::vector<double> a0, double h = 1e-3) {
    SimConfig s;
    s.h = h;
    s.t_end = t_end;
    s.x0 = std::move(x0);
    s.a0 = std::move(a0);
    return s;
}

// Synthetic trajectory with e(t) = err(t) and u = 0.
template <class F>
Trajectory synthetic(double t_end, double h, F err) {
    Trajectory tr;
    tr.order = 1;
    tr.h = h;
    const auto n = static_cast<std::size_t>(std::lround(t_end / h)) + 1;
    for (std::size_t k = 0; k < n; ++k) {
        Record r;
        r.t = static_cast<double>(k) * h;
        r.e = err(r.t);
        r.x = {r.e};
        tr.records.push_back(r);
    }
    return tr;
}

}  // namespace

TEST_CASE("rk4_step exact and near-exact cases") {
    const Derivative decay = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
    const auto y = rk4_step(decay, std::vector<double>{1.0}, 0.0, 0.1);
    CHECK(std::fabs(y[0] - std::exp(-0.1)) < 1e-7);
    CHECK(y[0] == doctest::Approx(0.9048375).epsilon(1e-12));

    const Derivative still = [](double, std::span<const double>, std::span<double> dy) { dy[0] = 0.0; dy[1] = 0.0; };
    CHECK(rk4_step(still, std::vector<double>{3.5, -2.0}, 1.0, 0.25) == std::vector<double>{3.5, -2.0});

    const Derivative ramp = [](double, std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
    CHECK(rk4_step(ramp, std::vector<double>{0.0}, 0.0, 0.5)[0] == 0.5);

    // y' = t is integrated exactly too: stage times t, t+h/2, t+h/2, t+h.
    const Derivative lin = [](double t, std::span<const double>, std::span<double> dy) { dy[0] = t; };
    CHECK(rk4_step(lin, std::vector<double>{0.0}, 1.0, 0.5)[0] == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("rk4_step rejects non-finite stages") {
    const Derivative blow = [](double t, std::span<const double>, std::span<double> dy) {
        dy[0] = t > 0.0 ? std::nan("") : 1.0;
    };
    try {
        (void)rk4_step(blow, std::vector<double>{0.0}, 0.0, 0.1);
        FAIL("expected an integration error");
    } catch (const IntegrationError& e) {
        CHECK(e.stage() == 2);
    }
    CHECK_THROWS_AS((void)rk4_step(blow, std::vector<double>{0.0}, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("RK4 is fourth order") {
    const double e1 = decay_endpoint_error(1e-2);
    const double e2 = decay_endpoint_error(5e-3);
    const double e3 = decay_endpoint_error(2.5e-3);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e1 / e2 <= 20.0);
    CHECK(e2 / e3 >= 12.0);
    CHECK(e2 / e3 <= 20.0);
}

TEST_CASE("record grid") {
    CHECK(record_count(horizon(10.0, {0}, {}, 1e-3)) == 10001);
    CHECK(record_count(horizon(1.0, {0}, {}, 0.3)) == 4);
    const auto spec = make_system(1, {}, "0", "1");
    const auto tr = simulate(spec, ReferenceSpec::parse("0"), plain(1, 1.0), horizon(0.05, {1.0}, {}, 0.01));
    REQUIRE(tr.records.size() == 6);
    for (std::size_t k = 0; k < tr.records.size(); ++k) CHECK(tr.records[k].t == static_cast<double>(k) * 0.01);
}

TEST_CASE("sim config validation") {
    auto expect_key = [](const SimConfig& s, int order, const std::string& key) {
        try {
            validate(s, order);
            FAIL("expected rejection of " << key);
        } catch (const ConfigError& e) {
            CHECK(e.key() == key);
        }
    };
    expect_key(horizon(1.0, {0, 0}, {0}, 0.0), 2, "sim.h");
    expect_key(horizon(1.0, {0, 0}, {0}, 2.0), 2, "sim.h");
    expect_key(horizon(-1.0, {0, 0}, {0}), 2, "sim.t_end");
    expect_key(horizon(1.0, {0}, {0}), 2, "sim.x0");
    expect_key(horizon(1.0, {0, 0}, {}), 2, "sim.a0");
    expect_key(horizon(1.0, {0, NAN}, {0}), 2, "sim.x0[1]");
}

TEST_CASE("scalar loop reproduces the exponential error solution") {
    const auto spec = make_system(1, {}, "0", "1");
    const auto tr = simulate(spec, ReferenceSpec::parse("0"), plain(1, 3.0), horizon(5.0, {1.0}, {}));
    double worst = 0.0;
    for (const auto& r : tr.records) worst = std::max(worst, std::fabs(r.e - std::exp(-3.0 * r.t)));
    CHECK(worst < 1e-6);
}

TEST_CASE("filter output follows the first-order step response") {
    // f_1 = fstar_1 - x2 = -1 - 3 x1, so beta_2 = -3 x1 - f_1 = 1 for all t.
    const auto spec = make_system(2, {"x2 - 1 - 3*x1"}, "0", "1");
    const auto tr = simulate(spec, ReferenceSpec::parse("0"), plain(2, 3.0, 0.1), horizon(2.0, {0.0, 0.0}, {0.0}));
    double worst = 0.0;
    for (const auto& r : tr.records) {
        CHECK(r.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
        worst = std::max(worst, std::fabs(r.a[0] - (1.0 - std::exp(-10.0 * r.t))));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("zero plant stays at rest") {
    const auto spec = make_system(3, {"0", "0"}, "0", "1");
    const auto tr = simulate(spec, ReferenceSpec::parse("0"), plain(3, 3.0), horizon(1.0, {0, 0, 0}, {0, 0}));
    for (const auto& r : tr.records) {
        for (double v : r.x) CHECK(v == 0.0);
        for (double v : r.a) CHECK(v == 0.0);
        CHECK(r.u == 0.0);
    }
}

TEST_CASE("negative gains diverge with an error") {
    const auto spec = make_system(3, {"x1^2+x2^3+x3", "x1^2*x2+x3^5"}, "x1*x2*x3^2", "1");
    ControllerConfig cfg;
    cfg.gains = {-3.0, -3.0, -3.0};
    cfg.sigma = {FilterSchedule::exp_decay(0.05, 1.0), FilterSchedule::exp_decay(0.05, 1.0)};
    const auto sim = horizon(10.0, {0.0, -1.0, 1.0}, {0.0, 0.0});
    CHECK_THROWS_AS((void)simulate(spec, ReferenceSpec::parse("sin(t)"), cfg, sim), ConfigError);
    SimOptions opts;
    opts.validate_controller = false;
    try {
        (void)simulate(spec, ReferenceSpec::parse("sin(t)"), cfg, sim, opts);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.time() > 0.0);
        CHECK(e.time() < 10.0);
    }
}

TEST_CASE("gain singularity aborts the run") {
    const auto spec = make_system(1, {}, "0", "x1");
    CHECK_THROWS_AS((void)simulate(spec, ReferenceSpec::parse("0"), plain(1, 1.0), horizon(1.0, {0.0}, {})),
                    SimulationError);
}

TEST_CASE("simulation is deterministic") {
    const auto spec = make_system(3, {"x1^2+x2^3+x3", "x1^2*x2+x3^5"}, "x1*x2*x3^2", "1");
    ControllerConfig cfg;
    cfg.gains = {3.0, 3.0, 3.0};
    cfg.sigma = {FilterSchedule::exp_decay(0.05, 1.0), FilterSchedule::exp_decay(0.05, 1.0)};
    const auto sim = horizon(2.0, {0.0, -1.0, 1.0}, {0.0, 0.0});
    const auto a = simulate(spec, ReferenceSpec::parse("sin(t)"), cfg, sim);
    const auto b = simulate(spec, ReferenceSpec::parse("sin(t)"), cfg, sim);
    CHECK(bit_identical(a, b));
    CHECK(all_finite(a));
    auto c = b;
    c.records[100].u = std::nextafter(c.records[100].u, 1e9);
    CHECK_FALSE(bit_identical(a, c));
}

TEST_CASE("metrics of perfect tracking") {
    const auto m = compute_metrics(synthetic(5.0, 1e-3, [](double) { return 0.0; }));
    CHECK(m.settled);
    CHECK(m.settling_time == 0.0);
    CHECK(m.ss_error == 0.0);
    CHECK(m.ise == 0.0);
    CHECK(m.peak_overshoot == 0.0);
    CHECK(m.control_effort == 0.0);
}

TEST_CASE("metrics of an exponential decay") {
    const double h = 1e-3;
    const auto m = compute_metrics(synthetic(10.0, h, [](double t) { return std::exp(-3.0 * t); }));
    CHECK(m.settled);
    CHECK(std::fabs(m.settling_time - std::log(100.0) / 3.0) <= h);
    CHECK(m.ise == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
    CHECK(m.peak_error == 1.0);
    CHECK(m.peak_overshoot <= 0.01);
    CHECK(m.ss_error == doctest::Approx(std::exp(-21.0)).epsilon(1e-3));
}

TEST_CASE("metrics when the band is never reached") {
    const auto m = compute_metrics(synthetic(3.0, 1e-2, [](double t) { return 1.0 + t; }));
    CHECK_FALSE(m.settled);
    CHECK(m.settling_time == doctest::Approx(3.0));
    CHECK(m.peak_overshoot == m.peak_error);
    CHECK(m.ss_error == doctest::Approx(4.0));

    // Leaving the band at the very last sample also counts as not settled.
    const auto late = compute_metrics(synthetic(1.0, 0.1, [](double t) { return t > 0.95 ? 1.0 : 0.0; }));
    CHECK_FALSE(late.settled);

    CHECK_THROWS_AS((void)compute_metrics(Trajectory{}), std::invalid_argument);
    CHECK_THROWS_AS((void)compute_metrics(synthetic(1.0, 0.1, [](double) { return 0.0; }), 0.0), std::invalid_argument);
}

TEST_CASE("peak error over a window") {
    const auto tr = synthetic(4.0, 0.5, [](double t) { return t < 1.0 ? -2.0 : 0.5 / t; });
    CHECK(peak_abs_error(tr, 0.0, 4.0) == 2.0);
    CHECK(peak_abs_error(tr, 1.0, 4.0) == 0.5);
    CHECK(peak_abs_error(tr, 2.0, 4.0) == 0.25);
}
