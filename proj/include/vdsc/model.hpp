#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vdsc/expr.hpp"

namespace vdsc {

class ModelError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Plant in non-lower-triangular form:
///   x_i' = f_i*(x)          i = 1..n-1
///   x_n' = g_n(x) u + f_n(x)
///   y    = x_1
struct SystemSpec {
    int order = 0;
    std::vector<expr::Expr> fstar;  // n-1 entries
    expr::Expr drift;               // f_n
    expr::Expr gain;                // g_n
};

/// Parses the plant expressions and validates the result.
[[nodiscard]] SystemSpec make_system(int order, const std::vector<std::string>& fstar, const std::string& drift,
                                     const std::string& gain);

/// Throws ModelError on structural problems (wrong arity, variables outside t, x1..xn).
void validate(const SystemSpec& spec);

[[nodiscard]] bool is_time_varying(const SystemSpec& spec);

/// Reference y_r(t) with analytic first and second derivatives.
struct ReferenceSpec {
    expr::Expr yr;
    expr::Expr yr_dot;
    expr::Expr yr_ddot;

    [[nodiscard]] static ReferenceSpec from(expr::Expr yr);
    [[nodiscard]] static ReferenceSpec parse(const std::string& source);
};

/// f_i = f_i* - x_{i+1}, i = 1..n-1.
[[nodiscard]] std::vector<expr::Expr> to_strict_form(const SystemSpec& spec);

/// Per-state sampling interval; t is sampled from `time`.
struct SampleBox {
    std::vector<std::pair<double, double>> state;
    std::pair<double, double> time{0.0, 0.0};

    [[nodiscard]] static SampleBox uniform(int order, double lo, double hi);
};

struct SamplePoint {
    double t = 0.0;
    std::vector<double> x;
    double value = 0.0;
};

struct GainReport {
    std::size_t samples = 0;
    double min_abs_gain = 0.0;
    std::vector<SamplePoint> violations;  // |g_n| < 1e-8
    std::size_t domain_failures = 0;
};

struct MonotoneEntry {
    int index = 0;  // i in df_i*/dx_{i+1}
    double min_derivative = 0.0;
    std::vector<SamplePoint> violations;  // estimate < -1e-6
    std::size_t domain_failures = 0;
};

struct MonotoneReport {
    std::size_t samples = 0;
    std::vector<MonotoneEntry> entries;

    [[nodiscard]] bool ok() const;
};

inline constexpr double kGainViolation = 1e-8;
inline constexpr double kMonotoneViolation = -1e-6;
inline constexpr double kMonotoneStep = 1e-5;

/// Samples |g_n| at the box anchor (origin, clipped to the box) then uniformly.
/// Advisory: sampling cannot prove non-vanishing.
[[nodiscard]] GainReport check_gain_nonzero(const SystemSpec& spec, const SampleBox& box, std::size_t samples,
                                            std::uint64_t seed);

/// Central-difference estimate of df_i*/dx_{i+1} at uniform samples over `box`.
[[nodiscard]] MonotoneReport check_monotone_assumption(const SystemSpec& spec, const SampleBox& box,
                                                       std::size_t samples, std::uint64_t seed);

}  // namespace vdsc
