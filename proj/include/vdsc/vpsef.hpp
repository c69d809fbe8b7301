#pragma once

#include <stdexcept>
#include <string>

namespace vdsc {

/// Variable power surface error: sign(e)|e|^(p/q), with p/q chosen by the
/// error magnitude relative to a threshold.
struct VpsefConfig {
    double threshold = 0.1;
    int p_hi = 5;  // large-error branch, p_hi/q_hi >= 1
    int q_hi = 3;
    int p_lo = 1;  // small-error branch, p_lo/q_lo <= 1
    int q_lo = 2;
    double hysteresis = 0.0;  // full band width around the threshold

    /// p = q in both branches: the surface is the plain error.
    [[nodiscard]] static VpsefConfig identity(double threshold = 0.1);
    [[nodiscard]] bool is_identity() const noexcept { return p_hi == q_hi && p_lo == q_lo; }
};

class VpsefConfigError : public std::invalid_argument {
   public:
    VpsefConfigError(const std::string& key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(key) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

   private:
    std::string key_;
};

/// Throws VpsefConfigError naming the offending key (threshold, p_hi, ...).
void validate(const VpsefConfig& cfg);

enum class Regime { Large, Small };
/// Identity is reported whenever the active regime has p = q.
enum class Branch { Large, Small, Identity };

[[nodiscard]] const char* to_string(Branch b) noexcept;

struct SurfaceValue {
    double raw = 0.0;
    double shaped = 0.0;
    Regime regime = Regime::Small;
    Branch branch = Branch::Small;
};

/// Regime by strict comparison |e| > threshold.
[[nodiscard]] SurfaceValue surface_error(double e, const VpsefConfig& cfg) noexcept;

/// As above, but a nonzero hysteresis band keeps `previous` while |e| stays within
/// threshold +/- hysteresis/2.
[[nodiscard]] SurfaceValue surface_error(double e, const VpsefConfig& cfg, Regime previous) noexcept;

}  // namespace vdsc
