#pragma once

#include <compare>

namespace qfc {

/// Optical power. Stored in watts; construct with the named factories.
class Power {
public:
    constexpr Power() = default;
    static constexpr Power watts(double w) { return Power(w); }
    static constexpr Power milliwatts(double mw) { return Power(mw * 1e-3); }

    constexpr double in_watts() const { return w_; }
    constexpr double in_milliwatts() const { return w_ * 1e3; }

    constexpr auto operator<=>(const Power&) const = default;
    constexpr Power operator*(double k) const { return Power(w_ * k); }

private:
    constexpr explicit Power(double w) : w_(w) {}
    double w_ = 0.0;
};

inline constexpr double ps_per_s = 1e12;

}  // namespace qfc
