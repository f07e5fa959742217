#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta with adaptive step control.
// The state is a fixed-size array of real or complex scalars.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "reslab/errors.hpp"

namespace reslab::ode {

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0; ///< 0 selects a starting step from the interval length
    double h_max = std::numeric_limits<double>::infinity();
    double h_min = 1e-14;
    std::size_t max_steps = 2'000'000;
};

struct Stats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double last_step = 0.0;
    bool stopped_by_observer = false;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& z) { return std::abs(z); }

// Dormand-Prince tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Difference between 5th and embedded 4th order weights.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

} // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1 (t1 may be smaller than t0).
///
/// `observer(t, y)` is called at t0 and after every accepted step; returning
/// false stops the integration early. `rhs` has signature
/// `void(double t, const State& y, State& dydt)`.
template <class T, std::size_t N, class Rhs, class Observer>
Stats integrate(Rhs&& rhs, double t0, double t1, std::array<T, N>& y, const StepControl& ctl,
                Observer&& observer) {
    using State = std::array<T, N>;
    using namespace detail;

    Stats stats;
    if (!observer(t0, y)) {
        stats.stopped_by_observer = true;
        return stats;
    }
    const double span = t1 - t0;
    if (span == 0.0) return stats;
    const double dir = span > 0 ? 1.0 : -1.0;

    double h = ctl.h_init > 0 ? ctl.h_init : std::min(std::abs(span) * 1e-3, 1e-2);
    h = std::min(h, ctl.h_max);

    State k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    double t = t0;
    rhs(t, y, k1);

    while (dir * (t1 - t) > 0) {
        if (stats.accepted + stats.rejected > ctl.max_steps)
            throw EvaluationError("ODE integration exceeded the step budget");
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;

        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * (a21 * k1[i]);
        rhs(t + c2 * hs, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * hs, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * hs, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * hs, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        rhs(t + hs, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                   b6 * k6[i]);
        rhs(t + hs, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const T ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                               e7 * k7[i]);
            const double sc =
                ctl.atol + ctl.rtol * std::max(magnitude(y[i]), magnitude(ynew[i]));
            err = std::max(err, magnitude(ei) / sc);
        }
        if (!std::isfinite(err))
            throw EvaluationError("non-finite value during ODE integration");

        if (err <= 1.0) {
            t = last ? t1 : t + hs;
            y = ynew;
            k1 = k7;
            ++stats.accepted;
            stats.last_step = h;
            if (!observer(t, y)) {
                stats.stopped_by_observer = true;
                return stats;
            }
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::min(h * fac, ctl.h_max);
        } else {
            ++stats.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.25));
            if (h < ctl.h_min) throw EvaluationError("ODE step size underflow");
        }
    }
    return stats;
}

} // namespace reslab::ode
