#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "error.hpp"

namespace vws {

using Vec2c = Eigen::Vector2cd;

struct StepControls {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_initial = 1e-4;
    double h_min = 1e-13;
    std::size_t max_steps = 50'000'000;
};

struct OdeSample {
    double t = 0.0;
    Vec2c y = Vec2c::Zero();
};

namespace detail {

// Dormand–Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // b - b* (error weights)
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

} // namespace detail

/// Adaptive explicit Runge–Kutta (Dormand–Prince 5(4), FSAL) for y' = f(t, y).
///
/// `step_cap(t)` bounds |h| from above at every step; output times in `stops`
/// are hit exactly (steps are clipped), and `on_accept(t, y)` is called after
/// every accepted step including the stops. Integration runs from t0 to t1 in
/// either direction.
template <class Rhs, class Cap, class OnAccept>
Vec2c integrate_dopri5(Rhs&& f, Vec2c y, double t0, double t1, const StepControls& ctl, Cap&& step_cap,
                       const std::vector<double>& stops, OnAccept&& on_accept,
                       const std::function<void(double)>& on_underflow = {})
{
    using T = detail::Dopri5;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    std::vector<double> targets;
    for (double s : stops)
        if ((s - t0) * dir > 0.0 && (t1 - s) * dir >= 0.0)
            targets.push_back(s);
    targets.push_back(t1);
    std::sort(targets.begin(), targets.end(), [dir](double a, double b) { return a * dir < b * dir; });
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    double t = t0;
    double h = std::min(ctl.h_initial, step_cap(t0));
    Vec2c k1 = f(t, y);
    std::size_t steps = 0;
    std::size_t next = 0;
    while (next < targets.size()) {
        const double target = targets[next];
        if ((target - t) * dir <= 0.0) {
            ++next;
            continue;
        }
        double cap = step_cap(t);
        double hh = std::min({h, cap, std::abs(target - t)});
        bool hits = std::abs(target - t) <= hh * (1.0 + 1e-12);
        if (hits)
            hh = std::abs(target - t);
        if (!hits && hh < ctl.h_min * std::max(1.0, std::abs(t))) {
            if (on_underflow)
                on_underflow(t);
            fail(ErrorKind::stiffness, "step underflow at t=" + std::to_string(t));
        }
        if (++steps > ctl.max_steps) {
            if (on_underflow)
                on_underflow(t);
            fail(ErrorKind::stiffness, "step budget exhausted at t=" + std::to_string(t));
        }
        const double sh = dir * hh;
        const Vec2c k2 = f(t + T::c2 * sh, y + sh * (T::a21 * k1));
        const Vec2c k3 = f(t + T::c3 * sh, y + sh * (T::a31 * k1 + T::a32 * k2));
        const Vec2c k4 = f(t + T::c4 * sh, y + sh * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
        const Vec2c k5 = f(t + T::c5 * sh, y + sh * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
        const double t_new = hits ? target : t + sh;
        const Vec2c k6 =
            f(t + sh, y + sh * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
        const Vec2c y_new = y + sh * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
        const Vec2c k7 = f(t_new, y_new);
        const Vec2c err = sh * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
        double err_norm = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double scale = ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err_norm = std::max(err_norm, std::abs(err[i]) / scale);
        }
        if (!std::isfinite(err_norm) || !y_new.allFinite()) {
            if (!y.allFinite())
                fail(ErrorKind::divergence, "non-finite solution at t=" + std::to_string(t));
            h = 0.25 * hh;
            continue;
        }
        if (err_norm <= 1.0) {
            t = t_new;
            y = y_new;
            k1 = k7;
            on_accept(t, y);
            if (hits)
                ++next;
            const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            // a clipped landing step should not shrink the next regular step
            h = hits ? std::max(h, hh * factor) : hh * factor;
        } else {
            h = hh * std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
        }
    }
    return y;
}

} // namespace vws
