#pragma once

#include "wavemaps/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

namespace wavemaps::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Options {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    /// Magnitude of the first trial step; 0 selects 1e-3 of the interval.
    double first_step = 0.0;
    std::size_t max_steps = 20'000'000;
};

namespace detail {

template <std::size_t N>
void check_finite(const State<N>& y, double x) {
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw IntegrationFailure("non-finite ODE state at x = " + std::to_string(x));
        }
    }
}

template <std::size_t N>
auto make_stepper(const Options& opt) {
    using stepper_t = boost::numeric::odeint::runge_kutta_fehlberg78<State<N>>;
    return boost::numeric::odeint::make_controlled<stepper_t>(opt.abs_tol, opt.rel_tol);
}

inline double initial_step(const Options& opt, double x0, double x1) {
    const double span = x1 - x0;
    const double mag = opt.first_step > 0.0 ? std::min(opt.first_step, std::abs(span))
                                            : 1e-3 * std::abs(span);
    return std::copysign(mag, span);
}

}  // namespace detail

/// Adaptive Fehlberg 7(8) integration of y' = rhs(x, y, dydx) from x0 to x1
/// (either direction). `observe(x, y)` runs at the start and after every
/// accepted step and may throw to abort.
template <std::size_t N, class Rhs, class Observer>
State<N> integrate(Rhs&& rhs, State<N> y, double x0, double x1, const Options& opt,
                   Observer&& observe) {
    if (x0 == x1) {
        observe(x0, y);
        return y;
    }
    auto stepper = detail::make_stepper<N>(opt);
    std::size_t steps = 0;
    auto sys = [&](const State<N>& s, State<N>& d, double x) { rhs(x, s, d); };
    auto obs = [&](const State<N>& s, double x) {
        detail::check_finite<N>(s, x);
        if (++steps > opt.max_steps) {
            throw IntegrationFailure("ODE step budget exhausted at x = " + std::to_string(x));
        }
        observe(x, s);
    };
    try {
        boost::numeric::odeint::integrate_adaptive(stepper, sys, y, x0, x1,
                                                   detail::initial_step(opt, x0, x1), obs);
    } catch (const boost::numeric::odeint::step_adjustment_error& e) {
        throw IntegrationFailure(std::string("step size control failed: ") + e.what());
    }
    detail::check_finite<N>(y, x1);
    return y;
}

template <std::size_t N, class Rhs>
State<N> integrate(Rhs&& rhs, State<N> y, double x0, double x1, const Options& opt = {}) {
    return integrate<N>(std::forward<Rhs>(rhs), y, x0, x1, opt, [](double, const State<N>&) {});
}

/// Solution values at the abscissae xs (monotone; xs[0] is the start point
/// where y is given).
template <std::size_t N, class Rhs>
std::vector<State<N>> sample(Rhs&& rhs, State<N> y, std::span<const double> xs,
                             const Options& opt = {}) {
    std::vector<State<N>> out;
    out.reserve(xs.size());
    if (xs.empty()) return out;
    if (xs.size() == 1) {
        out.push_back(y);
        return out;
    }
    auto stepper = detail::make_stepper<N>(opt);
    auto sys = [&](const State<N>& s, State<N>& d, double x) { rhs(x, s, d); };
    std::size_t steps = 0;
    auto obs = [&](const State<N>& s, double x) {
        detail::check_finite<N>(s, x);
        if (++steps > opt.max_steps) {
            throw IntegrationFailure("ODE step budget exhausted at x = " + std::to_string(x));
        }
        out.push_back(s);
    };
    const double dt = detail::initial_step(opt, xs.front(), xs[1]);
    try {
        boost::numeric::odeint::integrate_times(stepper, sys, y, xs.begin(), xs.end(), dt, obs);
    } catch (const boost::numeric::odeint::step_adjustment_error& e) {
        throw IntegrationFailure(std::string("step size control failed: ") + e.what());
    }
    return out;
}

}  // namespace wavemaps::ode
