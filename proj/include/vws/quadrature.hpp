#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace vws {

/// Gauss–Legendre rule on [-1, 1], expanded from the symmetric half-tables.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

namespace detail {

template <unsigned N>
GaussRule make_gauss_rule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    GaussRule r;
    r.nodes.reserve(N);
    r.weights.reserve(N);
    // boost stores non-negative abscissae; x[0] == 0 iff N is odd.
    const std::size_t start = (N % 2 == 1) ? 1 : 0;
    for (std::size_t i = x.size(); i-- > start;) {
        r.nodes.push_back(-x[i]);
        r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.nodes.push_back(x[i]);
        r.weights.push_back(w[i]);
    }
    return r;
}

} // namespace detail

/// Rules with 32 * 2^level nodes, level 0..4. Built once, read-only after.
inline const GaussRule& gauss_rule(int level)
{
    static const GaussRule rules[] = {
        detail::make_gauss_rule<32>(),  detail::make_gauss_rule<64>(),
        detail::make_gauss_rule<128>(), detail::make_gauss_rule<256>(),
        detail::make_gauss_rule<512>(),
    };
    if (level < 0 || level > 4)
        fail(ErrorKind::capability, "Gauss rule level out of range");
    return rules[level];
}

inline constexpr int max_gauss_level = 4;

/// Integrate f over [a, b] with the given rule.
template <class F>
double integrate(const GaussRule& rule, F&& f, double a, double b)
{
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

/// (integral of f, integral of |f|) with one pass of the rule.
template <class F>
std::pair<double, double> integrate_with_mass(const GaussRule& rule, F&& f, double a, double b)
{
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double v = rule.weights[i] * f(mid + half * rule.nodes[i]);
        sum += v;
        mass += std::abs(v);
    }
    return {sum * half, mass * std::abs(half)};
}

/// Doubling Gauss–Legendre: 32, 64, ... nodes until the change drops below
/// rel_tol relative to the integral of |f| (so cancelling integrands converge).
/// Throws ToleranceError when the ladder is exhausted.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10, double abs_floor = 1e-15)
{
    double prev = integrate_with_mass(gauss_rule(0), f, a, b).first;
    double change = 0.0, scale = 0.0;
    for (int level = 1; level <= max_gauss_level; ++level) {
        const auto [cur, mass] = integrate_with_mass(gauss_rule(level), f, a, b);
        change = std::abs(cur - prev);
        scale = std::max(std::abs(cur), mass);
        if (change <= rel_tol * scale || change <= abs_floor)
            return cur;
        prev = cur;
    }
    throw ToleranceError("Gauss-Legendre doubling did not converge", change / std::max(scale, abs_floor));
}

} // namespace vws
