#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library under test.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000)
{
    if (n % 2)
        ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

inline double raw_bump(double t, double sharpness = 1.0)
{
    return std::abs(t) < 1.0 ? std::exp(-sharpness / (1.0 - t * t)) : 0.0;
}

inline double bump_mass(double sharpness = 1.0)
{
    static const double mild = simpson([](double t) { return raw_bump(t, 1.0); }, -1.0, 1.0, 200000);
    static const double steep = simpson([](double t) { return raw_bump(t, 4.0); }, -1.0, 1.0, 200000);
    if (sharpness == 1.0)
        return mild;
    if (sharpness == 4.0)
        return steep;
    return simpson([&](double t) { return raw_bump(t, sharpness); }, -1.0, 1.0, 200000);
}

/// Normalised kernel value, computed from scratch.
inline double kernel(double t, double sharpness = 1.0) { return raw_bump(t, sharpness) / bump_mass(sharpness); }

/// Five-point central difference.
inline double diff(const std::function<double(double)>& f, double x, double h)
{
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

/// Unsigned elementary symmetric polynomial e_h by brute-force subsets.
inline double elementary(const std::vector<double>& l, int h)
{
    const int m = static_cast<int>(l.size());
    double s = 0.0;
    for (int mask = 0; mask < (1 << m); ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) != h)
            continue;
        double p = 1.0;
        for (int i = 0; i < m; ++i)
            if (mask & (1 << i))
                p *= l[static_cast<std::size_t>(i)];
        s += p;
    }
    return s;
}

/// Determinant by Gaussian elimination with partial pivoting.
inline double det(std::vector<std::vector<double>> a)
{
    const std::size_t n = a.size();
    double d = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c]))
                p = r;
        if (a[p][c] == 0.0)
            return 0.0;
        if (p != c) {
            std::swap(a[p], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k)
                a[r][k] -= f * a[c][k];
        }
    }
    return d;
}

/// det of (m-1)! sum_i w_i w_i^T, w_i the reversed coefficient vector of
/// prod_{j != i} (tau - l_j), all in long double.
inline long double det_q0(const std::vector<double>& l)
{
    const std::size_t m = l.size();
    long double fact = 1;
    for (std::size_t i = 2; i < m; ++i)
        fact *= static_cast<long double>(i);
    std::vector<std::vector<long double>> q(m, std::vector<long double>(m, 0.0L));
    for (std::size_t i = 0; i < m; ++i) {
        // coefficients of prod_{j != i} (tau - l_j), highest degree first
        std::vector<long double> c{1.0L};
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i)
                continue;
            std::vector<long double> n(c.size() + 1, 0.0L);
            for (std::size_t k = 0; k < c.size(); ++k) {
                n[k] += c[k];
                n[k + 1] -= c[k] * static_cast<long double>(l[j]);
            }
            c = n;
        }
        std::vector<long double> w(c.rbegin(), c.rend()); // (const term, ..., leading 1)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                q[a][b] += fact * w[a] * w[b];
    }
    long double d = 1.0L;
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(q[r][c]) > std::abs(q[p][c]))
                p = r;
        if (q[p][c] == 0.0L)
            return 0.0L;
        if (p != c) {
            std::swap(q[p], q[c]);
            d = -d;
        }
        d *= q[c][c];
        for (std::size_t r = c + 1; r < m; ++r) {
            const long double f = q[r][c] / q[c][c];
            for (std::size_t k = c; k < m; ++k)
                q[r][k] -= f * q[c][k];
        }
    }
    return d;
}

} // namespace oracle
