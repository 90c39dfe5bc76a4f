#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "quasisym.hpp"

namespace vws {

struct QuasisymSuiteReport {
    int m = 2;
    int samples = 0;
    double tol = 0.0;
    std::map<std::string, int> failures; // item id -> failing samples
    std::map<std::string, double> worst; // item id -> worst measured value
    double min_nearly_diagonal = 1.0;    // m = 2 only
    double max_commutator_error = 0.0;   // m = 2 only
    int not_in_s2 = 0;

    bool passed() const
    {
        for (const auto& [id, n] : failures)
            if (n > 0)
                return false;
        return not_in_s2 == 0;
    }
};

/// Random spectra: roots of tau^2 - b tau - a (a >= 0) for m = 2, uniform
/// entries in [-2, 2] otherwise; delta uniform in (0, 1].
inline QuasisymSuiteReport run_quasisym_suite(int m, int samples, double tol, std::uint64_t seed = 20240601)
{
    if (m < 2 || m > quasisym_size_cap)
        fail(ErrorKind::capability, "suite supports 2 <= m <= " + std::to_string(quasisym_size_cap));
    if (samples < 1)
        fail(ErrorKind::domain, "need at least one sample");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, 4.0), ub(-3.0, 3.0), ul(-2.0, 2.0), ud(0.0, 1.0);
    QuasisymSuiteReport rep;
    rep.m = m;
    rep.samples = samples;
    rep.tol = tol;
    for (const char* id : {"i", "ii", "iii", "iv", "v", "vi", "vii"})
        rep.failures[id] = 0;
    if (m == 2) {
        rep.failures["commutator"] = 0;
        rep.failures["nearly_diagonal"] = 0;
    }
    for (int n = 0; n < samples; ++n) {
        std::vector<double> l(static_cast<std::size_t>(m));
        if (m == 2) {
            const double a = ua(rng), b = ub(rng), r = std::sqrt(b * b + 4 * a);
            l = {0.5 * (b - r), 0.5 * (b + r)};
        } else {
            for (auto& v : l)
                v = ul(rng);
        }
        double delta = 1.0 - ud(rng); // (0, 1]
        const Spectrum lambda(l);
        const auto report = check_prop31(lambda, delta, tol);
        for (const auto& item : report.items) {
            if (!item.passed)
                ++rep.failures[item.id];
            rep.worst[item.id] = std::max(rep.worst[item.id], item.measured);
        }
        if (m == 2) {
            if (!in_S_M(lambda, 2.0))
                ++rep.not_in_s2;
            const Matrix2 c = commutator_Q2(lambda, delta);
            const double err = std::max({std::abs(c(0, 0)), std::abs(c(1, 1)), std::abs(c(0, 1) - 2 * delta * delta),
                                         std::abs(c(1, 0) + 2 * delta * delta)});
            rep.max_commutator_error = std::max(rep.max_commutator_error, err);
            if (err > 1e-14)
                ++rep.failures["commutator"];
            const auto c0 = nearly_diagonal_constant(build_Q2(l[0], l[1], delta));
            const double v = c0.value_or(-1.0);
            rep.min_nearly_diagonal = std::min(rep.min_nearly_diagonal, v);
            if (v < 0.125 - 1e-12)
                ++rep.failures["nearly_diagonal"];
        }
    }
    return rep;
}

} // namespace vws
