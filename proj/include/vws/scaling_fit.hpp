#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace vws {

enum class Verdict { moderate, negligible, divergent, inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::moderate: return "moderate";
    case Verdict::negligible: return "negligible";
    case Verdict::divergent: return "divergent";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

/// Least-squares power law  log10(norm) = intercept + slope * log10(1/eps).
///
/// slope is the moderateness exponent N (negative for decaying nets),
/// residual the max deviation of the samples from the line in log10 units.
/// For negligible verdicts `order` holds the largest q with norm = O(eps^q).
struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    Verdict verdict = Verdict::inconclusive;
    int order = 0;
    double slope_first_half = 0.0;
    double slope_second_half = 0.0;
};

inline constexpr double moderate_residual_log10 = 0.15;

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0; // max |y - fit| over the samples
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        fail(ErrorKind::fit, "least squares needs at least two paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
    if (!(sxx > 0.0) || span <= 1e-12 * std::max(1.0, std::abs(mx)))
        fail(ErrorKind::fit, "degenerate abscissae (constant regressor)");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < n; ++i)
        f.residual = std::max(f.residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
    return f;
}

/// Regress sup-norms against 1/eps over an eps-ladder and classify the net.
inline ScalingFit fit_power(std::span<const std::pair<double, double>> samples)
{
    if (samples.size() < 4)
        fail(ErrorKind::fit, "fit_power needs at least 4 samples, got " + std::to_string(samples.size()));
    for (const auto& [eps, norm] : samples) {
        if (!(eps > 0.0) || !std::isfinite(norm) || norm < 0.0)
            fail(ErrorKind::fit, "fit_power samples need eps > 0 and finite nonnegative norms");
    }
    ScalingFit out;
    const bool all_zero =
        std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.second == 0.0; });
    if (all_zero) {
        out.verdict = Verdict::negligible;
        out.order = std::numeric_limits<int>::max();
        return out;
    }
    if (std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.second == 0.0; })) {
        // Mixed zero / nonzero norms: treat exact zeros as below every power.
        out.verdict = Verdict::inconclusive;
    }
    std::vector<double> x, y;
    for (const auto& [eps, norm] : samples) {
        if (norm == 0.0)
            continue;
        x.push_back(std::log10(1.0 / eps));
        y.push_back(std::log10(norm));
    }
    if (x.size() < 2)
        fail(ErrorKind::fit, "fewer than two nonzero norms");
    const LineFit all = least_squares(x, y);
    out.slope = all.slope;
    out.intercept = all.intercept;
    out.residual = all.residual;

    // Split-fit drift: the slope must not grow superlinearly along the ladder.
    const std::size_t half = x.size() / 2;
    if (half >= 2 && x.size() - half >= 2) {
        std::span<const double> xs(x), ys(y);
        const LineFit first = least_squares(xs.first(half + (x.size() % 2)), ys.first(half + (x.size() % 2)));
        const LineFit second = least_squares(xs.last(half + (x.size() % 2)), ys.last(half + (x.size() % 2)));
        out.slope_first_half = first.slope;
        out.slope_second_half = second.slope;
        const double drift = second.slope - first.slope;
        if (drift > std::max(1.0, std::abs(first.slope))) {
            out.verdict = Verdict::divergent;
            return out;
        }
    } else {
        out.slope_first_half = out.slope_second_half = out.slope;
    }
    if (out.verdict == Verdict::inconclusive && x.size() != samples.size())
        return out;
    if (out.residual >= moderate_residual_log10) {
        out.verdict = Verdict::inconclusive;
        return out;
    }
    if (out.slope < -0.5) {
        out.verdict = Verdict::negligible;
        out.order = static_cast<int>(std::floor(-out.slope + 1e-6));
    } else {
        out.verdict = Verdict::moderate;
        out.order = static_cast<int>(std::ceil(out.slope - 1e-6));
    }
    return out;
}

inline ScalingFit fit_power(const std::vector<std::pair<double, double>>& samples)
{
    return fit_power(std::span<const std::pair<double, double>>(samples));
}

} // namespace vws
