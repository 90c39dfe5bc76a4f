#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"
#include "scaling_fit.hpp"

namespace vws {

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

struct Constant {
    double value = 0.0;
};

/// A smooth function sampled through a callable, convolved over its declared
/// support [lo, hi]. `derivative` is optional and only used for unmollified
/// (classical) evaluation of d/dt.
struct SmoothSample {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double lo = 0.0;
    double hi = 1.0;
    int smoothness = 2; // C^k class of the underlying function
    std::string label = "smooth";
};

/// Indicator of [t0, t1].
struct Heaviside {
    double t0 = 0.0;
    double t1 = 1.0;
};

struct Dirac {
    double t2 = 0.5;
};

using AtomKind = std::variant<Constant, SmoothSample, Heaviside, Dirac>;

struct CoefficientAtom {
    AtomKind kind;
    double weight = 1.0;
};

enum class CoefficientRole { a, b };

inline const char* to_string(CoefficientRole r) { return r == CoefficientRole::a ? "a" : "b"; }

/// Symbolic distributional coefficient: weighted sum of atoms on [0, T].
class CoefficientSpec {
public:
    CoefficientSpec() = default;

    /// Validates atom invariants; throws Error(domain) naming the atom.
    CoefficientSpec(std::vector<CoefficientAtom> atoms, CoefficientRole role, int axis, double final_time)
        : atoms_(std::move(atoms)), role_(role), axis_(axis), final_time_(final_time)
    {
        if (!(final_time_ > 0.0) || !std::isfinite(final_time_))
            fail(ErrorKind::domain, "final time T must be positive and finite");
        if (axis_ < 1)
            fail(ErrorKind::domain, "coefficient axis index starts at 1");
        support_lo_ = final_time_;
        support_hi_ = 0.0;
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            validate(atoms_[i], i);
        if (support_lo_ > support_hi_) {
            support_lo_ = 0.0;
            support_hi_ = final_time_;
        }
    }

    const std::vector<CoefficientAtom>& atoms() const { return atoms_; }
    CoefficientRole role() const { return role_; }
    int axis() const { return axis_; }
    double final_time() const { return final_time_; }

    /// Closed hull of the atoms' supports (Constant atoms contribute [0, T]).
    std::pair<double, double> support() const { return {support_lo_, support_hi_}; }

    bool has_constant() const
    {
        return std::any_of(atoms_.begin(), atoms_.end(),
                           [](const auto& a) { return std::holds_alternative<Constant>(a.kind); });
    }

    /// True when every atom is a Constant or SmoothSample (classical C^k coefficient).
    bool is_classical() const
    {
        return std::all_of(atoms_.begin(), atoms_.end(), [](const auto& a) {
            return std::holds_alternative<Constant>(a.kind) || std::holds_alternative<SmoothSample>(a.kind);
        });
    }

    /// Structure order declared per atom: 1 for a Dirac mass, 0 otherwise.
    int structure_order() const
    {
        int l = 0;
        for (const auto& a : atoms_)
            if (std::holds_alternative<Dirac>(a.kind) && a.weight != 0.0)
                l = 1;
        return l;
    }

    /// Unmollified value (classical coefficients only).
    double classical_value(double t, int order = 0) const
    {
        double sum = 0.0;
        for (const auto& atom : atoms_) {
            if (const auto* c = std::get_if<Constant>(&atom.kind)) {
                sum += order == 0 ? atom.weight * c->value : 0.0;
            } else if (const auto* s = std::get_if<SmoothSample>(&atom.kind)) {
                if (t < s->lo || t > s->hi)
                    continue;
                if (order == 0) {
                    sum += atom.weight * s->value(t);
                } else if (order == 1) {
                    if (s->derivative) {
                        sum += atom.weight * s->derivative(t);
                    } else {
                        const double h = 1e-6 * std::max(1.0, std::abs(t));
                        sum += atom.weight * (s->value(t + h) - s->value(t - h)) / (2.0 * h);
                    }
                } else {
                    fail(ErrorKind::capability, "classical coefficients support derivative order <= 1");
                }
            } else {
                fail(ErrorKind::domain, "classical evaluation requested for a distributional atom");
            }
        }
        return sum;
    }

private:
    void grow_support(double lo, double hi)
    {
        support_lo_ = std::min(support_lo_, lo);
        support_hi_ = std::max(support_hi_, hi);
    }

    void validate(const CoefficientAtom& atom, std::size_t index)
    {
        const std::string where = std::string(to_string(role_)) + "-coefficient axis " + std::to_string(axis_)
                                  + " atom " + std::to_string(index) + ": ";
        if (!std::isfinite(atom.weight))
            fail(ErrorKind::domain, where + "weight must be finite");
        const bool a_role = role_ == CoefficientRole::a;
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Constant>) {
                    if (!std::isfinite(k.value))
                        fail(ErrorKind::domain, where + "constant must be finite");
                    if (a_role && atom.weight * k.value < 0.0)
                        fail(ErrorKind::domain, where + "a-coefficients must be nonnegative");
                    grow_support(0.0, final_time_);
                } else if constexpr (std::is_same_v<K, SmoothSample>) {
                    if (!k.value)
                        fail(ErrorKind::domain, where + "smooth sample needs a callable");
                    if (!(k.lo < k.hi) || !std::isfinite(k.lo) || !std::isfinite(k.hi))
                        fail(ErrorKind::domain, where + "smooth sample support must be a finite interval lo < hi");
                    if (a_role) {
                        constexpr int probes = 1001;
                        for (int i = 0; i < probes; ++i) {
                            const double t = k.lo + (k.hi - k.lo) * i / (probes - 1);
                            if (atom.weight * k.value(t) < 0.0)
                                fail(ErrorKind::domain, where + "a-coefficients must be nonnegative (negative sample at t="
                                                            + std::to_string(t) + ")");
                        }
                    }
                    grow_support(std::max(k.lo, 0.0), std::min(k.hi, final_time_));
                } else if constexpr (std::is_same_v<K, Heaviside>) {
                    if (!(0.0 < k.t0 && k.t0 < k.t1 && k.t1 <= final_time_))
                        fail(ErrorKind::domain, where + "Heaviside requires 0 < t0 < t1 <= T (got t0="
                                                    + std::to_string(k.t0) + ", t1=" + std::to_string(k.t1) + ")");
                    if (a_role && atom.weight < 0.0)
                        fail(ErrorKind::domain, where + "a-coefficients must be nonnegative");
                    grow_support(k.t0, k.t1);
                } else if constexpr (std::is_same_v<K, Dirac>) {
                    if (!(0.0 < k.t2 && k.t2 <= final_time_))
                        fail(ErrorKind::domain, where + "Dirac requires 0 < t2 <= T (got t2=" + std::to_string(k.t2) + ")");
                    if (a_role && atom.weight < 0.0)
                        fail(ErrorKind::domain, where + "a-coefficients must be nonnegative");
                    grow_support(k.t2, k.t2);
                }
            },
            atom.kind);
    }

    std::vector<CoefficientAtom> atoms_;
    CoefficientRole role_ = CoefficientRole::a;
    int axis_ = 1;
    double final_time_ = 1.0;
    double support_lo_ = 0.0;
    double support_hi_ = 1.0;
};

// ---------------------------------------------------------------------------
// Scales
// ---------------------------------------------------------------------------

enum class ScaleKind { log_scale, mixed_scale, power_scale };

/// omega(eps): LogScale c (log 1/eps)^{-r}, MixedScale c (log 1/eps)^{-r1} eps^{r2},
/// PowerScale c eps^r.
struct ScaleRule {
    ScaleKind kind = ScaleKind::log_scale;
    double c = 1.0;
    double r = 1.0;  // LogScale / PowerScale exponent; MixedScale log exponent r1
    double r2 = 0.0; // MixedScale power exponent

    static ScaleRule log(double c, double r) { return {ScaleKind::log_scale, c, r, 0.0}; }
    static ScaleRule mixed(double c, double r1, double r2) { return {ScaleKind::mixed_scale, c, r1, r2}; }
    static ScaleRule power(double c, double r) { return {ScaleKind::power_scale, c, r, 0.0}; }
};

inline const char* to_string(ScaleKind k)
{
    switch (k) {
    case ScaleKind::log_scale: return "log";
    case ScaleKind::mixed_scale: return "mixed";
    case ScaleKind::power_scale: return "power";
    }
    return "unknown";
}

inline double omega_of(const ScaleRule& scale, double eps)
{
    if (!(eps > 0.0 && eps < 1.0))
        fail(ErrorKind::domain, "omega_of needs 0 < eps < 1 (log(1/eps) vanishes at eps = 1), got "
                                    + std::to_string(eps));
    if (!(scale.c > 0.0))
        fail(ErrorKind::domain, "scale constant c must be positive");
    const double lg = std::log(1.0 / eps);
    switch (scale.kind) {
    case ScaleKind::log_scale: return scale.c * std::pow(lg, -scale.r);
    case ScaleKind::mixed_scale: return scale.c * std::pow(lg, -scale.r) * std::pow(eps, scale.r2);
    case ScaleKind::power_scale: return scale.c * std::pow(eps, scale.r);
    }
    return 0.0;
}

enum class RegularityCase { gevrey, smooth, distribution };

inline const char* to_string(RegularityCase c)
{
    switch (c) {
    case RegularityCase::gevrey: return "gevrey";
    case RegularityCase::smooth: return "smooth";
    case RegularityCase::distribution: return "distribution";
    }
    return "unknown";
}

/// Exponents making omega^{-M} <R_eps>^{1/sigma} of logarithmic type.
/// sigma = 1 + k/2, M = (3L + k)/k, r = (1/s - 1/sigma) / ((1/s) M), r2 = 1/(sigma M).
inline ScaleRule derive_scale_exponents(double s, int k, int structure_order, RegularityCase regularity,
                                        double c = 1.0)
{
    if (k < 2)
        fail(ErrorKind::admissibility, "coefficient class k must be >= 2");
    if (structure_order < 0)
        fail(ErrorKind::admissibility, "structure order L must be >= 0");
    const double sigma = 1.0 + k / 2.0;
    if (!(s > 1.0 && s < sigma))
        fail(ErrorKind::admissibility, "Gevrey order must satisfy 1 < s < 1 + k/2 = " + std::to_string(sigma)
                                           + ", got s=" + std::to_string(s));
    const double m = (3.0 * structure_order + k) / k;
    const double r = (1.0 / s - 1.0 / sigma) / ((1.0 / s) * m);
    if (regularity == RegularityCase::gevrey)
        return ScaleRule::log(c, r);
    return ScaleRule::mixed(c, r, 1.0 / (sigma * m));
}

// ---------------------------------------------------------------------------
// Mollified nets
// ---------------------------------------------------------------------------

struct NetQuadrature {
    double rel_tol = 1e-10;
    double abs_tol = 1e-15;
};

/// eps -> (spec * psi_{omega(eps)}), evaluable with t-derivatives.
class MollifiedNet {
public:
    MollifiedNet(CoefficientSpec spec, MollifierKernel kernel, ScaleRule scale, NetQuadrature quad = {})
        : spec_(std::move(spec)), kernel_(std::move(kernel)), scale_(scale), quad_(quad),
          structure_order_(spec_.structure_order())
    {
    }

    const CoefficientSpec& spec() const { return spec_; }
    const MollifierKernel& kernel() const { return kernel_; }
    const ScaleRule& scale() const { return scale_; }
    int structure_order() const { return structure_order_; }

    double omega(double eps) const { return omega_of(scale_, eps); }

    double eval(double eps, double t) const { return eval_derivative(eps, t, 0); }

    double eval_derivative(double eps, double t, int order) const
    {
        if (!(eps > 0.0 && eps <= 1.0))
            fail(ErrorKind::domain, "eps must lie in (0, 1], got " + std::to_string(eps));
        return eval_at_width(omega(eps), t, order);
    }

    /// d^order/dt^order (spec * psi_w)(t) at mollifier width w.
    double eval_at_width(double width, double t, int order) const
    {
        if (!(width > 0.0))
            fail(ErrorKind::domain, "mollifier width must be positive");
        if (order < 0 || order > MollifierKernel::max_derivative_order)
            fail(ErrorKind::capability, "derivative order " + std::to_string(order) + " exceeds kernel budget "
                                            + std::to_string(MollifierKernel::max_derivative_order));
        double sum = 0.0;
        for (const auto& atom : spec_.atoms()) {
            if (atom.weight == 0.0)
                continue;
            sum += atom.weight * std::visit([&](const auto& k) { return atom_value(k, width, t, order); }, atom.kind);
        }
        return sum;
    }

private:
    double atom_value(const Constant& c, double, double, int order) const { return order == 0 ? c.value : 0.0; }

    double atom_value(const Heaviside& h, double w, double t, int order) const
    {
        const double u0 = (t - h.t0) / w, u1 = (t - h.t1) / w;
        if (order == 0)
            return kernel_.antiderivative(u0) - kernel_.antiderivative(u1);
        return std::pow(w, -order) * (kernel_.derivative(u0, order - 1) - kernel_.derivative(u1, order - 1));
    }

    double atom_value(const Dirac& d, double w, double t, int order) const
    {
        return std::pow(w, -1 - order) * kernel_.derivative((t - d.t2) / w, order);
    }

    double atom_value(const SmoothSample& s, double w, double t, int order) const
    {
        const double lo = std::max(s.lo, t - w), hi = std::min(s.hi, t + w);
        if (!(lo < hi))
            return 0.0;
        const double scale = std::pow(w, -1 - order);
        const auto integrand = [&](double y) { return s.value(y) * kernel_.derivative((t - y) / w, order); };
        return scale * integrate_adaptive(integrand, lo, hi, quad_.rel_tol, quad_.abs_tol * std::pow(w, 1 + order));
    }

    CoefficientSpec spec_;
    MollifierKernel kernel_;
    ScaleRule scale_;
    NetQuadrature quad_;
    int structure_order_ = 0;
};

/// Sample times used for sup-norm estimates on [0, T]: a uniform grid plus
/// every atom's distinguished points, refined over [p - width, p + width]
/// when a mollifier width is given.
inline std::vector<double> sup_probe_times(const CoefficientSpec& spec, int points = 2001, double width = 0.0)
{
    const double T = spec.final_time();
    std::vector<double> ts;
    ts.reserve(points + 3 * spec.atoms().size());
    for (int i = 0; i < points; ++i)
        ts.push_back(T * i / (points - 1));
    std::vector<double> marks;
    for (const auto& atom : spec.atoms()) {
        if (const auto* h = std::get_if<Heaviside>(&atom.kind)) {
            marks.push_back(h->t0);
            marks.push_back(h->t1);
            ts.push_back(0.5 * (h->t0 + h->t1));
        } else if (const auto* d = std::get_if<Dirac>(&atom.kind)) {
            marks.push_back(d->t2);
        } else if (const auto* sm = std::get_if<SmoothSample>(&atom.kind)) {
            if (sm->lo > 0.0)
                marks.push_back(sm->lo);
            if (sm->hi < T)
                marks.push_back(sm->hi);
        }
    }
    constexpr int refine = 400;
    for (double p : marks) {
        ts.push_back(p);
        if (width > 0.0)
            for (int i = 0; i <= refine; ++i) {
                const double t = p - width + 2.0 * width * i / refine;
                if (t >= 0.0 && t <= T)
                    ts.push_back(t);
            }
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

inline double sup_abs(const MollifiedNet& net, double eps, int order = 0)
{
    double m = 0.0;
    for (double t : sup_probe_times(net.spec(), 2001, net.omega(eps)))
        m = std::max(m, std::abs(net.eval_derivative(eps, t, order)));
    return m;
}

/// Regress log sup_t |net_eps| on log omega(eps)^{-1}; slope estimates L.
inline ScalingFit fit_structure_order(const MollifiedNet& net, const std::vector<double>& ladder)
{
    if (ladder.size() < 4)
        fail(ErrorKind::fit, "structure-order fit needs at least 4 eps values");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (!(ladder[i] < ladder[i - 1]))
            fail(ErrorKind::fit, "eps ladder must be strictly decreasing");
    std::vector<double> x, y;
    for (double eps : ladder) {
        const double sup = sup_abs(net, eps);
        if (!(sup > 0.0))
            fail(ErrorKind::fit, "zero sup-norm; structure order undefined");
        x.push_back(std::log10(1.0 / net.omega(eps)));
        y.push_back(std::log10(sup));
    }
    const LineFit line = least_squares(x, y);
    ScalingFit out;
    out.slope = line.slope;
    out.intercept = line.intercept;
    out.residual = line.residual;
    out.verdict = line.residual < moderate_residual_log10 ? Verdict::moderate : Verdict::inconclusive;
    out.order = static_cast<int>(std::lround(line.slope));
    out.slope_first_half = out.slope_second_half = line.slope;
    return out;
}

} // namespace vws
