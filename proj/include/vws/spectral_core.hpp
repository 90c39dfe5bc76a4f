#pragma once

#include <boost/math/special_functions/lambert_w.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "ode.hpp"
#include "quasisym.hpp"

namespace vws {

/// Frequency vector xi in R^n (n = 1 or 2).
using Frequency = std::vector<double>;

/// <xi> = (1 + |xi|^2)^{1/2}
inline double bracket(const Frequency& xi)
{
    double s = 1.0;
    for (double x : xi)
        s += x * x;
    return std::sqrt(s);
}

/// Additive net term (eps, t, derivative order) -> value; used for perturbations.
using NetTerm = std::function<double(double, double, int)>;

struct ProblemSetup {
    int n = 1;
    std::vector<MollifiedNet> a_nets;
    std::vector<MollifiedNet> b_nets;
    int k = 2;
    double s = 1.5;
    double T = 1.0;
    /// Evaluate the unmollified coefficients (classical reference solves).
    bool classical = false;
    std::vector<NetTerm> a_perturbation; // empty or size n
    std::vector<NetTerm> b_perturbation;

    double sigma() const { return 1.0 + k / 2.0; }

    int structure_order() const
    {
        int l = 0;
        for (const auto& net : a_nets)
            l = std::max(l, net.structure_order());
        for (const auto& net : b_nets)
            l = std::max(l, net.structure_order());
        return l;
    }

    /// M = (3L + k)/k
    double growth_exponent() const { return (3.0 * structure_order() + k) / k; }

    const ScaleRule& scale() const { return a_nets.front().scale(); }

    /// omega(eps), or 1 for classical solves.
    double omega(double eps) const { return classical ? 1.0 : omega_of(scale(), eps); }

    void validate() const
    {
        if (n < 1 || n > 2)
            fail(ErrorKind::domain, "spatial dimension must be 1 or 2");
        if (static_cast<int>(a_nets.size()) != n || static_cast<int>(b_nets.size()) != n)
            fail(ErrorKind::domain, "need exactly n a-nets and n b-nets");
        if (k < 2)
            fail(ErrorKind::admissibility, "k must be >= 2");
        if (!(s > 1.0 && s < sigma()))
            fail(ErrorKind::admissibility, "Gevrey order must satisfy 1 < s < 1 + k/2 = " + std::to_string(sigma())
                                               + ", got s=" + std::to_string(s));
        if (!(T > 0.0))
            fail(ErrorKind::domain, "final time must be positive");
        for (const auto* nets : {&a_nets, &b_nets})
            for (const auto& net : *nets) {
                const auto& sc = net.scale();
                if (sc.kind != scale().kind || sc.c != scale().c || sc.r != scale().r || sc.r2 != scale().r2)
                    fail(ErrorKind::domain, "all coefficient nets must share one scale rule");
            }
        if (classical)
            for (const auto* nets : {&a_nets, &b_nets})
                for (const auto& net : *nets)
                    if (!net.spec().is_classical())
                        fail(ErrorKind::domain, "classical solve requires C^k atoms (no Heaviside/Dirac)");
        if (!a_perturbation.empty() && static_cast<int>(a_perturbation.size()) != n)
            fail(ErrorKind::domain, "a-perturbation must have n entries");
        if (!b_perturbation.empty() && static_cast<int>(b_perturbation.size()) != n)
            fail(ErrorKind::domain, "b-perturbation must have n entries");
    }

    /// Width below which coefficient features live: omega when any coefficient
    /// has a jump, spike or truncated support inside [0, T], else +inf.
    double feature_width(double eps) const
    {
        if (classical)
            return std::numeric_limits<double>::infinity();
        for (const auto* nets : {&a_nets, &b_nets})
            for (const auto& net : *nets)
                for (const auto& atom : net.spec().atoms()) {
                    if (atom.weight == 0.0)
                        continue;
                    if (std::holds_alternative<Heaviside>(atom.kind) || std::holds_alternative<Dirac>(atom.kind))
                        return omega(eps);
                    if (const auto* sm = std::get_if<SmoothSample>(&atom.kind))
                        if (sm->lo > -omega(eps) || sm->hi < T + omega(eps))
                            return omega(eps);
                }
        return std::numeric_limits<double>::infinity();
    }

    double a_value(int axis, double eps, double t, int order) const
    {
        const auto& net = a_nets[static_cast<std::size_t>(axis)];
        double v = classical ? net.spec().classical_value(t, order) : net.eval_derivative(eps, t, order);
        if (!a_perturbation.empty() && a_perturbation[static_cast<std::size_t>(axis)])
            v += a_perturbation[static_cast<std::size_t>(axis)](eps, t, order);
        return v;
    }

    double b_value(int axis, double eps, double t, int order) const
    {
        const auto& net = b_nets[static_cast<std::size_t>(axis)];
        double v = classical ? net.spec().classical_value(t, order) : net.eval_derivative(eps, t, order);
        if (!b_perturbation.empty() && b_perturbation[static_cast<std::size_t>(axis)])
            v += b_perturbation[static_cast<std::size_t>(axis)](eps, t, order);
        return v;
    }
};

/// alpha = sum a_i xi_i^2 <xi>^{-2}, beta = sum b_i xi_i <xi>^{-1} and t-derivatives.
struct SymbolTerms {
    double alpha = 0.0;
    double beta = 0.0;
    double dalpha = 0.0;
    double dbeta = 0.0;
};

inline SymbolTerms symbol_terms(const ProblemSetup& setup, double eps, double t, const Frequency& xi,
                                bool with_derivative)
{
    const double br = bracket(xi);
    SymbolTerms st;
    for (int i = 0; i < setup.n; ++i) {
        const double x = xi[static_cast<std::size_t>(i)];
        if (x == 0.0)
            continue;
        const double wa = x * x / (br * br), wb = x / br;
        st.alpha += setup.a_value(i, eps, t, 0) * wa;
        st.beta += setup.b_value(i, eps, t, 0) * wb;
        if (with_derivative) {
            st.dalpha += setup.a_value(i, eps, t, 1) * wa;
            st.dbeta += setup.b_value(i, eps, t, 1) * wb;
        }
    }
    return st;
}

struct SystemMatrix {
    Matrix2 entries = Matrix2::Zero();
    Frequency xi;
    double bracket = 1.0;
};

/// A_eps(t, xi) = [[0, 1], [alpha, beta]].
inline SystemMatrix assemble_A(const ProblemSetup& setup, double eps, double t, const Frequency& xi)
{
    if (static_cast<int>(xi.size()) != setup.n)
        fail(ErrorKind::domain, "frequency dimension does not match problem dimension");
    if (t < -1e-12 || t > setup.T + 1e-12)
        fail(ErrorKind::domain, "t outside [0, T]");
    const auto st = symbol_terms(setup, eps, t, xi, false);
    SystemMatrix a;
    a.entries << 0.0, 1.0, st.alpha, st.beta;
    a.xi = xi;
    a.bracket = bracket(xi);
    return a;
}

inline constexpr double discriminant_clamp = 1e-14;

/// Roots of tau^2 - beta tau - alpha, sorted; stable form of the quadratic formula.
inline std::pair<double, double> eigenvalues_from_terms(double alpha, double beta)
{
    double disc = beta * beta + 4.0 * alpha;
    if (disc < 0.0) {
        if (disc < -discriminant_clamp)
            fail(ErrorKind::hyperbolicity, "negative discriminant " + std::to_string(disc)
                                               + " (a-term must be nonnegative)");
        disc = 0.0;
    }
    const double root = std::sqrt(disc);
    if (beta == 0.0)
        return {-0.5 * root, 0.5 * root};
    const double q = 0.5 * (beta + std::copysign(root, beta));
    const double other = q != 0.0 ? -alpha / q : 0.0;
    return {std::min(q, other), std::max(q, other)};
}

inline std::pair<double, double> eigenvalues_of(const SystemMatrix& a)
{
    return eigenvalues_from_terms(a.entries(1, 0), a.entries(1, 1));
}

/// delta = <xi>^{-k/(k+2)}, so that delta <xi> = <xi>^{1/sigma}.
inline double delta_of(const Frequency& xi, int k)
{
    if (k < 2)
        fail(ErrorKind::domain, "delta_of needs k >= 2");
    return std::pow(bracket(xi), -static_cast<double>(k) / (k + 2));
}

/// (Q_delta^{(2)}(lambda) V, V)
inline double energy_of(const Vec2c& v, std::pair<double, double> lambda, double delta)
{
    const auto [l1, l2] = lambda;
    const double q11 = l1 * l1 + l2 * l2 + 2.0 * delta * delta, q12 = -(l1 + l2), q22 = 2.0;
    return q11 * std::norm(v[0]) + 2.0 * q12 * std::real(std::conj(v[0]) * v[1]) + q22 * std::norm(v[1]);
}

// ---------------------------------------------------------------------------
// Mode integration
// ---------------------------------------------------------------------------

struct IntegratorConfig {
    StepControls step;
    double h_max = 0.05;
    double resolution = 10.0; // eta_res
    std::vector<double> output_times;
    bool record_steps = true;
};

struct ModeSample {
    double t = 0.0;
    Vec2c v = Vec2c::Zero();
    double energy = 0.0;
    double k_integrand = 0.0;   // |(dQ/dt V, V)| / (Q V, V)
    double commutator = 0.0;    // |((Q A - A^* Q) V, V)|
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double nearly_diagonal = 1.0;
};

struct ModeTrajectory {
    double eps = 0.0;
    Frequency xi;
    double bracket = 1.0;
    double delta = 1.0;
    double omega = 1.0;
    Vec2c v0 = Vec2c::Zero();
    std::vector<ModeSample> samples; // every accepted step (or outputs only)
    std::vector<ModeSample> outputs; // at the requested output times
    std::size_t steps = 0;
};

/// Quantities attached to a sample (energy, K integrand, eigenvalues).
inline ModeSample describe_sample(const ProblemSetup& setup, double eps, const Frequency& xi, double delta, double t,
                                  const Vec2c& v)
{
    const auto st = symbol_terms(setup, eps, t, xi, true);
    const auto lambda = eigenvalues_from_terms(st.alpha, st.beta);
    ModeSample s;
    s.t = t;
    s.v = v;
    s.lambda1 = lambda.first;
    s.lambda2 = lambda.second;
    s.energy = energy_of(v, lambda, delta);
    // Q entries are polynomial in (alpha, beta): q11 = beta^2 + 2 alpha + 2 delta^2, q12 = -beta, q22 = 2.
    const double dq11 = 2.0 * st.beta * st.dbeta + 2.0 * st.dalpha, dq12 = -st.dbeta;
    const double dform = dq11 * std::norm(v[0]) + 2.0 * dq12 * std::real(std::conj(v[0]) * v[1]);
    s.k_integrand = s.energy > 0.0 ? std::abs(dform) / s.energy : 0.0;
    s.commutator = 4.0 * delta * delta * std::abs(std::imag(std::conj(v[0]) * v[1]));
    const double q11 = lambda.first * lambda.first + lambda.second * lambda.second + 2.0 * delta * delta;
    s.nearly_diagonal = 1.0 - std::abs(lambda.first + lambda.second) / std::sqrt(2.0 * q11);
    return s;
}

/// Solve dV/dt = i <xi> A_eps(t, xi) V on [0, T] (D_t = -i d/dt).
inline ModeTrajectory integrate_mode(const ProblemSetup& setup, double eps, const Frequency& xi, const Vec2c& v0,
                                     const IntegratorConfig& cfg, double t_start = 0.0,
                                     std::optional<double> t_end = std::nullopt)
{
    if (!v0.allFinite())
        fail(ErrorKind::domain, "initial mode vector must be finite");
    if (static_cast<int>(xi.size()) != setup.n)
        fail(ErrorKind::domain, "frequency dimension does not match problem dimension");
    ModeTrajectory traj;
    traj.eps = eps;
    traj.xi = xi;
    traj.bracket = bracket(xi);
    traj.delta = delta_of(xi, setup.k);
    traj.omega = setup.omega(eps);
    traj.v0 = v0;
    const double br = traj.bracket;
    const double t1 = t_end.value_or(setup.T);
    const double feature = setup.feature_width(eps);

    const auto rhs = [&](double t, const Vec2c& v) -> Vec2c {
        const auto st = symbol_terms(setup, eps, t, xi, false);
        const std::complex<double> ib(0.0, br);
        return Vec2c(ib * v[1], ib * (st.alpha * v[0] + st.beta * v[1]));
    };
    const auto cap = [&](double t) {
        const auto st = symbol_terms(setup, eps, t, xi, false);
        const double norm_a = std::max(1.0, std::abs(st.alpha) + std::abs(st.beta));
        double h = std::min(cfg.h_max, 1.0 / (br * norm_a * cfg.resolution));
        if (std::isfinite(feature))
            h = std::min(h, feature / cfg.resolution);
        return h;
    };
    std::vector<double> outs = cfg.output_times;
    std::sort(outs.begin(), outs.end());
    const auto is_output = [&](double t) {
        return std::any_of(outs.begin(), outs.end(), [t](double o) { return std::abs(o - t) <= 1e-12 * std::max(1.0, std::abs(o)); });
    };
    const auto record = [&](double t, const Vec2c& v) {
        const bool out = is_output(t);
        if (!cfg.record_steps && !out)
            return;
        const ModeSample s = describe_sample(setup, eps, xi, traj.delta, t, v);
        if (cfg.record_steps)
            traj.samples.push_back(s);
        if (out)
            traj.outputs.push_back(s);
    };
    record(t_start, v0);
    std::size_t steps = 0;
    const Vec2c end = integrate_dopri5(
        rhs, v0, t_start, t1, cfg.step, cap, outs,
        [&](double t, const Vec2c& v) {
            ++steps;
            if (!v.allFinite())
                fail(ErrorKind::divergence, "non-finite mode vector at t=" + std::to_string(t));
            record(t, v);
        },
        [&](double t) { throw StiffnessError(t, traj.omega, br); });
    (void)end;
    traj.steps = steps;
    return traj;
}

// ---------------------------------------------------------------------------
// Energy checks
// ---------------------------------------------------------------------------

struct GronwallReport {
    bool passed = false;
    double integral_k = 0.0;       // int_0^T K dt
    double min_nearly_diagonal = 1.0; // c0 along the trajectory
    double growth_constant = 0.0;  // C2 = 2 / c0 used in the bound
    double measured_commutator_constant = 0.0; // sup |comm| / (delta E)
    double worst_ratio = 0.0;      // max E(t) / bound(t)
    double worst_t = 0.0;
    bool two_sided_passed = false;
    double certified_two_sided = 0.0; // (Lambda^2 + 4) omega^{2L}
    double lower_ratio = 0.0;      // max omega^{2L} delta^2 |V|^2 / (C E)
    double upper_ratio = 0.0;      // max E / (C omega^{-2L} |V|^2)
    std::size_t ks_violations = 0; // lambda1^2 + lambda2^2 > 2 (lambda1 - lambda2)^2
};

inline constexpr double gronwall_rel_tol = 1e-8;

inline bool ks_condition(double l1, double l2)
{
    const double lhs = l1 * l1 + l2 * l2, rhs = 2.0 * (l1 - l2) * (l1 - l2);
    return lhs <= rhs + 1e-12 * std::max(1.0, lhs);
}

/// E(t) <= E(0) exp(int_0^t K + C2 delta <xi> t) along the trajectory, plus the
/// two-sided bound C^{-1} omega^{2L} delta^2 |V|^2 <= E <= C omega^{-2L} |V|^2.
inline GronwallReport check_gronwall(const ModeTrajectory& traj, const ProblemSetup& setup)
{
    const auto& s = traj.samples;
    if (s.empty())
        fail(ErrorKind::domain, "trajectory has no samples");
    if (std::none_of(s.begin(), s.end(), [](const ModeSample& m) { return m.energy > 0.0; }))
        fail(ErrorKind::domain, "trajectory energy vanishes identically");
    GronwallReport rep;
    rep.min_nearly_diagonal = 1.0;
    double lambda_sq = 0.0;
    for (const auto& m : s) {
        rep.min_nearly_diagonal = std::min(rep.min_nearly_diagonal, m.nearly_diagonal);
        lambda_sq = std::max(lambda_sq, m.lambda1 * m.lambda1 + m.lambda2 * m.lambda2);
        if (m.energy > 0.0)
            rep.measured_commutator_constant =
                std::max(rep.measured_commutator_constant, m.commutator / (traj.delta * m.energy));
        if (!ks_condition(m.lambda1, m.lambda2))
            ++rep.ks_violations;
    }
    rep.growth_constant = 2.0 / rep.min_nearly_diagonal;
    const double e0 = s.front().energy;
    const double t0 = s.front().t;
    double cum = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0)
            cum += 0.5 * (s[i].k_integrand + s[i - 1].k_integrand) * std::abs(s[i].t - s[i - 1].t);
        const double bound = e0 * std::exp(cum + rep.growth_constant * traj.delta * traj.bracket * std::abs(s[i].t - t0));
        const double ratio = bound > 0.0 ? s[i].energy / bound : (s[i].energy > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > rep.worst_ratio) {
            rep.worst_ratio = ratio;
            rep.worst_t = s[i].t;
        }
        if (s[i].energy > bound * (1.0 + gronwall_rel_tol) + 1e-300)
            ok = false;
    }
    rep.integral_k = cum;

    const int l = setup.structure_order();
    const double w2l = std::pow(traj.omega, 2 * l);
    rep.certified_two_sided = (lambda_sq + 4.0) * w2l;
    bool two = true;
    for (const auto& m : s) {
        const double v2 = m.v.squaredNorm();
        if (v2 == 0.0)
            continue;
        const double lower = w2l * traj.delta * traj.delta * v2 / rep.certified_two_sided;
        const double upper = rep.certified_two_sided / w2l * v2;
        rep.lower_ratio = std::max(rep.lower_ratio, lower / m.energy);
        rep.upper_ratio = std::max(rep.upper_ratio, m.energy / upper);
        if (m.energy < lower * (1.0 - 1e-12) || m.energy > upper * (1.0 + 1e-12))
            two = false;
    }
    rep.two_sided_passed = two;
    rep.passed = ok && two && rep.ks_violations == 0;
    return rep;
}

struct ModeEstimateReport {
    double constant = 0.0; // smallest C making the mode estimate hold
    double worst_t = 0.0;
};

/// Smallest C with |V(t)| <= C omega^{-2L} <xi>^{k/(2 sigma)} |V(0)| exp(C omega^{-M} <xi>^{1/sigma}).
inline ModeEstimateReport check_mode_estimate(const ModeTrajectory& traj, const ProblemSetup& setup, int structure_order)
{
    const double v0 = traj.v0.norm();
    if (!(v0 > 0.0))
        fail(ErrorKind::domain, "mode estimate needs |V(0)| > 0");
    const double sigma = setup.sigma();
    const double m_exp = (3.0 * structure_order + setup.k) / setup.k;
    const double prefactor = std::pow(traj.omega, -2.0 * structure_order)
                             * std::pow(traj.bracket, setup.k / (2.0 * sigma)) * v0;
    const double b = std::pow(traj.omega, -m_exp) * std::pow(traj.bracket, 1.0 / sigma);
    ModeEstimateReport rep;
    const auto& samples = traj.samples.empty() ? traj.outputs : traj.samples;
    for (const auto& m : samples) {
        const double r = m.v.norm() / prefactor;
        if (!(r > 0.0))
            continue;
        // C e^{C b} = r  <=>  C b = W0(r b)
        const double c = boost::math::lambert_w0(r * b) / b;
        if (c > rep.constant) {
            rep.constant = c;
            rep.worst_t = m.t;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Frequency threshold R_eps
// ---------------------------------------------------------------------------

enum class ThresholdCase { gevrey, smooth_or_distribution };

struct ThresholdConstants {
    double c0 = 1.0; // data decay constant C0
    double c = 1.0;  // growth constant C
};

/// R_eps = ((C0 / 2C)^{-1} omega^{-M} [eps^{-1/s}])^{1/(1/s - 1/sigma)}.
inline double threshold_R(double omega, double eps, double s, double sigma, double m_exp, ThresholdCase which,
                          ThresholdConstants k = {})
{
    if (!(s < sigma))
        fail(ErrorKind::admissibility, "threshold needs s < sigma");
    if (!(omega > 0.0) || !(eps > 0.0))
        fail(ErrorKind::domain, "threshold needs omega > 0 and eps > 0");
    double base = std::pow(k.c0 / (2.0 * k.c), -1.0) * std::pow(omega, -m_exp);
    if (which == ThresholdCase::smooth_or_distribution)
        base *= std::pow(eps, -1.0 / s);
    return std::pow(base, 1.0 / (1.0 / s - 1.0 / sigma));
}

inline double threshold_R(const ProblemSetup& setup, double eps, ThresholdCase which, ThresholdConstants k = {})
{
    if (!(setup.s < setup.sigma()))
        fail(ErrorKind::admissibility, "threshold needs s < sigma");
    return threshold_R(setup.omega(eps), eps, setup.s, setup.sigma(), setup.growth_exponent(), which, k);
}

/// -(C0/2) w(eps) <xi>^{1/s} + C omega^{-M} <xi>^{1/sigma}; w = 1 (Gevrey) or eps^{1/s}.
inline double threshold_exponent(double br, double omega, double eps, double s, double sigma, double m_exp,
                                 ThresholdCase which, ThresholdConstants k = {})
{
    const double w = which == ThresholdCase::gevrey ? 1.0 : std::pow(eps, 1.0 / s);
    return -0.5 * k.c0 * w * std::pow(br, 1.0 / s) + k.c * std::pow(omega, -m_exp) * std::pow(br, 1.0 / sigma);
}

} // namespace vws
