#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "vws/spectral_core.hpp"

using namespace vws;
using cd = std::complex<double>;

namespace {

CoefficientAtom constant(double v) { return {Constant{v}, 1.0}; }

ProblemSetup setup_1d(std::vector<CoefficientAtom> a, std::vector<CoefficientAtom> b, double T = 1.0,
                      ScaleRule scale = ScaleRule::power(1.0, 1.0))
{
    ProblemSetup s;
    s.n = 1;
    s.T = T;
    s.a_nets.emplace_back(CoefficientSpec(std::move(a), CoefficientRole::a, 1, T), MollifierKernel(), scale);
    s.b_nets.emplace_back(CoefficientSpec(std::move(b), CoefficientRole::b, 1, T), MollifierKernel(), scale);
    s.validate();
    return s;
}

IntegratorConfig tight(std::vector<double> outs = {})
{
    IntegratorConfig c;
    c.step.rtol = 1e-11;
    c.step.atol = 1e-13;
    c.output_times = std::move(outs);
    return c;
}

} // namespace

TEST(AssembleA, Entries)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    const auto a = assemble_A(s, 0.1, 0.5, {1.0});
    EXPECT_NEAR(a.entries(1, 0), 0.5, 1e-15);
    EXPECT_EQ(a.entries(0, 0), 0.0);
    EXPECT_EQ(a.entries(0, 1), 1.0);
    EXPECT_EQ(a.entries(1, 1), 0.0);
    EXPECT_NEAR(a.bracket, std::sqrt(2.0), 1e-15);
    const auto z = assemble_A(s, 0.1, 0.5, {0.0});
    EXPECT_EQ(z.entries(1, 0), 0.0);
    EXPECT_THROW(assemble_A(s, 0.1, 1.5, {1.0}), Error);

    ProblemSetup two;
    two.n = 2;
    for (int i = 0; i < 2; ++i) {
        two.a_nets.emplace_back(CoefficientSpec({constant(i == 0 ? 1.0 : 0.0)}, CoefficientRole::a, i + 1, 1.0),
                                MollifierKernel(), ScaleRule::power(1, 1));
        two.b_nets.emplace_back(CoefficientSpec({constant(0.0)}, CoefficientRole::b, i + 1, 1.0), MollifierKernel(),
                                ScaleRule::power(1, 1));
    }
    two.validate();
    EXPECT_EQ(assemble_A(two, 0.1, 0.5, {0.0, 3.0}).entries(1, 0), 0.0);
    EXPECT_NEAR(assemble_A(two, 0.1, 0.5, {3.0, 4.0}).entries(1, 0), 9.0 / 26.0, 1e-15);
}

TEST(Setup, Admissibility)
{
    ProblemSetup s = setup_1d({constant(1.0)}, {constant(0.0)});
    s.s = 2.0;
    EXPECT_THROW(s.validate(), Error);
    s.s = 1.5;
    s.k = 4;
    EXPECT_NO_THROW(s.validate());
    s.b_nets.clear();
    EXPECT_THROW(s.validate(), Error);
}

TEST(Eigenvalues, FormulaAndVieta)
{
    const auto [l1, l2] = eigenvalues_from_terms(0.5, 0.0);
    EXPECT_NEAR(l1, -1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(l2, 1 / std::sqrt(2.0), 1e-15);
    for (double beta : {-2.0, 0.0, 3.0}) {
        const auto [a, b] = eigenvalues_from_terms(0.0, beta);
        EXPECT_EQ(a, std::min(0.0, beta));
        EXPECT_EQ(b, std::max(0.0, beta));
    }
    for (double alpha : {1e-9, 0.3, 7.0})
        for (double beta : {-5.0, -1e-7, 0.2, 4.0}) {
            const auto [a, b] = eigenvalues_from_terms(alpha, beta);
            EXPECT_LE(a, b);
            EXPECT_NEAR(a + b, beta, 1e-12 * std::max(1.0, std::abs(beta)));
            EXPECT_NEAR(a * b, -alpha, 1e-12 * std::max(1.0, alpha));
        }
    EXPECT_NO_THROW(eigenvalues_from_terms(-0.2e-14, 0.0)); // discriminant -8e-15 clamps to 0
    try {
        eigenvalues_from_terms(-1e-3, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::hyperbolicity);
    }
}

TEST(Delta, ExponentArithmetic)
{
    EXPECT_EQ(delta_of({0.0}, 2), 1.0);
    const double xi16 = std::sqrt(16.0 * 16.0 - 1.0);
    EXPECT_NEAR(delta_of({xi16}, 2), 0.25, 1e-14);
    EXPECT_NEAR(delta_of({xi16}, 2) * 16.0, 4.0, 1e-13);
    const double xi8 = std::sqrt(63.0);
    EXPECT_NEAR(delta_of({xi8}, 4), 0.25, 1e-14);
    for (int k : {2, 3, 6})
        for (double br : {1.5, 10.0, 300.0}) {
            const double xi = std::sqrt(br * br - 1);
            const double sigma = 1 + k / 2.0;
            EXPECT_NEAR(delta_of({xi}, k) * br, std::pow(br, 1 / sigma), 1e-12 * br);
        }
    EXPECT_THROW(delta_of({1.0}, 1), Error);
}

TEST(Energy, QuadraticForm)
{
    EXPECT_NEAR(energy_of(Vec2c(1, 0), {0, 0}, 1), 2.0, 1e-15);
    EXPECT_NEAR(energy_of(Vec2c(1, 1), {1, 2}, 1), 3.0, 1e-15);
    EXPECT_EQ(energy_of(Vec2c(0, 0), {1, 2}, 1), 0.0);
    const Vec2c v(cd(0.3, -1.1), cd(2.0, 0.4));
    const auto q = build_Q2(-0.4, 1.7, 0.6).matrix;
    const cd ref = v.dot(q.cast<cd>() * v); // dot conjugates its left operand
    EXPECT_NEAR(energy_of(v, {-0.4, 1.7}, 0.6), ref.real(), 1e-13);
}

TEST(IntegrateMode, PlaneWaveOracle)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    for (double xi : {0.5, 3.0, 20.0}) {
        const double br = std::sqrt(1 + xi * xi);
        const auto traj = integrate_mode(s, 0.1, {xi}, Vec2c(br, 0.0), tight({0.25, 0.5, 1.0}));
        ASSERT_EQ(traj.outputs.size(), 3u);
        for (const auto& o : traj.outputs) {
            // u = cos(xi t), V = (<xi> u, D_t u)
            const Vec2c expect(br * std::cos(xi * o.t), cd(0.0, xi * std::sin(xi * o.t)));
            EXPECT_LT((o.v - expect).norm(), 1e-8 * br) << xi << " " << o.t;
        }
        EXPECT_EQ(traj.samples.front().t, 0.0);
        for (const auto& m : traj.samples)
            EXPECT_GE(m.energy, 0.0);
    }
}

TEST(IntegrateMode, FixedStepOrder)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    const double xi = 3.0, br = std::sqrt(10.0);
    const auto max_err = [&](double h) {
        IntegratorConfig c;
        c.step.rtol = 1e3;
        c.step.atol = 1e3;
        c.h_max = h;
        c.output_times = {0.25, 0.5, 0.75, 1.0};
        const auto traj = integrate_mode(s, 0.1, {xi}, Vec2c(br, 0.0), c);
        double e = 0.0;
        for (const auto& o : traj.outputs)
            e = std::max(e, (o.v - Vec2c(br * std::cos(xi * o.t), cd(0.0, xi * std::sin(xi * o.t)))).norm());
        return e;
    };
    const double e1 = max_err(0.02), e2 = max_err(0.01);
    EXPECT_GT(e1 / e2, std::pow(2.0, 3.5)) << e1 << " " << e2;
}

TEST(IntegrateMode, Reversibility)
{
    const auto s = setup_1d({{Heaviside{0.2, 0.6}, 1.0}, {Dirac{0.8}, 0.3}}, {constant(0.2)});
    const Vec2c v0(cd(1.0, 0.2), cd(0.5, -0.4));
    const auto cfg = tight();
    const auto fwd = integrate_mode(s, 1.0 / 16, {4.0}, v0, cfg);
    const Vec2c vt = fwd.samples.back().v;
    const auto back = integrate_mode(s, 1.0 / 16, {4.0}, vt, cfg, s.T, 0.0);
    EXPECT_EQ(back.samples.back().t, 0.0);
    EXPECT_LT((back.samples.back().v - v0).norm(), 10 * cfg.step.rtol * std::max(1.0, vt.norm()) * 100);
}

TEST(IntegrateMode, DiracKickIsLocalised)
{
    const auto s = setup_1d({{Dirac{0.5}, 1.0}}, {constant(0.0)});
    const double eps = 0.05, w = eps, xi = 2.0, br = std::sqrt(5.0);
    const Vec2c v0(1.0, cd(0.0, 0.3));
    const auto traj = integrate_mode(s, eps, {xi}, v0, tight({0.5 - w, 0.5 + w, 0.8, 1.0}));
    ASSERT_EQ(traj.outputs.size(), 4u);
    // free evolution V(t) = (V1 + i <xi> (t - t') V2, V2) outside the spike window
    const auto free = [&](const Vec2c& v, double dt) { return Vec2c(v[0] + cd(0, br * dt) * v[1], v[1]); };
    EXPECT_LT((traj.outputs[0].v - free(v0, 0.5 - w)).norm(), 1e-9);
    const Vec2c after = traj.outputs[1].v;
    EXPECT_LT((traj.outputs[2].v - free(after, 0.3 - w)).norm(), 1e-9);
    EXPECT_LT((traj.outputs[3].v - free(after, 0.5 - w)).norm(), 1e-9);
    // the spike changes V2
    EXPECT_GT(std::abs(after[1] - v0[1]), 1e-3);
}

TEST(IntegrateMode, NonFiniteInputRejected)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    EXPECT_THROW(integrate_mode(s, 0.1, {1.0}, Vec2c(NAN, 0.0), tight()), Error);
}

TEST(IntegrateMode, StepUnderflowReportsDiagnostics)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    IntegratorConfig c = tight();
    c.step.max_steps = 10;
    try {
        integrate_mode(s, 0.1, {5.0}, Vec2c(1.0, 0.0), c);
        FAIL();
    } catch (const StiffnessError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::stiffness);
        EXPECT_NEAR(e.bracket(), std::sqrt(26.0), 1e-12);
    }
}

TEST(Gronwall, PassesOnSmoothHeavisideAndDirac)
{
    SmoothSample sm;
    sm.value = [](double t) { return std::pow(1 + t * t, 2); };
    sm.lo = -1.0;
    sm.hi = 2.0;
    const std::vector<ProblemSetup> setups{
        setup_1d({{sm, 1.0}}, {constant(0.3)}),
        setup_1d({{Heaviside{0.2, 0.6}, 1.0}}, {constant(0.0)}),
        setup_1d({{Dirac{0.5}, 1.0}}, {{Dirac{0.3}, 0.5}}),
    };
    for (const auto& s : setups)
        for (double eps : {1.0 / 16, 1.0 / 64})
            for (double xi : {0.0, 1.0, 8.0, 30.0}) {
                const auto traj = integrate_mode(s, eps, {xi}, Vec2c(std::sqrt(1 + xi * xi), cd(0, 0.5)), tight());
                const auto rep = check_gronwall(traj, s);
                EXPECT_TRUE(rep.passed) << xi << " ratio " << rep.worst_ratio << " two-sided " << rep.two_sided_passed;
                EXPECT_LE(rep.worst_ratio, 1.0 + 1e-8);
                EXPECT_GE(rep.min_nearly_diagonal, 0.125 - 1e-12);
                EXPECT_EQ(rep.ks_violations, 0u);
                EXPECT_LE(rep.measured_commutator_constant, rep.growth_constant + 1e-12);
            }
}

TEST(Gronwall, ConstantCoefficientsHaveZeroK)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.4)});
    const auto traj = integrate_mode(s, 0.1, {5.0}, Vec2c(1.0, 0.0), tight());
    const auto rep = check_gronwall(traj, s);
    EXPECT_EQ(rep.integral_k, 0.0);
    EXPECT_TRUE(rep.passed);
}

TEST(Gronwall, HeavisideKConcentratedAtJumps)
{
    const auto s = setup_1d({{Heaviside{0.2, 0.6}, 1.0}}, {constant(0.0)});
    const double eps = 1.0 / 32;
    const auto traj = integrate_mode(s, eps, {6.0}, Vec2c(1.0, 0.0), tight());
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
        const auto& a = traj.samples[i - 1];
        const auto& b = traj.samples[i];
        const double piece = 0.5 * (a.k_integrand + b.k_integrand) * (b.t - a.t);
        total += piece;
        const double tm = 0.5 * (a.t + b.t);
        if (std::abs(tm - 0.2) <= eps || std::abs(tm - 0.6) <= eps)
            inside += piece;
    }
    EXPECT_GT(total, 0.0);
    EXPECT_TRUE(std::isfinite(total));
    EXPECT_NEAR(inside, total, 1e-9 * total);
}

TEST(ModeEstimate, ConstantAndPrecondition)
{
    const auto s = setup_1d({constant(1.0)}, {constant(0.0)});
    const auto traj = integrate_mode(s, 0.1, {3.0}, Vec2c(1.0, 0.0), tight());
    const auto rep = check_mode_estimate(traj, s, 0);
    EXPECT_GT(rep.constant, 0.0);
    // |V(t)| <= |V0| max(<xi>, ...) for the plane wave; the estimate cannot need more than that
    EXPECT_LT(rep.constant, 2.0);
    const auto zero = integrate_mode(s, 0.1, {3.0}, Vec2c(0.0, 0.0), tight());
    EXPECT_THROW(check_mode_estimate(zero, s, 0), Error);
}

TEST(Threshold, UnitBaseAndSignFlip)
{
    ProblemSetup s = setup_1d({constant(1.0)}, {constant(0.0)}, 1.0, ScaleRule::power(1.0, 0.0));
    EXPECT_NEAR(threshold_R(s, 0.1, ThresholdCase::gevrey, {2.0, 1.0}), 1.0, 1e-14);

    const double sigma = 2.0, s_ord = 1.5, m_exp = 2.5;
    for (auto which : {ThresholdCase::gevrey, ThresholdCase::smooth_or_distribution})
        for (int j = 4; j <= 12; ++j) {
            const double eps = std::ldexp(1.0, -j), w = omega_of(ScaleRule::log(1.0, 0.1), eps);
            const double r = threshold_R(w, eps, s_ord, sigma, m_exp, which);
            const double lo = threshold_exponent(0.99 * r, w, eps, s_ord, sigma, m_exp, which);
            const double hi = threshold_exponent(1.01 * r, w, eps, s_ord, sigma, m_exp, which);
            EXPECT_GT(lo, 0.0);
            EXPECT_LT(hi, 0.0);
        }
    // 1/s - 1/sigma = 1/6: R scales as omega^{-6M}
    const double r1 = threshold_R(0.5, 0.1, 1.5, 2.0, 2.5, ThresholdCase::gevrey);
    const double r2 = threshold_R(0.25, 0.1, 1.5, 2.0, 2.5, ThresholdCase::gevrey);
    EXPECT_NEAR(r2 / r1, std::pow(2.0, 6 * 2.5), 1e-9 * r2 / r1);
    EXPECT_THROW(threshold_R(0.5, 0.1, 2.0, 2.0, 2.5, ThresholdCase::gevrey), Error);
}

TEST(IntegrateMode, ZeroFrequencyNilpotent)
{
    const auto s = setup_1d({constant(2.0)}, {constant(0.5)});
    const Vec2c v0(cd(1.0, 0.5), cd(-0.3, 2.0));
    const auto traj = integrate_mode(s, 0.1, {0.0}, v0, tight({0.7}));
    ASSERT_EQ(traj.outputs.size(), 1u);
    const Vec2c expect(v0[0] + cd(0, 0.7) * v0[1], v0[1]);
    EXPECT_LT((traj.outputs[0].v - expect).norm(), 1e-12);
}
