#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "vws/cauchy_data.hpp"

using namespace vws;
using cd = std::complex<double>;

namespace {

double gevrey_profile(double x, double s) { return std::abs(x) < 1 ? std::exp(-std::pow(1 - x * x, -1 / (s - 1))) : 0.0; }

double step(double u)
{
    if (u <= 0)
        return 0;
    if (u >= 1)
        return 1;
    return 1 / (1 + std::exp(1 / u - 1 / (1 - u)));
}

DataSpec gevrey(double s, double c = 0.0, double w = 1.0)
{
    return {GevreyBump{s, {c}, w}, RegularityCase::gevrey, 1.0};
}

} // namespace

TEST(FourierOf, DiracAtoms)
{
    const auto d0 = fourier_of({DiracPoint{{0.0}}, RegularityCase::distribution, 1.0});
    for (double xi : {-5.0, 0.0, 3.3})
        EXPECT_NEAR(std::abs(d0({xi}) - cd(1, 0)), 0.0, 1e-15);
    const auto d1 = fourier_of({DiracPoint{{0.7}}, RegularityCase::distribution, 2.0});
    EXPECT_NEAR(std::abs(d1({3.0}) - 2.0 * std::exp(cd(0, -2.1))), 0.0, 1e-14);
    const auto dd = fourier_of({DiracDerivative{{0.7, 0.0}, 1}, RegularityCase::distribution, 1.0});
    EXPECT_NEAR(std::abs(dd({1.0, 2.0}) - cd(0, 2.0) * std::exp(cd(0, -0.7))), 0.0, 1e-14);
    EXPECT_THROW(fourier_of({DiracPoint{{0.0}}, RegularityCase::gevrey, 1.0}), Error);
}

TEST(FourierOf, GevreyBumpMatchesDirectQuadrature)
{
    const auto spec = gevrey(1.5, 0.4, 0.8);
    const auto f = fourier_of(spec);
    for (double xi : {0.0, 1.0, 7.5, 20.0, -13.0}) {
        const double re = oracle::simpson([&](double x) { return gevrey_profile((x - 0.4) / 0.8, 1.5) * std::cos(x * xi); }, -0.4, 1.2, 40000);
        const double im = oracle::simpson([&](double x) { return -gevrey_profile((x - 0.4) / 0.8, 1.5) * std::sin(x * xi); }, -0.4, 1.2, 40000);
        EXPECT_NEAR(std::abs(f({xi}) - cd(re, im)), 0.0, 1e-11) << xi;
        // Hermitian symmetry
        EXPECT_NEAR(std::abs(f({-xi}) - std::conj(f({xi}))), 0.0, 1e-15);
    }
}

TEST(FourierOf, TwoDimensionalRadialBump)
{
    const DataSpec spec{GevreyBump{1.5, {0.0, 0.0}, 1.0}, RegularityCase::gevrey, 1.0};
    const auto f = fourier_of(spec);
    // xi = 0: mass 2 pi int_0^1 g(r) r dr
    const double mass = 2 * std::numbers::pi * oracle::simpson([](double r) { return gevrey_profile(r, 1.5) * r; }, 0, 1);
    EXPECT_NEAR(f({0.0, 0.0}).real(), mass, 1e-12);
    // rotation invariance
    EXPECT_NEAR(std::abs(f({3.0, 4.0}) - f({5.0, 0.0})), 0.0, 1e-13);
}

TEST(FourierOf, SmoothBumpDecaysFasterThanPolynomials)
{
    const auto f = fourier_of({SmoothBump{{0.0}, 1.0}, RegularityCase::smooth, 1.0});
    // envelope over a window to step over zeros of the transform
    auto envelope = [&](double xi) {
        double env = 0.0;
        for (double d = 0; d < 6.3; d += 0.05)
            env = std::max(env, std::abs(f({xi + d})));
        return env;
    };
    // local power-law exponent keeps growing: no fixed polynomial rate captures the decay
    double prev_rate = 0.0;
    double prev_env = envelope(50.0);
    for (double xi : {100.0, 200.0, 400.0}) {
        const double env = envelope(xi);
        const double rate = std::log2(prev_env / env);
        EXPECT_GT(rate, prev_rate + 1.0) << xi;
        prev_rate = rate;
        prev_env = env;
    }
    EXPECT_GT(prev_rate, 9.0);
}

TEST(Mollifier, PhiAndCutoffs)
{
    const GevreyMollifier m;
    EXPECT_NEAR(m.phi1(0.0), 1.5 / std::numbers::pi, 1e-14);
    for (double y : {0.5, 3.0, 11.0, 37.0}) {
        const double ref = (std::sin(y) / y + oracle::simpson([&](double t) { return step(2 - t) * std::cos(y * t); }, 1, 2, 20000)) / std::numbers::pi;
        EXPECT_NEAR(m.phi1(y), ref, 1e-13) << y;
        EXPECT_NEAR(m.phi1_derivative(y), oracle::diff([&](double u) { return m.phi1(u); }, y, 1e-3), 1e-10) << y;
    }
    EXPECT_EQ(GevreyMollifier::chi(1.5), 1.0);
    EXPECT_EQ(GevreyMollifier::chi(2.0), 0.0);
    EXPECT_GT(GevreyMollifier::chi(1.75), 0.0);
    EXPECT_LT(GevreyMollifier::chi(1.75), 1.0);
    EXPECT_EQ(GevreyMollifier::plateau(0.9), 1.0);
    EXPECT_EQ(GevreyMollifier::plateau(2.1), 0.0);
}

TEST(Mollifier, PhiMomentsVanish)
{
    // trapezoid on the band-limited table; Poisson summation makes this exact up to the tail
    const GevreyMollifier m;
    const auto& tab = m.phi_table();
    const double h = GevreyMollifier::table_step;
    // y^4 weighting amplifies the slow tail past the table extent, so the real-space check stops at 3
    for (int a = 0; a <= 3; ++a) {
        double s = a == 0 ? tab[0] : 0.0;
        for (std::size_t j = 1; j < tab.size(); ++j) {
            const double y = h * static_cast<double>(j);
            s += tab[j] * (std::pow(y, a) + std::pow(-y, a));
        }
        s *= h;
        EXPECT_NEAR(s, a == 0 ? 1.0 : 0.0, 1e-8) << a;
    }
    // flat transform near the origin: every moment vanishes
    for (double xi : {0.0, 0.1, 0.3, 0.6, 0.9}) {
        double s = tab[0];
        for (std::size_t j = 1; j < tab.size(); ++j)
            s += 2.0 * tab[j] * std::cos(xi * h * static_cast<double>(j));
        EXPECT_NEAR(s * h, 1.0, 1e-12) << xi;
    }
}

TEST(Mollifier, RhoValuesSupportAndMass)
{
    const GevreyMollifier m;
    for (double eps : {0.5, 1.0 / 16, 1.0 / 1024}) {
        EXPECT_NEAR(m.rho(eps, {0.0}), m.phi1(0.0) / eps, 1e-12 / eps);
        const double cut = 2.0 / std::abs(std::log(eps));
        EXPECT_EQ(m.rho(eps, {cut * 1.0001}), 0.0);
        EXPECT_EQ(m.rho(eps, {-cut * 1.0001}), 0.0);
    }
    EXPECT_THROW(m.rho(0.6, {0.0}), Error);
    double prev = INFINITY;
    for (int j = 4; j <= 10; j += 2) {
        const double eps = std::ldexp(1.0, -j);
        const double cut = 2.0 / std::abs(std::log(eps));
        const double mass = oracle::simpson([&](double x) { return m.rho(eps, {x}); }, -cut, cut, 400000);
        const double gap = std::abs(1.0 - mass);
        EXPECT_LT(gap, prev) << j;
        prev = gap;
        // Fourier side agrees at xi = 0
        EXPECT_NEAR(m.rho_hat(eps, {0.0}).real(), mass, 1e-8) << j;
    }
    EXPECT_LT(prev, 1e-8);
}

TEST(Mollifier, RhoHatMatchesQuadrature)
{
    const GevreyMollifier m;
    const double eps = 1.0 / 16;
    const double cut = 2.0 / std::abs(std::log(eps));
    for (double xi : {0.0, 5.0, 30.0, 90.0}) {
        const double ref = oracle::simpson([&](double x) { return m.rho(eps, {x}) * std::cos(x * xi); }, -cut, cut, 400000);
        EXPECT_NEAR(m.rho_hat(eps, {xi}).real(), ref, 1e-9) << xi;
    }
}

TEST(Mollifier, RhoDerivative)
{
    const GevreyMollifier m;
    const double eps = 1.0 / 32;
    for (double x : {0.0, 0.01, -0.05, 0.3, 0.45})
        EXPECT_NEAR(m.rho_derivative(eps, {x}, 0), oracle::diff([&](double u) { return m.rho(eps, {u}); }, x, 1e-5),
                    1e-6 * std::max(1.0, std::abs(m.rho_derivative(eps, {x}, 0))))
            << x;
}

TEST(Regularize, CasesOneTwoThree)
{
    const GevreyMollifier m;
    std::vector<Point> grid;
    for (int i = 0; i < 201; ++i)
        grid.push_back({-2.0 + 4.0 * i / 200});
    // Gevrey case is the identity for every eps
    const auto g = gevrey(1.5);
    const auto a = regularize_data(g, m, 0.25, grid), b = regularize_data(g, m, 1.0 / 1024, grid);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(a[100], std::exp(-1.0), 1e-15);

    // Dirac: exact rho_eps(. - x0); peak eps^{-1} phi(0)
    const DataSpec d{DiracPoint{{0.0}}, RegularityCase::distribution, 1.0};
    for (double eps : {1.0 / 16, 1.0 / 256}) {
        const auto v = regularize_data(d, m, eps, {{0.0}, {0.1}});
        EXPECT_NEAR(v[0], m.phi1(0) / eps, 1e-12 / eps);
        EXPECT_NEAR(v[1], m.rho(eps, {0.1}), 1e-15);
    }

    // Smooth case: g * rho_eps -> g super-polynomially
    const DataSpec sm{SmoothBump{{0.0}, 1.0}, RegularityCase::smooth, 1.0};
    double prev = INFINITY;
    for (int j = 4; j <= 8; ++j) {
        const double eps = std::ldexp(1.0, -j);
        const auto v = regularize_data(sm, m, eps, grid);
        double err = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            err = std::max(err, std::abs(v[i] - data_value(sm, grid[i])));
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-6);
}

TEST(Regularize, FourierOfRegularisationIsProduct)
{
    const GevreyMollifier m;
    const DataSpec sm{SmoothBump{{0.3}, 1.0}, RegularityCase::smooth, 1.0};
    const auto f = regularized_fourier(sm, m, 1.0 / 16);
    std::vector<Point> grid;
    const int n = 4001;
    for (int i = 0; i < n; ++i)
        grid.push_back({-1.5 + 3.6 * i / (n - 1)});
    const auto v = regularize_data(sm, m, 1.0 / 16, grid);
    for (double xi : {0.0, 2.0, 9.0}) {
        cd ref = 0;
        const double h = 3.6 / (n - 1);
        for (int i = 0; i < n; ++i)
            ref += (i == 0 || i == n - 1 ? 0.5 : 1.0) * h * v[static_cast<std::size_t>(i)] * std::exp(cd(0, -grid[static_cast<std::size_t>(i)][0] * xi));
        EXPECT_NEAR(std::abs(f({xi}) - ref), 0.0, 1e-8) << xi;
    }
}

TEST(InitialModeVector, Components)
{
    FourierDatum one{[](const Frequency&) { return cd(1, 0); }};
    FourierDatum zero{[](const Frequency&) { return cd(0, 0); }};
    const auto v = initial_mode_vector(one, zero, {0.0});
    EXPECT_EQ(v[0], cd(1, 0));
    EXPECT_EQ(v[1], cd(0, 0));
    EXPECT_EQ(initial_mode_vector(zero, one, {5.0})[0], cd(0, 0));
    EXPECT_NEAR(std::abs(initial_mode_vector(one, one, {std::sqrt(3.0)})[0] - cd(2, 0)), 0.0, 1e-15);
}
