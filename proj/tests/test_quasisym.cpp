#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "vws/quasisym.hpp"

using namespace vws;

namespace {

/// Random roots of tau^2 - b tau - a with a >= 0 (always in S_2).
std::pair<double, double> hyperbolic_roots(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ua(0.0, 4.0), ub(-3.0, 3.0);
    const double a = ua(rng), b = ub(rng);
    const double r = std::sqrt(b * b + 4 * a);
    return {0.5 * (b - r), 0.5 * (b + r)};
}

double closed_form_entry(double l1, double l2, double d, int i, int j)
{
    if (i == 0 && j == 0)
        return l1 * l1 + l2 * l2 + 2 * d * d;
    if (i == 1 && j == 1)
        return 2.0;
    return -(l1 + l2);
}

std::vector<std::vector<double>> to_rows(const Matrix& m)
{
    std::vector<std::vector<double>> r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return r;
}

} // namespace

TEST(ElemSym, ExpansionAndSigns)
{
    EXPECT_DOUBLE_EQ(elem_sym(Spectrum{1, 2}, 1), -3.0);
    EXPECT_DOUBLE_EQ(elem_sym(Spectrum{1, 2}, 2), 2.0);
    EXPECT_DOUBLE_EQ(elem_sym(Spectrum{0, 0, 0}, 2), 0.0);
    const std::vector<double> l{0.3, -1.2, 2.5, 0.7};
    for (int h = 1; h <= 4; ++h)
        EXPECT_NEAR(elem_sym(Spectrum(l), h), (h % 2 ? -1.0 : 1.0) * oracle::elementary(l, h), 1e-13);
    EXPECT_THROW(elem_sym(Spectrum{1, 2}, 0), Error);
    EXPECT_THROW(elem_sym(Spectrum{1, 2}, 3), Error);
}

TEST(BuildP, SmallCases)
{
    EXPECT_EQ(build_P(Spectrum{7.0}), Matrix::Identity(1, 1));
    Matrix expect(2, 2);
    expect << 1, 0, -5, 1;
    EXPECT_EQ(build_P(Spectrum{5.0, 123.0}), expect);
    EXPECT_EQ(build_P(Spectrum{0.0, 4.0}), Matrix::Identity(2, 2));
    // last row: (sigma_{m-1}(l'), ..., sigma_1(l'), 1) with l' = leading m-1 roots
    const std::vector<double> l{0.4, -1.1, 2.0, 9.0};
    const Matrix p = build_P(Spectrum(l));
    const std::vector<double> lead(l.begin(), l.end() - 1);
    for (int j = 0; j < 3; ++j) {
        const int h = 3 - j;
        EXPECT_NEAR(p(3, j), (h % 2 ? -1.0 : 1.0) * oracle::elementary(lead, h), 1e-13);
    }
    EXPECT_EQ(p(3, 3), 1.0);
}

TEST(BuildQ, GeneralMatchesClosedForm)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ud(1e-3, 1.0);
    for (int n = 0; n < 1000; ++n) {
        const auto [l1, l2] = hyperbolic_roots(rng);
        const double d = ud(rng);
        const Matrix g = build_Q_general(Spectrum{l1, l2}, d).matrix;
        const Matrix c = build_Q2(l1, l2, d).matrix;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double ref = closed_form_entry(l1, l2, d, i, j);
                EXPECT_NEAR(g(i, j), ref, 1e-13 * std::max(1.0, std::abs(ref)));
                EXPECT_EQ(c(i, j), ref);
            }
    }
    Matrix two(2, 2);
    two << 2, 0, 0, 2;
    EXPECT_EQ(build_Q2(0, 0, 1).matrix, two);
    Matrix a(2, 2), b(2, 2);
    a << 4, 0, 0, 2;
    b << 7, -3, -3, 2;
    EXPECT_EQ(build_Q2(1, -1, 1).matrix, a);
    EXPECT_EQ(build_Q2(1, 2, 1).matrix, b);
    EXPECT_THROW(build_Q_general(Spectrum{1, 2, 3, 4, 5, 6, 7}, 0.5), Error);
}

TEST(Companion, RootsAndExamples)
{
    Matrix2 e;
    e << 0, 1, 1, 0;
    EXPECT_EQ(companion_of(1, -1), e);
    e << 0, 1, 0, 0;
    EXPECT_EQ(companion_of(0, 0), e);
    const Matrix2 c = companion_of(-0.7, 2.3);
    const Eigen::EigenSolver<Matrix2> es(c);
    std::vector<double> ev{es.eigenvalues()(0).real(), es.eigenvalues()(1).real()};
    std::sort(ev.begin(), ev.end());
    EXPECT_NEAR(ev[0], -0.7, 1e-12);
    EXPECT_NEAR(ev[1], 2.3, 1e-12);
    // general Sylvester form has the prescribed characteristic roots
    const Matrix s = companion_of(Spectrum{-1.0, 0.5, 2.0});
    const Eigen::EigenSolver<Matrix> gs(s);
    std::vector<double> g;
    for (int i = 0; i < 3; ++i)
        g.push_back(gs.eigenvalues()(i).real());
    std::sort(g.begin(), g.end());
    EXPECT_NEAR(g[0], -1.0, 1e-10);
    EXPECT_NEAR(g[1], 0.5, 1e-10);
    EXPECT_NEAR(g[2], 2.0, 1e-10);
}

TEST(Commutator, ExactIdentity)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ud(1e-3, 1.0);
    for (int n = 0; n < 1000; ++n) {
        const auto [l1, l2] = hyperbolic_roots(rng);
        const double d = ud(rng);
        const Matrix2 c = commutator_Q2(Spectrum{l1, l2}, d);
        EXPECT_NEAR(c(0, 0), 0.0, 1e-14);
        EXPECT_NEAR(c(1, 1), 0.0, 1e-14);
        EXPECT_NEAR(c(0, 1), 2 * d * d, 1e-14);
        EXPECT_NEAR(c(1, 0), -2 * d * d, 1e-14);
    }
    const Matrix2 c = commutator_Q2(Spectrum{1, 2}, 0.5);
    EXPECT_NEAR(c(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(commutator_Q2(Spectrum{1, 2}, 0.0).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(NearlyDiagonal, ConstantsAndFloor)
{
    EXPECT_NEAR(*nearly_diagonal_constant(Matrix(Matrix::Identity(3, 3))), 1.0, 1e-14);
    Matrix ones(2, 2);
    ones << 1, 1, 1, 1;
    EXPECT_NEAR(*nearly_diagonal_constant(ones), 0.0, 1e-14);
    EXPECT_FALSE(nearly_diagonal_constant(Matrix(Matrix::Zero(2, 2))).has_value());
    Matrix partial(2, 2);
    partial << 0, 0, 0, 2;
    EXPECT_NEAR(*nearly_diagonal_constant(partial), 1.0, 1e-14);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(1e-4, 1.0);
    for (int n = 0; n < 1000; ++n) {
        const auto [l1, l2] = hyperbolic_roots(rng);
        const double d = ud(rng);
        const auto c0 = nearly_diagonal_constant(build_Q2(l1, l2, d));
        ASSERT_TRUE(c0.has_value());
        EXPECT_GE(*c0, 0.125 - 1e-12);
        // cross-check against min eigenvalue of D^{-1/2} Q D^{-1/2}
        const double q11 = closed_form_entry(l1, l2, d, 0, 0), q12 = -(l1 + l2);
        const double off = q12 / std::sqrt(2 * q11);
        EXPECT_NEAR(*c0, 1 - std::abs(off), 1e-13);
    }
}

TEST(SM, Membership)
{
    EXPECT_TRUE(in_S_M(Spectrum{1, -1}, 2));
    EXPECT_FALSE(in_S_M(Spectrum{1, 1}, 2));
    EXPECT_FALSE(in_S_M(Spectrum{1, 1}, 100));
    std::mt19937_64 rng(9);
    for (int n = 0; n < 1000; ++n) {
        const auto [l1, l2] = hyperbolic_roots(rng);
        EXPECT_TRUE(in_S_M(Spectrum{l1, l2}, 2));
    }
}

TEST(QuasisymProperties, ItemsPassOnExamples)
{
    const auto rep = check_prop31(Spectrum{1, 2}, 0.3, 1e-10);
    for (const auto& item : rep.items)
        EXPECT_TRUE(item.passed) << item.id << " " << item.measured;
    EXPECT_EQ(rep.items.size(), 7u);

    const auto r3 = check_prop31(Spectrum{0, 1, 2}, 0.5, 1e-10);
    EXPECT_TRUE(r3.all_passed());
    const QuasiSym q3 = build_Q_general(Spectrum{0, 1, 2}, 0.5);
    EXPECT_NEAR(oracle::det(to_rows(q3.decomposition[0])), 32.0, 1e-9); // 2!^3 * 1 * 4 * 1

    const auto r0 = check_prop31(Spectrum{0, 0}, 0.5, 1e-10);
    EXPECT_TRUE(r0.item("vi").passed);
    EXPECT_NEAR(build_Q_general(Spectrum{0, 0}, 0.5).decomposition[0].determinant(), 0.0, 1e-14);
}

TEST(QuasisymProperties, RandomHyperbolicSpectra)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ud(1e-3, 1.0);
    for (int n = 0; n < 1000; ++n) {
        const auto [l1, l2] = hyperbolic_roots(rng);
        const auto rep = check_prop31(Spectrum{l1, l2}, ud(rng), 1e-10);
        for (const auto& item : rep.items)
            ASSERT_TRUE(item.passed) << item.id << " " << item.measured << " at " << l1 << "," << l2;
        EXPECT_NEAR(rep.diagonal_product_ratio, 2.0, 1e-12);
    }
}

TEST(QuasisymProperties, DeterminantFormulaHigherOrder)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ul(-2.0, 2.0);
    for (int m = 2; m <= 4; ++m) {
        double fact = 1;
        for (int i = 2; i < m; ++i)
            fact *= i;
        fact = std::pow(fact, m);
        for (int n = 0; n < 50; ++n) {
            std::vector<double> l;
            for (int i = 0; i < m; ++i)
                l.push_back(ul(rng) + 3.0 * i); // well separated roots
            double prod = 1.0;
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j)
                    prod *= (l[i] - l[j]) * (l[i] - l[j]);
            const double det = static_cast<double>(oracle::det_q0(l));
            EXPECT_NEAR(det / (fact * prod), 1.0, 1e-10) << m;
            EXPECT_NEAR(det_Q0_expected(Spectrum(l)) / det, 1.0, 1e-10) << m;
            EXPECT_TRUE(check_prop31(Spectrum(l), 0.4, 1e-10).all_passed()) << m;
        }
    }
}
