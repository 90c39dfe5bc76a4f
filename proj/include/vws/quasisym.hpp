#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace vws {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Matrix2 = Eigen::Matrix2d;

/// Real spectrum lambda = (lambda_1, ..., lambda_m).
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(std::initializer_list<double> v) : values_(v) { validate(); }
    explicit Spectrum(std::vector<double> v) : values_(std::move(v)) { validate(); }

    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& values() const { return values_; }

    /// pi_i lambda: drop entry i (0-based).
    Spectrum without(int i) const
    {
        std::vector<double> v;
        v.reserve(values_.size() - 1);
        for (int j = 0; j < size(); ++j)
            if (j != i)
                v.push_back(values_[j]);
        return Spectrum(std::move(v));
    }

    /// lambda' = (lambda_1, ..., lambda_{m-1}).
    Spectrum leading() const { return without(size() - 1); }

    Spectrum permuted(const std::vector<int>& rho) const
    {
        std::vector<double> v(values_.size());
        for (std::size_t j = 0; j < rho.size(); ++j)
            v[j] = values_[static_cast<std::size_t>(rho[j])];
        return Spectrum(std::move(v));
    }

private:
    void validate() const
    {
        for (double x : values_)
            if (!std::isfinite(x))
                fail(ErrorKind::domain, "spectrum entries must be finite");
    }

    std::vector<double> values_;
};

inline constexpr int quasisym_size_cap = 6;

namespace detail {

/// e_0..e_m of lambda (unsigned elementary symmetric polynomials).
inline std::vector<double> elementary(const Spectrum& lambda)
{
    const int m = lambda.size();
    std::vector<double> e(static_cast<std::size_t>(m) + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < m; ++i)
        for (int h = i + 1; h >= 1; --h)
            e[h] += lambda[i] * e[h - 1];
    return e;
}

inline double signed_elementary(const std::vector<double>& e, int h)
{
    return (h % 2 == 0 ? 1.0 : -1.0) * e[static_cast<std::size_t>(h)];
}

inline double factorial(int n)
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

inline double min_eigenvalue(const Matrix& q)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& q)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

} // namespace detail

/// sigma_h^{(m)}(lambda) = (-1)^h sum_{i_1<...<i_h} lambda_{i_1} ... lambda_{i_h}.
inline double elem_sym(const Spectrum& lambda, int h)
{
    if (h < 1 || h > lambda.size())
        fail(ErrorKind::domain, "elem_sym needs 1 <= h <= m, got h=" + std::to_string(h));
    return detail::signed_elementary(detail::elementary(lambda), h);
}

/// m x m Sylvester (companion) matrix with characteristic roots lambda.
inline Matrix companion_of(const Spectrum& lambda)
{
    const int m = lambda.size();
    Matrix a = Matrix::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i)
        a(i, i + 1) = 1.0;
    const auto e = detail::elementary(lambda);
    for (int j = 0; j < m; ++j)
        a(m - 1, j) = -detail::signed_elementary(e, m - j);
    return a;
}

inline Matrix2 companion_of(double lambda1, double lambda2)
{
    Matrix2 a;
    a << 0.0, 1.0, -lambda1 * lambda2, lambda1 + lambda2;
    return a;
}

/// Recursive block matrix P^{(m)}(lambda); depends on lambda' only.
inline Matrix build_P(const Spectrum& lambda)
{
    const int m = lambda.size();
    if (m < 1)
        fail(ErrorKind::domain, "build_P needs m >= 1");
    Matrix p = Matrix::Zero(m, m);
    if (m == 1) {
        p(0, 0) = 1.0;
        return p;
    }
    const Spectrum lead = lambda.leading();
    p.topLeftCorner(m - 1, m - 1) = build_P(lead);
    const auto e = detail::elementary(lead);
    for (int j = 0; j < m - 1; ++j)
        p(m - 1, j) = detail::signed_elementary(e, m - 1 - j);
    p(m - 1, m - 1) = 1.0;
    return p;
}

/// Quasi-symmetriser with its spectrum and delta attached.
struct QuasiSym {
    Matrix matrix;
    double delta = 1.0;
    Spectrum spectrum;
    /// Q_0, Q_1, ..., Q_{m-1} with Q = sum_j delta^{2j} Q_j (only from build_Q_general).
    std::vector<Matrix> decomposition;
};

namespace detail {

inline void check_delta(double delta)
{
    if (!(delta >= 0.0 && delta <= 1.0))
        fail(ErrorKind::domain, "delta must lie in (0, 1], got " + std::to_string(delta));
}

inline void for_each_permutation(int m, const auto& fn)
{
    std::vector<int> rho(static_cast<std::size_t>(m));
    std::iota(rho.begin(), rho.end(), 0);
    do {
        fn(rho);
    } while (std::next_permutation(rho.begin(), rho.end()));
}

} // namespace detail

/// Q_delta^{(m)}(lambda) = sum over permutations of P_delta(lambda_rho)^* P_delta(lambda_rho),
/// P_delta = H_delta P with H_delta = diag(delta^{m-1}, ..., delta, 1).
///
/// The decomposition Q_j collects the rows of P weighted by delta^{2j}; each
/// term is a sum of rank-one Gram matrices.
inline QuasiSym build_Q_general(const Spectrum& lambda, double delta)
{
    detail::check_delta(delta);
    const int m = lambda.size();
    if (m < 1)
        fail(ErrorKind::domain, "empty spectrum");
    if (m > quasisym_size_cap)
        fail(ErrorKind::capability, "build_Q_general is capped at m <= " + std::to_string(quasisym_size_cap)
                                        + " (m! permutations), got m=" + std::to_string(m));
    QuasiSym q;
    q.delta = delta;
    q.spectrum = lambda;
    q.matrix = Matrix::Zero(m, m);
    q.decomposition.assign(static_cast<std::size_t>(m), Matrix::Zero(m, m));
    Vector h(m);
    for (int i = 0; i < m; ++i)
        h(i) = std::pow(delta, m - 1 - i);
    detail::for_each_permutation(m, [&](const std::vector<int>& rho) {
        const Matrix p = build_P(lambda.permuted(rho));
        const Matrix pd = h.asDiagonal() * p;
        q.matrix.noalias() += pd.transpose() * pd;
        for (int i = 0; i < m; ++i) {
            const Eigen::RowVectorXd row = p.row(i);
            q.decomposition[static_cast<std::size_t>(m - 1 - i)].noalias() += row.transpose() * row;
        }
    });
    return q;
}

/// Closed 2x2 form [[l1^2 + l2^2 + 2 delta^2, -(l1 + l2)], [-(l1 + l2), 2]].
inline QuasiSym build_Q2(double lambda1, double lambda2, double delta)
{
    detail::check_delta(delta);
    QuasiSym q;
    q.delta = delta;
    q.spectrum = Spectrum{lambda1, lambda2};
    q.matrix.resize(2, 2);
    q.matrix << lambda1 * lambda1 + lambda2 * lambda2 + 2.0 * delta * delta, -(lambda1 + lambda2),
        -(lambda1 + lambda2), 2.0;
    return q;
}

/// Q A - A^T Q for the 2x2 quasi-symmetriser and companion matrix.
inline Matrix2 commutator_Q2(const Spectrum& lambda, double delta)
{
    if (lambda.size() != 2)
        fail(ErrorKind::domain, "commutator_Q2 needs a 2-entry spectrum");
    const Matrix2 q = build_Q2(lambda[0], lambda[1], delta).matrix;
    const Matrix2 a = companion_of(lambda[0], lambda[1]);
    return q * a - a.transpose() * q;
}

/// Largest c0 with Q >= c0 diag(Q): min eigenvalue of D^{-1/2} Q D^{-1/2},
/// restricted to the indices with positive diagonal. nullopt for a zero matrix.
inline std::optional<double> nearly_diagonal_constant(const Matrix& q)
{
    std::vector<int> support;
    for (int i = 0; i < q.rows(); ++i)
        if (q(i, i) > 0.0)
            support.push_back(i);
    if (support.empty())
        return std::nullopt;
    const int k = static_cast<int>(support.size());
    Matrix n(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            n(i, j) = q(support[i], support[j]) / std::sqrt(q(support[i], support[i]) * q(support[j], support[j]));
    if (k == 2) {
        // closed form avoids eigen-solver roundoff near rank deficiency
        return 1.0 - std::abs(n(0, 1));
    }
    return detail::min_eigenvalue(n);
}

inline std::optional<double> nearly_diagonal_constant(const QuasiSym& q) { return nearly_diagonal_constant(q.matrix); }

/// lambda in S_M  <=>  lambda_i^2 + lambda_j^2 <= M (lambda_i - lambda_j)^2 for all i < j.
inline bool in_S_M(const Spectrum& lambda, double big_m)
{
    if (!(big_m > 0.0))
        fail(ErrorKind::domain, "S_M needs M > 0");
    for (int i = 0; i < lambda.size(); ++i)
        for (int j = i + 1; j < lambda.size(); ++j) {
            const double d = lambda[i] - lambda[j];
            if (lambda[i] * lambda[i] + lambda[j] * lambda[j] > big_m * d * d)
                return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// Structural checks of the quasi-symmetriser
// ---------------------------------------------------------------------------

struct CheckItem {
    std::string id;
    bool passed = false;
    double measured = 0.0;  // error or certified constant, see detail
    std::string detail;
};

struct QuasisymCheckReport {
    std::vector<CheckItem> items;
    double certified_two_sided_constant = 0.0; // item (ii)
    double commutator_constant = 0.0;          // item (iii)
    double diagonal_product_ratio = 0.0;       // item (vii)

    bool all_passed() const
    {
        return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.passed; });
    }
    const CheckItem& item(const std::string& id) const
    {
        for (const auto& c : items)
            if (c.id == id)
                return c;
        fail(ErrorKind::domain, "no report item " + id);
    }
};

/// Supremum of q0_11 ... q0_mm / prod_{i<j}(l_i^2 + l_j^2) used for item (vii).
/// The ratio is scale invariant; m = 2 gives 2 identically, m = 3 and 4 are
/// numerically maximised (108 = 4 * 3^3, 419904 = 2^6 * 3^8).
inline double diagonal_product_cap(int m)
{
    switch (m) {
    case 1: return 1.0;
    case 2: return 2.0;
    case 3: return 108.0;
    case 4: return 419904.0;
    default: return std::numeric_limits<double>::infinity();
    }
}

/// Closed form of det Q_0^{(m)}(lambda).
inline double det_Q0_expected(const Spectrum& lambda)
{
    const int m = lambda.size();
    double prod = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            prod *= (lambda[i] - lambda[j]) * (lambda[i] - lambda[j]);
    double f = 1.0;
    for (int i = 2; i < m; ++i)
        f *= i;
    return std::pow(f, m) * prod;
}

namespace detail {

/// det Q_0 in 50-digit arithmetic straight from the permutation sum: at delta = 0
/// only the last row of P(lambda_rho) survives. Q_0 is badly conditioned, so a
/// double LU loses ~1e-9 relative accuracy already for m = 4.
inline double det_Q0_extended(const Spectrum& lambda)
{
    using Real = boost::multiprecision::cpp_bin_float_50;
    const int m = lambda.size();
    const auto n = static_cast<std::size_t>(m);
    std::vector<std::vector<Real>> q(n, std::vector<Real>(n, Real(0)));
    for_each_permutation(m, [&](const std::vector<int>& rho) {
        // e_0..e_{m-1} of the leading m-1 permuted roots
        std::vector<Real> e(n, Real(0));
        e[0] = 1;
        for (int i = 0; i < m - 1; ++i) {
            const Real x = lambda[rho[static_cast<std::size_t>(i)]];
            for (int h = i + 1; h >= 1; --h)
                e[static_cast<std::size_t>(h)] += e[static_cast<std::size_t>(h - 1)] * x;
        }
        std::vector<Real> row(n);
        for (int j = 0; j < m - 1; ++j) {
            const int h = m - 1 - j;
            row[static_cast<std::size_t>(j)] = (h % 2 ? -e[static_cast<std::size_t>(h)] : e[static_cast<std::size_t>(h)]);
        }
        row[n - 1] = 1;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                q[a][b] += row[a] * row[b];
    });
    Real det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (abs(q[r][c]) > abs(q[p][c]))
                p = r;
        if (q[p][c] == 0)
            return 0.0;
        if (p != c) {
            std::swap(q[p], q[c]);
            det = -det;
        }
        det *= q[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const Real f = q[r][c] / q[c][c];
            for (std::size_t k = c; k < n; ++k)
                q[r][k] -= f * q[c][k];
        }
    }
    return static_cast<double>(det);
}

inline double rel_diff(const Matrix& a, const Matrix& b)
{
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Matrix embed_sharp(const Matrix& t)
{
    const auto k = t.rows();
    Matrix s = Matrix::Zero(k + 1, k + 1);
    s.topLeftCorner(k, k) = t;
    return s;
}

} // namespace detail

inline QuasisymCheckReport check_prop31(const Spectrum& lambda, double delta, double tol)
{
    const int m = lambda.size();
    if (m > quasisym_size_cap)
        fail(ErrorKind::capability, "check_prop31 is capped at m <= " + std::to_string(quasisym_size_cap));
    if (m < 2)
        fail(ErrorKind::domain, "check_prop31 needs m >= 2");
    QuasisymCheckReport rep;
    const QuasiSym q = build_Q_general(lambda, delta);
    const double qscale = std::max(1.0, q.matrix.cwiseAbs().maxCoeff());

    // (i) delta-polynomial decomposition with PSD, Hermitian, permutation-symmetric terms
    {
        Matrix sum = Matrix::Zero(m, m);
        double worst_psd = 0.0, worst_sym = 0.0, worst_perm = 0.0;
        std::vector<int> rot(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            rot[i] = (i + 1) % m;
        const QuasiSym qrot = build_Q_general(lambda.permuted(rot), delta);
        for (int j = 0; j < m; ++j) {
            const Matrix& qj = q.decomposition[static_cast<std::size_t>(j)];
            sum += std::pow(delta, 2 * j) * qj;
            const double s = std::max(1.0, qj.cwiseAbs().maxCoeff());
            worst_sym = std::max(worst_sym, (qj - qj.transpose()).cwiseAbs().maxCoeff() / s);
            worst_psd = std::max(worst_psd, std::max(0.0, -detail::min_eigenvalue(qj)) / s);
            worst_perm = std::max(worst_perm, detail::rel_diff(qj, qrot.decomposition[static_cast<std::size_t>(j)]));
        }
        const double err = std::max({detail::rel_diff(sum, q.matrix), worst_psd, worst_sym, worst_perm});
        rep.items.push_back({"i", err <= tol, err, "decomposition residual / PSD / symmetry / permutation invariance"});
    }
    // (ii) C^{-1} delta^{2(m-1)} I <= Q <= C I
    {
        const double lmin = detail::min_eigenvalue(q.matrix), lmax = detail::max_eigenvalue(q.matrix);
        const double floor = std::pow(delta, 2 * (m - 1));
        const double c = lmin > 0.0 ? std::max(lmax, floor / lmin) : std::numeric_limits<double>::infinity();
        rep.certified_two_sided_constant = c;
        rep.items.push_back({"ii", std::isfinite(c) && lmin > 0.0, c, "certified C_m(lambda)"});
    }
    // (iii) |(Q A - A^* Q) v, v| <= C delta (Q v, v)
    {
        const Matrix a = companion_of(lambda);
        const Matrix b = q.matrix * a - a.transpose() * q.matrix;
        // i*B is Hermitian; C delta = spectral radius of Q^{-1/2} (iB) Q^{-1/2}.
        Eigen::SelfAdjointEigenSolver<Matrix> es(q.matrix);
        const Vector ev = es.eigenvalues();
        bool ok = ev.minCoeff() > 0.0;
        double c = std::numeric_limits<double>::infinity();
        if (ok) {
            const Matrix qis = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
            const Eigen::MatrixXcd ib = std::complex<double>(0.0, 1.0) * (qis * b * qis).cast<std::complex<double>>();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hs(ib, Eigen::EigenvaluesOnly);
            const double radius = hs.eigenvalues().cwiseAbs().maxCoeff();
            c = delta > 0.0 ? radius / delta : (radius == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            ok = std::isfinite(c);
        }
        rep.commutator_constant = c;
        rep.items.push_back({"iii", ok, c, "measured C_m(lambda) in the commutator bound"});
    }
    // (iv) Q_delta^{(m)} = Q_0^{(m)} + delta^2 sum_i Q_delta^{(m-1)}(pi_i lambda)^sharp
    {
        Matrix rhs = q.decomposition[0];
        for (int i = 0; i < m; ++i)
            rhs += delta * delta * detail::embed_sharp(build_Q_general(lambda.without(i), delta).matrix);
        const double err = detail::rel_diff(rhs, q.matrix);
        rep.items.push_back({"iv", err <= tol, err, "recursion residual"});
    }
    // (v) Q_0 = (m-1)! W^* W
    {
        Matrix w(m, m);
        for (int i = 0; i < m; ++i) {
            const auto e = detail::elementary(lambda.without(i));
            for (int j = 0; j < m - 1; ++j)
                w(i, j) = detail::signed_elementary(e, m - 1 - j);
            w(i, m - 1) = 1.0;
        }
        const Matrix rhs = detail::factorial(m - 1) * w.transpose() * w;
        const double err = detail::rel_diff(rhs, q.decomposition[0]);
        rep.items.push_back({"v", err <= tol, err, "Q_0 vs (m-1)! W^T W"});
    }
    // (vi) det Q_0 = ((m-1)!)^m prod_{i<j} (l_i - l_j)^2, which is what Q_0 = (m-1)! W^T W
    // forces (det W is the Vandermonde product); the constant (m-1)! alone is only right for m = 2.
    {
        const double expected = det_Q0_expected(lambda);
        const double got = detail::det_Q0_extended(lambda);
        const double scale =
            expected != 0.0 ? std::abs(expected) : std::pow(std::max(1.0, q.decomposition[0].cwiseAbs().maxCoeff()), m);
        const double err = std::abs(got - expected) / scale;
        rep.items.push_back({"vi", err <= tol, err, "det Q_0 relative error"});
    }
    // (vii) q0_11 ... q0_mm <= C_m prod_{i<j} (l_i^2 + l_j^2)
    {
        double diag = 1.0, rhs = 1.0;
        for (int i = 0; i < m; ++i)
            diag *= q.decomposition[0](i, i);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                rhs *= lambda[i] * lambda[i] + lambda[j] * lambda[j];
        const double cap = diagonal_product_cap(m);
        double ratio = 0.0;
        bool ok;
        if (rhs > 0.0) {
            ratio = diag / rhs;
            ok = ratio <= cap * (1.0 + tol);
        } else {
            ok = std::abs(diag) <= tol * std::pow(qscale, m);
        }
        rep.diagonal_product_ratio = ratio;
        rep.items.push_back({"vii", ok, ratio, "diagonal product over prod(l_i^2 + l_j^2)"});
    }
    return rep;
}

} // namespace vws
