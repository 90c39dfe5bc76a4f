#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"
#include "quadrature.hpp"

namespace vws {

/// Shape of the mollifier profile exp(-sharpness / (1 - t^2)) on (-1, 1).
enum class KernelShape { bump, steep_bump };

inline double kernel_sharpness(KernelShape s)
{
    return s == KernelShape::bump ? 1.0 : 4.0;
}

/// Even, nonnegative C^inf bump on [-1, 1] with unit mass.
///
/// psi(t) = exp(-a / (1 - t^2)) / Z. Derivatives are analytic (Faa di Bruno
/// recursion on the exponent), and the antiderivative Psi(t) = int_{-1}^t psi
/// uses a cached cumulative table refined by a 16-point Gauss rule inside the
/// cell, so Heaviside convolutions are exact to roundoff.
class MollifierKernel {
public:
    static constexpr int max_derivative_order = 8;

    explicit MollifierKernel(KernelShape shape = KernelShape::bump)
        : shape_(shape), sharpness_(kernel_sharpness(shape)), table_(std::make_shared<Table>())
    {
        const auto& rule = detail::make_gauss_rule<16>();
        cell_rule_ = std::make_shared<GaussRule>(rule);
        const int cells = table_size;
        table_->cumulative.resize(cells + 1);
        table_->cumulative[0] = 0.0;
        const double h = 2.0 / cells;
        for (int j = 0; j < cells; ++j) {
            const double a = -1.0 + j * h;
            table_->cumulative[j + 1] =
                table_->cumulative[j] + integrate(*cell_rule_, [&](double t) { return raw(t); }, a, a + h);
        }
        normalization_ = 1.0 / table_->cumulative[cells];
    }

    KernelShape shape() const { return shape_; }
    std::string name() const { return shape_ == KernelShape::bump ? "bump" : "steep_bump"; }

    /// 1 / int raw profile.
    double normalization() const { return normalization_; }

    double operator()(double t) const { return normalization_ * raw(t); }

    /// psi^{(order)}(t).
    double derivative(double t, int order) const
    {
        if (order < 0 || order > max_derivative_order)
            fail(ErrorKind::capability,
                 "kernel derivative order " + std::to_string(order) + " exceeds smoothness budget "
                     + std::to_string(max_derivative_order));
        if (order == 0)
            return (*this)(t);
        if (!(std::abs(t) < 1.0))
            return 0.0;
        const double f0 = raw(t);
        if (f0 == 0.0)
            return 0.0;
        // f^{(n+1)} = sum_k C(n,k) g^{(k+1)} f^{(n-k)}, with f = exp(g).
        std::array<double, max_derivative_order + 1> f{};
        std::array<double, max_derivative_order + 2> g{};
        for (int j = 1; j <= order; ++j)
            g[j] = exponent_derivative(t, j);
        f[0] = f0;
        for (int n = 0; n < order; ++n) {
            double acc = 0.0;
            double binom = 1.0;
            for (int k = 0; k <= n; ++k) {
                acc += binom * g[k + 1] * f[n - k];
                binom = binom * (n - k) / (k + 1);
            }
            f[n + 1] = acc;
        }
        return normalization_ * f[order];
    }

    /// Psi(t) = int_{-1}^{t} psi; 0 for t <= -1 and 1 for t >= 1.
    double antiderivative(double t) const
    {
        if (t <= -1.0)
            return 0.0;
        if (t >= 1.0)
            return 1.0;
        const double h = 2.0 / table_size;
        int j = static_cast<int>((t + 1.0) / h);
        if (j >= table_size)
            j = table_size - 1;
        const double a = -1.0 + j * h;
        const double partial = integrate(*cell_rule_, [&](double s) { return raw(s); }, a, t);
        return normalization_ * (table_->cumulative[j] + partial);
    }

    /// psi(0), the peak value.
    double peak() const { return (*this)(0.0); }

    /// int t^p psi(t) dt.
    double moment(int p) const
    {
        return integrate_adaptive([&](double t) { return std::pow(t, p) * (*this)(t); }, -1.0, 1.0, 1e-13);
    }

private:
    static constexpr int table_size = 1024;

    struct Table {
        std::vector<double> cumulative;
    };

    double raw(double t) const
    {
        if (!(std::abs(t) < 1.0))
            return 0.0;
        return std::exp(-sharpness_ / (1.0 - t * t));
    }

    // d^j/dt^j of -a/(1-t^2) = -(a/2) j! [(1-t)^{-(j+1)} + (-1)^j (1+t)^{-(j+1)}]
    double exponent_derivative(double t, int j) const
    {
        double fact = 1.0;
        for (int i = 2; i <= j; ++i)
            fact *= i;
        const double left = std::pow(1.0 - t, -(j + 1));
        const double right = std::pow(1.0 + t, -(j + 1));
        return -0.5 * sharpness_ * fact * (left + ((j % 2 == 0) ? right : -right));
    }

    KernelShape shape_;
    double sharpness_;
    double normalization_ = 1.0;
    std::shared_ptr<Table> table_;
    std::shared_ptr<GaussRule> cell_rule_;
};

} // namespace vws
