#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "coefficients.hpp"
#include "error.hpp"
#include "quadrature.hpp"
#include "spectral_core.hpp"

namespace vws {

using Point = std::vector<double>;

// ---------------------------------------------------------------------------
// Data atoms
// ---------------------------------------------------------------------------

/// exp(-(1 - r^2)^{-1/(s-1)}) with r = |x - center| / width; Gevrey of order s.
struct GevreyBump {
    double order = 1.5;
    Point center{0.0};
    double width = 1.0;
};

/// exp(-1/(1 - r^2)); treated as a generic C^infinity datum.
struct SmoothBump {
    Point center{0.0};
    double width = 1.0;
};

struct DiracPoint {
    Point x0{0.0};
};

/// Derivative of the Dirac mass along `axis` (0-based).
struct DiracDerivative {
    Point x0{0.0};
    int axis = 0;
};

using DataKind = std::variant<GevreyBump, SmoothBump, DiracPoint, DiracDerivative>;

struct DataSpec {
    DataKind kind = GevreyBump{};
    RegularityCase regularity = RegularityCase::gevrey;
    double amplitude = 1.0;

    int dimension() const
    {
        return std::visit(
            [](const auto& k) -> int {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, GevreyBump> || std::is_same_v<K, SmoothBump>)
                    return static_cast<int>(k.center.size());
                else
                    return static_cast<int>(k.x0.size());
            },
            kind);
    }

    bool is_distribution() const
    {
        return std::holds_alternative<DiracPoint>(kind) || std::holds_alternative<DiracDerivative>(kind);
    }

    void validate() const
    {
        const int n = dimension();
        if (n < 1 || n > 2)
            fail(ErrorKind::domain, "data dimension must be 1 or 2");
        if (!std::isfinite(amplitude))
            fail(ErrorKind::domain, "data amplitude must be finite");
        if (const auto* g = std::get_if<GevreyBump>(&kind)) {
            if (!(g->order > 1.0))
                fail(ErrorKind::domain, "Gevrey bump order must exceed 1");
            if (!(g->width > 0.0))
                fail(ErrorKind::domain, "bump width must be positive");
        }
        if (const auto* b = std::get_if<SmoothBump>(&kind); b && !(b->width > 0.0))
            fail(ErrorKind::domain, "bump width must be positive");
        if (const auto* d = std::get_if<DiracDerivative>(&kind); d && (d->axis < 0 || d->axis >= n))
            fail(ErrorKind::domain, "Dirac derivative axis out of range");
        if (is_distribution() && regularity != RegularityCase::distribution)
            fail(ErrorKind::domain, "Dirac data require the distribution case");
        if (regularity == RegularityCase::gevrey && !std::holds_alternative<GevreyBump>(kind))
            fail(ErrorKind::domain, "the Gevrey case needs Gevrey bump data");
    }
};

namespace detail {

inline double bump_profile(double r2, double power)
{
    if (r2 >= 1.0)
        return 0.0;
    return std::exp(-std::pow(1.0 - r2, -power));
}

inline double radius2(const Point& x, const Point& c, double w)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = (x[i] - c[i]) / w;
        s += d * d;
    }
    return s;
}

inline double dot(const Point& a, const Point& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// Fourier transform of the radial profile exp(-(1-r^2)^{-power}) on the unit
/// ball of R^n, at radial frequency eta >= 0.
inline double radial_profile_transform(double power, int n, double eta)
{
    const int panels = std::max(16, static_cast<int>(std::ceil(eta / 2.0)));
    const auto& rule = gauss_rule(0);
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = static_cast<double>(p) / panels, b = static_cast<double>(p + 1) / panels;
        sum += integrate(rule,
                         [&](double r) {
                             const double f = bump_profile(r * r, power);
                             if (n == 1)
                                 return 2.0 * f * std::cos(eta * r);
                             return 2.0 * std::numbers::pi * f * std::cyl_bessel_j(0.0, eta * r) * r;
                         },
                         a, b);
    }
    return sum;
}

/// 0 for u <= 0, 1 for u >= 1, C^infinity (Gevrey 2) in between.
inline double smooth_step(double u)
{
    if (u <= 0.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

inline double smooth_step_derivative(double u)
{
    if (u <= 0.0 || u >= 1.0)
        return 0.0;
    // S = 1 / (1 + e^{g}), g = 1/u - 1/(1-u)
    const double g = 1.0 / u - 1.0 / (1.0 - u);
    const double dg = -1.0 / (u * u) - 1.0 / ((1.0 - u) * (1.0 - u));
    if (g > 700.0)
        return 0.0;
    const double e = std::exp(g);
    return -dg * e / ((1.0 + e) * (1.0 + e));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Fourier data
// ---------------------------------------------------------------------------

enum class DecayClass { gevrey, schwartz, polynomial };

struct FourierDatum {
    std::function<std::complex<double>(const Frequency&)> eval;
    DecayClass decay = DecayClass::schwartz;
    double gevrey_order = 0.0;

    std::complex<double> operator()(const Frequency& xi) const { return eval(xi); }
};

/// Fourier transform  g^(xi) = int g(x) e^{-i x.xi} dx  of a data atom.
inline FourierDatum fourier_of(const DataSpec& spec)
{
    spec.validate();
    const int n = spec.dimension();
    const double amp = spec.amplitude;
    FourierDatum out;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, DiracPoint>) {
                out.decay = DecayClass::polynomial;
                out.eval = [x0 = k.x0, amp](const Frequency& xi) {
                    return amp * std::exp(std::complex<double>(0.0, -detail::dot(x0, xi)));
                };
            } else if constexpr (std::is_same_v<K, DiracDerivative>) {
                out.decay = DecayClass::polynomial;
                out.eval = [x0 = k.x0, axis = k.axis, amp](const Frequency& xi) {
                    return amp * std::complex<double>(0.0, xi[static_cast<std::size_t>(axis)])
                           * std::exp(std::complex<double>(0.0, -detail::dot(x0, xi)));
                };
            } else {
                double power = 1.0;
                if constexpr (std::is_same_v<K, GevreyBump>) {
                    power = 1.0 / (k.order - 1.0);
                    out.decay = DecayClass::gevrey;
                    out.gevrey_order = k.order;
                } else {
                    out.decay = DecayClass::schwartz;
                }
                out.eval = [c = k.center, w = k.width, power, n, amp](const Frequency& xi) {
                    double norm = 0.0;
                    for (double v : xi)
                        norm += v * v;
                    const double f = detail::radial_profile_transform(power, n, w * std::sqrt(norm));
                    return amp * std::pow(w, n) * f * std::exp(std::complex<double>(0.0, -detail::dot(c, xi)));
                };
            }
        },
        spec.kind);
    return out;
}

/// Pointwise value of the data atom (bumps only).
inline double data_value(const DataSpec& spec, const Point& x)
{
    if (const auto* g = std::get_if<GevreyBump>(&spec.kind))
        return spec.amplitude * detail::bump_profile(detail::radius2(x, g->center, g->width), 1.0 / (g->order - 1.0));
    if (const auto* b = std::get_if<SmoothBump>(&spec.kind))
        return spec.amplitude * detail::bump_profile(detail::radius2(x, b->center, b->width), 1.0);
    fail(ErrorKind::domain, "pointwise values exist only for bump data");
}

// ---------------------------------------------------------------------------
// Gevrey mollifier rho_eps(x) = eps^{-n} phi(x/eps) chi(x |log eps|)
// ---------------------------------------------------------------------------

class GevreyMollifier {
public:
    static constexpr double plateau_radius = 1.5; // chi = 1 on |x| <= 1.5
    static constexpr double support_radius = 2.0; // chi = 0 on |x| >= 2
    static constexpr double eps_ceiling = 0.5;
    static constexpr double table_step = 0.125;
    static constexpr double table_extent = 600.0; // |phi| < 1e-17 beyond

    GevreyMollifier() : state_(shared_state()) {}

    /// psi^(xi): 1 on |xi| <= 1, 0 on |xi| >= 2.
    static double plateau(double xi) { return detail::smooth_step(2.0 - std::abs(xi)); }

    /// Radial cutoff chi.
    static double chi(double r)
    {
        return detail::smooth_step((support_radius - std::abs(r)) / (support_radius - plateau_radius));
    }

    static double chi_derivative(double r)
    {
        const double s = r < 0.0 ? -1.0 : 1.0;
        return -s / (support_radius - plateau_radius)
               * detail::smooth_step_derivative((support_radius - std::abs(r)) / (support_radius - plateau_radius));
    }

    /// One-dimensional phi = inverse Fourier transform of the plateau.
    double phi1(double y) const { return phi1_impl(y, 0); }
    double phi1_derivative(double y) const { return phi1_impl(y, 1); }

    /// Tensor-product phi on R^n.
    double phi(const Point& y) const
    {
        double v = 1.0;
        for (double c : y)
            v *= phi1(c);
        return v;
    }

    /// phi1 sampled at j * table_step, j = 0..; cached at construction.
    const std::vector<double>& phi_table() const { return state_->table; }

    double rho(double eps, const Point& x) const
    {
        check_eps(eps);
        const double lg = std::abs(std::log(eps));
        const double r = std::sqrt(detail::dot(x, x));
        if (r * lg >= support_radius)
            return 0.0;
        Point y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x[i] / eps;
        return std::pow(eps, -static_cast<double>(x.size())) * phi(y) * chi(r * lg);
    }

    /// d rho_eps / d x_axis.
    double rho_derivative(double eps, const Point& x, int axis) const
    {
        check_eps(eps);
        const double lg = std::abs(std::log(eps));
        const double r = std::sqrt(detail::dot(x, x));
        if (r * lg >= support_radius)
            return 0.0;
        const auto n = x.size();
        Point y(n);
        for (std::size_t i = 0; i < n; ++i)
            y[i] = x[i] / eps;
        double phi_v = 1.0, dphi = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = phi1(y[i]);
            phi_v *= p;
            dphi *= static_cast<int>(i) == axis ? phi1_derivative(y[i]) / eps : p;
        }
        const double dchi = r > 0.0 ? chi_derivative(r * lg) * lg * x[static_cast<std::size_t>(axis)] / r : 0.0;
        return std::pow(eps, -static_cast<double>(n)) * (dphi * chi(r * lg) + phi_v * dchi);
    }

    /// rho^_eps(xi) in one dimension, trapezoid on the cached phi table (phi is
    /// band-limited to |xi| <= 2, so the rule is spectrally accurate).
    std::complex<double> rho_hat(double eps, const Frequency& xi) const
    {
        check_eps(eps);
        if (xi.size() != 1)
            fail(ErrorKind::capability, "rho_eps Fourier transform is implemented for n = 1");
        const double lg = std::abs(std::log(eps));
        const double ymax = std::min(table_extent, support_radius / (eps * lg));
        const auto& tab = state_->table;
        const auto jmax = std::min(tab.size() - 1, static_cast<std::size_t>(ymax / table_step));
        // integrand is even in y up to the phase: 2 sum phi chi cos(eps y xi)
        double sum = tab[0];
        for (std::size_t j = 1; j <= jmax; ++j) {
            const double y = table_step * static_cast<double>(j);
            sum += 2.0 * tab[j] * chi(eps * y * lg) * std::cos(eps * y * xi[0]);
        }
        return {sum * table_step, 0.0};
    }

    static void check_eps(double eps)
    {
        if (!(eps > 0.0 && eps <= eps_ceiling))
            fail(ErrorKind::domain, "rho_eps needs 0 < eps <= 1/2, got " + std::to_string(eps));
    }

private:
    struct State {
        std::vector<double> nodes;   // xi in [1, 2]
        std::vector<double> weights; // Gauss weight * plateau(xi)
        std::vector<double> table;
        std::vector<double> dtable;
        State()
        {
            const auto& rule = gauss_rule(0);
            constexpr int panels = 256;
            for (int p = 0; p < panels; ++p) {
                const double a = 1.0 + static_cast<double>(p) / panels, b = 1.0 + static_cast<double>(p + 1) / panels;
                for (std::size_t i = 0; i < rule.size(); ++i) {
                    const double x = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i];
                    nodes.push_back(x);
                    weights.push_back(0.5 * (b - a) * rule.weights[i] * plateau(x));
                }
            }
            const auto count = static_cast<std::size_t>(table_extent / table_step) + 1;
            table.resize(count);
            dtable.resize(count);
            for (std::size_t j = 0; j < count; ++j) {
                table[j] = eval(table_step * static_cast<double>(j), 0);
                dtable[j] = eval(table_step * static_cast<double>(j), 1);
            }
        }

        /// 12-point Lagrange interpolation on the table (phi is band-limited to
        /// |xi| <= 2, far below the table's Nyquist frequency 8 pi).
        double interpolate(double y, int order) const
        {
            constexpr int width = 12;
            const double u = y / table_step;
            const long j0 = static_cast<long>(std::floor(u)) - width / 2 + 1;
            const auto sample = [&](long j) {
                const auto a = static_cast<std::size_t>(std::labs(j));
                if (a >= table.size())
                    return 0.0;
                // phi even, phi' odd
                return order == 0 ? table[a] : (j < 0 ? -dtable[a] : dtable[a]);
            };
            double sum = 0.0;
            for (int i = 0; i < width; ++i) {
                const long j = j0 + i;
                double w = 1.0;
                bool exact = false;
                for (int k = 0; k < width; ++k) {
                    if (k == i)
                        continue;
                    const double denom = static_cast<double>(i - k);
                    w *= (u - static_cast<double>(j0 + k)) / denom;
                }
                if (u == static_cast<double>(j))
                    exact = true;
                if (exact)
                    return sample(j);
                sum += w * sample(j);
            }
            return sum;
        }

        double eval(double y, int order) const
        {
            // phi(y) = (1/pi) [ int_0^1 cos(y t) dt + int_1^2 psi^(t) cos(y t) dt ]
            double head, tail = 0.0;
            if (order == 0) {
                head = std::abs(y) < 1e-8 ? 1.0 - y * y / 6.0 : std::sin(y) / y;
                for (std::size_t k = 0; k < nodes.size(); ++k)
                    tail += weights[k] * std::cos(y * nodes[k]);
            } else {
                // d/dy: -(1/pi) int t psi^(t) sin(y t) dt
                head = std::abs(y) < 1e-6 ? -y / 3.0 : (y * std::cos(y) - std::sin(y)) / (y * y);
                for (std::size_t k = 0; k < nodes.size(); ++k)
                    tail -= weights[k] * nodes[k] * std::sin(y * nodes[k]);
            }
            return (head + tail) / std::numbers::pi;
        }
    };

    static std::shared_ptr<const State> shared_state()
    {
        static const auto state = std::make_shared<const State>();
        return state;
    }

    double phi1_impl(double y, int order) const
    {
        if (std::abs(y) > table_extent)
            return 0.0;
        return state_->interpolate(y, order);
    }

    std::shared_ptr<const State> state_;
};

// ---------------------------------------------------------------------------
// Regularisation
// ---------------------------------------------------------------------------

/// Fourier transform of the case-appropriate regularisation g_eps: g^ in the
/// Gevrey case, g^ rho^_eps otherwise (convolution theorem).
inline FourierDatum regularized_fourier(const DataSpec& spec, const GevreyMollifier& m, double eps)
{
    FourierDatum base = fourier_of(spec);
    if (spec.regularity == RegularityCase::gevrey)
        return base;
    GevreyMollifier::check_eps(eps);
    FourierDatum out = base;
    out.decay = DecayClass::gevrey;
    out.gevrey_order = 2.0;
    out.eval = [base, m, eps](const Frequency& xi) { return base(xi) * m.rho_hat(eps, xi); };
    return out;
}

/// g_eps sampled at the given points (n = 1 for the convolution paths).
inline std::vector<double> regularize_data(const DataSpec& spec, const GevreyMollifier& m, double eps,
                                           const std::vector<Point>& points)
{
    spec.validate();
    std::vector<double> out(points.size(), 0.0);
    if (spec.regularity == RegularityCase::gevrey) {
        for (std::size_t i = 0; i < points.size(); ++i)
            out[i] = data_value(spec, points[i]);
        return out;
    }
    GevreyMollifier::check_eps(eps);
    const auto shift = [](const Point& x, const Point& c) {
        Point d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            d[i] = x[i] - c[i];
        return d;
    };
    if (const auto* d = std::get_if<DiracPoint>(&spec.kind)) {
        for (std::size_t i = 0; i < points.size(); ++i)
            out[i] = spec.amplitude * m.rho(eps, shift(points[i], d->x0));
        return out;
    }
    if (const auto* d = std::get_if<DiracDerivative>(&spec.kind)) {
        // (partial delta_{x0}) * rho = partial rho(. - x0)
        for (std::size_t i = 0; i < points.size(); ++i)
            out[i] = spec.amplitude * m.rho_derivative(eps, shift(points[i], d->x0), d->axis);
        return out;
    }
    if (spec.dimension() != 1)
        fail(ErrorKind::capability, "bump convolution with rho_eps is implemented for n = 1");
    // (g * rho_eps)(x) = int g(x - eps y) phi(y) chi(eps y |log eps|) dy on the phi table
    const double lg = std::abs(std::log(eps));
    const double ymax = std::min(GevreyMollifier::table_extent, GevreyMollifier::support_radius / (eps * lg));
    const auto& tab = m.phi_table();
    const auto jmax = std::min(tab.size() - 1, static_cast<std::size_t>(ymax / GevreyMollifier::table_step));
    std::vector<double> kernel(jmax + 1);
    for (std::size_t j = 0; j <= jmax; ++j)
        kernel[j] = tab[j] * GevreyMollifier::chi(eps * GevreyMollifier::table_step * static_cast<double>(j) * lg);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double x = points[i][0];
        double sum = kernel[0] * data_value(spec, {x});
        for (std::size_t j = 1; j <= jmax; ++j) {
            const double z = eps * GevreyMollifier::table_step * static_cast<double>(j);
            sum += kernel[j] * (data_value(spec, {x - z}) + data_value(spec, {x + z}));
        }
        out[i] = sum * GevreyMollifier::table_step;
    }
    return out;
}

/// V(0, xi) = (<xi> g0^(xi), g1^(xi)).
inline Vec2c initial_mode_vector(const FourierDatum& g0, const FourierDatum& g1, const Frequency& xi)
{
    return Vec2c(bracket(xi) * g0(xi), g1(xi));
}

} // namespace vws
