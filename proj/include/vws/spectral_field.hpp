#pragma once

#include <fftw3.h>

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cauchy_data.hpp"
#include "error.hpp"
#include "spectral_core.hpp"

namespace vws {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Periodic grid and retained frequency lattice
// ---------------------------------------------------------------------------

/// Torus [-period/2, period/2)^n sampled with `points` nodes per axis.
struct PeriodicGrid {
    int n = 1;
    double period = 16.0;
    int points = 512;

    void validate() const
    {
        if (n < 1 || n > 2)
            fail(ErrorKind::domain, "grid dimension must be 1 or 2");
        if (!(period > 0.0) || !std::isfinite(period))
            fail(ErrorKind::domain, "grid period must be positive");
        if (points < 4 || (points & (points - 1)) != 0)
            fail(ErrorKind::domain, "grid points must be a power of two >= 4");
    }

    double spacing() const { return period / points; }
    double origin() const { return -0.5 * period; }
    double x(int j) const { return origin() + j * spacing(); }
    double nyquist() const { return std::numbers::pi * points / period; }
    double wavenumber(int k) const { return 2.0 * std::numbers::pi * k / period; }
    int signed_index(int j) const { return j < points / 2 ? j : j - points; }
    std::size_t size() const { return n == 1 ? points : static_cast<std::size_t>(points) * points; }
};

/// Frequencies kept for the sweep, in FFT storage order. The Nyquist index is
/// never retained so the set is closed under xi -> -xi.
struct Lattice {
    std::vector<std::array<int, 2>> index; // signed wave numbers (second unused for n = 1)
    std::vector<Frequency> xi;

    std::size_t size() const { return xi.size(); }
};

inline Lattice retained_lattice(const PeriodicGrid& grid, double cutoff)
{
    grid.validate();
    if (!(cutoff >= 0.0))
        fail(ErrorKind::domain, "frequency cutoff must be nonnegative");
    Lattice lat;
    const int half = grid.points / 2;
    const int outer = grid.n == 2 ? grid.points : 1;
    for (int j1 = 0; j1 < outer; ++j1) {
        for (int j2 = 0; j2 < grid.points; ++j2) {
            std::array<int, 2> k{grid.signed_index(grid.n == 2 ? j1 : j2), grid.n == 2 ? grid.signed_index(j2) : 0};
            if (k[0] == -half || k[1] == -half)
                continue;
            Frequency xi{grid.wavenumber(k[0])};
            if (grid.n == 2)
                xi.push_back(grid.wavenumber(k[1]));
            double norm = 0.0;
            for (double v : xi)
                norm += v * v;
            if (std::sqrt(norm) > cutoff)
                continue;
            lat.index.push_back(k);
            lat.xi.push_back(std::move(xi));
        }
    }
    return lat;
}

// ---------------------------------------------------------------------------
// Parallel map
// ---------------------------------------------------------------------------

/// Worker count from VWS_WORKERS, else the hardware concurrency.
inline unsigned worker_count()
{
    if (const char* env = std::getenv("VWS_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// body(i) for i in [0, count); each index is written by exactly one worker.
/// The first exception is rethrown after all workers join.
template <class F>
void parallel_for(std::size_t count, unsigned workers, F&& body)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Cauchy data u(0) = g0 and initial velocity du/dt(0) = g1 (optional).
struct InitialData {
    DataSpec g0;
    std::optional<DataSpec> g1;

    RegularityCase regularity() const { return g0.regularity; }
};

/// xi -> V(0, xi) = (<xi> g0_eps^, D_t u_eps(0)^) with D_t u = -i du/dt.
inline std::function<Vec2c(const Frequency&)> mode_initializer(const InitialData& data, double eps,
                                                              bool regularize = true)
{
    static const GevreyMollifier mollifier;
    const FourierDatum f0 = regularize ? regularized_fourier(data.g0, mollifier, eps) : fourier_of(data.g0);
    std::optional<FourierDatum> f1;
    if (data.g1)
        f1 = regularize ? regularized_fourier(*data.g1, mollifier, eps) : fourier_of(*data.g1);
    return [f0, f1](const Frequency& xi) {
        const Complex v1 = f1 ? Complex(0.0, -1.0) * (*f1)(xi) : Complex(0.0);
        return Vec2c(bracket(xi) * f0(xi), v1);
    };
}

// ---------------------------------------------------------------------------
// Sweep over the lattice for one eps
// ---------------------------------------------------------------------------

struct ModeCell {
    Frequency xi;
    Vec2c v0 = Vec2c::Zero();
    std::vector<ModeSample> outputs;
    std::size_t steps = 0;
    bool ok = true;
    std::string failure;
    std::optional<GronwallReport> gronwall;
    std::optional<ModeEstimateReport> estimate;
};

struct SweepOptions {
    IntegratorConfig integrator;
    bool check_gronwall = false;
    bool check_estimate = false;
    unsigned workers = 0; // 0: worker_count()
};

/// Integrate every lattice mode; failures are recorded per cell, not thrown.
inline std::vector<ModeCell> solve_lattice(const ProblemSetup& setup, double eps, const Lattice& lattice,
                                           const std::function<Vec2c(const Frequency&)>& initial,
                                           const SweepOptions& opt)
{
    std::vector<ModeCell> cells(lattice.size());
    IntegratorConfig cfg = opt.integrator;
    cfg.record_steps = opt.check_gronwall || opt.check_estimate;
    const int order = setup.structure_order();
    parallel_for(lattice.size(), opt.workers ? opt.workers : worker_count(), [&](std::size_t i) {
        ModeCell& cell = cells[i];
        cell.xi = lattice.xi[i];
        try {
            cell.v0 = initial(cell.xi);
            ModeTrajectory traj = integrate_mode(setup, eps, cell.xi, cell.v0, cfg);
            cell.steps = traj.steps;
            if (opt.check_gronwall)
                cell.gronwall = check_gronwall(traj, setup);
            if (opt.check_estimate && cell.v0.norm() > 0.0)
                cell.estimate = check_mode_estimate(traj, setup, order);
            cell.outputs = std::move(traj.outputs);
            if (cell.outputs.size() != cfg.output_times.size())
                fail(ErrorKind::consistency, "missing output samples");
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.failure = e.what();
            cell.outputs.clear();
        }
    });
    return cells;
}

/// u^(t_j, xi) = V_1 / <xi> for every cell at output index j (zero for failed cells).
inline std::vector<Complex> field_coefficients(const std::vector<ModeCell>& cells, std::size_t j)
{
    std::vector<Complex> out(cells.size(), Complex(0.0));
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].ok)
            out[i] = cells[i].outputs.at(j).v[0] / bracket(cells[i].xi);
    return out;
}

// ---------------------------------------------------------------------------
// Discrete Fourier reconstruction
// ---------------------------------------------------------------------------

struct FieldSamples {
    std::vector<double> u;     // row-major over the grid
    double imag_residue = 0.0; // max |Im u| / max(1, max |u|)
    bool flagged = false;      // imaginary residue above tolerance
};

namespace detail {

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

inline std::size_t flat_index(const PeriodicGrid& grid, const std::array<int, 2>& k)
{
    const auto wrap = [&](int v) { return static_cast<std::size_t>(v < 0 ? v + grid.points : v); };
    return grid.n == 1 ? wrap(k[0]) : wrap(k[0]) * grid.points + wrap(k[1]);
}

/// In-place DFT on a grid-shaped buffer; sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void dft(const PeriodicGrid& grid, std::vector<Complex>& buf, int sign)
{
    auto* data = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = grid.n == 1 ? fftw_plan_dft_1d(grid.points, data, data, sign, FFTW_ESTIMATE)
                           : fftw_plan_dft_2d(grid.points, grid.points, data, data, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

inline Complex origin_phase(const PeriodicGrid& grid, const Frequency& xi, double sign)
{
    double phase = 0.0;
    for (double v : xi)
        phase += v * grid.origin();
    return std::exp(Complex(0.0, sign * phase));
}

} // namespace detail

/// Checks u^(-xi) = conj u^(xi) on the lattice to `tol` relative to the largest
/// amplitude; throws a consistency error naming the offending frequency.
inline void check_hermitian(const PeriodicGrid& grid, const Lattice& lattice, const std::vector<Complex>& u_hat,
                            double tol = 1e-9)
{
    std::map<std::size_t, std::size_t> where;
    for (std::size_t i = 0; i < lattice.size(); ++i)
        where[detail::flat_index(grid, lattice.index[i])] = i;
    double scale = 0.0;
    for (const auto& c : u_hat)
        scale = std::max(scale, std::abs(c));
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const auto& k = lattice.index[i];
        const auto it = where.find(detail::flat_index(grid, {-k[0], -k[1]}));
        if (it == where.end())
            fail(ErrorKind::consistency, "mode set is not closed under xi -> -xi at k=" + std::to_string(k[0]));
        if (std::abs(u_hat[it->second] - std::conj(u_hat[i])) > tol * scale)
            fail(ErrorKind::consistency, "Hermitian symmetry violated at k=" + std::to_string(k[0])
                                             + (grid.n == 2 ? "," + std::to_string(k[1]) : std::string()));
    }
}

/// u(x) = P^{-n} sum_xi u^(xi) e^{i xi.x} on the grid.
inline FieldSamples reconstruct_field(const PeriodicGrid& grid, const Lattice& lattice,
                                      const std::vector<Complex>& u_hat, double tol = 1e-9)
{
    if (u_hat.size() != lattice.size())
        fail(ErrorKind::domain, "one coefficient per lattice mode required");
    check_hermitian(grid, lattice, u_hat, tol);
    std::vector<Complex> buf(grid.size(), Complex(0.0));
    const double norm = std::pow(grid.period, -grid.n);
    for (std::size_t i = 0; i < lattice.size(); ++i)
        buf[detail::flat_index(grid, lattice.index[i])] = u_hat[i] * detail::origin_phase(grid, lattice.xi[i], 1.0) * norm;
    detail::dft(grid, buf, FFTW_BACKWARD);
    FieldSamples out;
    out.u.resize(buf.size());
    double umax = 0.0, imax = 0.0;
    for (std::size_t j = 0; j < buf.size(); ++j) {
        out.u[j] = buf[j].real();
        umax = std::max(umax, std::abs(buf[j]));
        imax = std::max(imax, std::abs(buf[j].imag()));
    }
    out.imag_residue = imax / std::max(1.0, umax);
    out.flagged = out.imag_residue > tol;
    return out;
}

/// Inverse of reconstruct_field restricted to the lattice: u^(xi) from grid samples.
inline std::vector<Complex> sample_coefficients(const PeriodicGrid& grid, const Lattice& lattice,
                                                const std::vector<double>& u)
{
    if (u.size() != grid.size())
        fail(ErrorKind::domain, "sample count does not match the grid");
    std::vector<Complex> buf(u.begin(), u.end());
    detail::dft(grid, buf, FFTW_FORWARD);
    const double cell = std::pow(grid.spacing(), grid.n);
    std::vector<Complex> out(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i)
        out[i] = buf[detail::flat_index(grid, lattice.index[i])] * cell
                 * detail::origin_phase(grid, lattice.xi[i], -1.0);
    return out;
}

/// <u, chi> = P^{-n} sum_xi u^(xi) conj(chi^(xi)) for a real test function chi.
inline double pairing(const PeriodicGrid& grid, const Lattice& lattice, const std::vector<Complex>& u_hat,
                      const FourierDatum& test)
{
    Complex sum(0.0);
    for (std::size_t i = 0; i < lattice.size(); ++i)
        sum += u_hat[i] * std::conj(test(lattice.xi[i]));
    return sum.real() * std::pow(grid.period, -grid.n);
}

} // namespace vws
