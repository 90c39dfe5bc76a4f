#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cauchy_data.hpp"
#include "error.hpp"
#include "scaling_fit.hpp"
#include "spectral_core.hpp"
#include "spectral_field.hpp"

namespace vws {

// ---------------------------------------------------------------------------
// Ladder
// ---------------------------------------------------------------------------

struct EpsLadder {
    std::vector<double> values;
    double floor = 0.0;

    /// 2^{-first} ... 2^{-last}
    static EpsLadder dyadic(int first = 4, int last = 12)
    {
        EpsLadder l;
        for (int j = first; j <= last; ++j)
            l.values.push_back(std::ldexp(1.0, -j));
        l.floor = l.values.empty() ? 0.0 : l.values.back();
        return l;
    }

    void validate() const
    {
        if (values.empty())
            fail(ErrorKind::domain, "eps ladder is empty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0.0 && values[i] <= 0.5))
                fail(ErrorKind::domain, "ladder values must lie in (0, 1/2], got " + std::to_string(values[i]));
            if (i > 0 && !(values[i] < values[i - 1]))
                fail(ErrorKind::domain, "ladder must be strictly decreasing");
        }
        if (values.back() < floor)
            fail(ErrorKind::domain, "ladder goes below its floor");
    }

    std::size_t size() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Negligibility
// ---------------------------------------------------------------------------

struct NetNorm {
    double eps = 0.0;
    int derivative_order = 0; // |alpha|
    double norm = 0.0;
};

struct NegligibilityReport {
    std::vector<std::pair<int, bool>> per_q;
    std::optional<int> largest_passing; // nullopt when no q passes
    bool passes(int q) const
    {
        for (const auto& [qq, ok] : per_q)
            if (qq == q)
                return ok;
        return false;
    }
};

inline constexpr int default_max_negligible_order = 4;

/// For each q: norm * eps^{-(q - |alpha|)} must stay within `growth` times its
/// value at the coarsest eps, for every derivative order present.
inline NegligibilityReport test_negligible(const std::vector<NetNorm>& samples, const std::vector<int>& q_list,
                                           double growth = 10.0)
{
    if (q_list.empty())
        fail(ErrorKind::domain, "q list must not be empty");
    std::map<int, std::vector<NetNorm>> by_order;
    for (const auto& s : samples) {
        if (!(s.eps > 0.0) || !(s.norm >= 0.0) || !std::isfinite(s.norm))
            fail(ErrorKind::domain, "net samples need eps > 0 and finite nonnegative norms");
        by_order[s.derivative_order].push_back(s);
    }
    NegligibilityReport rep;
    for (int q : q_list) {
        bool ok = true;
        for (auto& [order, list] : by_order) {
            std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
            const auto scaled = [&](const NetNorm& s) { return s.norm == 0.0 ? 0.0 : s.norm * std::pow(s.eps, -(q - order)); };
            const double ref = scaled(list.front());
            for (const auto& s : list)
                if (scaled(s) > growth * ref)
                    ok = false;
        }
        rep.per_q.emplace_back(q, ok);
        if (ok && (!rep.largest_passing || q > *rep.largest_passing))
            rep.largest_passing = q;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Gevrey decay fit
// ---------------------------------------------------------------------------

struct DecaySample {
    double bracket = 1.0; // <xi>
    double magnitude = 0.0;
};

struct GevreyDecayFit {
    bool detected = false;
    std::string classification;
    double s_best = 0.0;
    double c = 0.0;           // decay rate in exp(-c <xi>^{1/s})
    double log_prefactor = 0.0;
    double residual = 0.0;    // max deviation of the fit in log10 units
    double eps = 0.0;
    std::vector<std::pair<double, double>> residual_by_s;
};

inline const std::vector<double>& default_gevrey_grid()
{
    static const std::vector<double> grid{1.1, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0, 4.0};
    return grid;
}

namespace detail {

/// Upper envelope: samples exceeding everything at larger <xi> (the decaying
/// record peaks), thinned to the largest one in each of `bins` log-<xi> bins.
inline std::vector<DecaySample> decay_envelope(std::vector<DecaySample> s, int bins)
{
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.bracket < b.bracket; });
    std::vector<DecaySample> records;
    double running = -1.0;
    for (auto it = s.rbegin(); it != s.rend(); ++it)
        if (it->magnitude > running) {
            running = it->magnitude;
            records.push_back(*it);
        }
    const double lo = std::log(s.front().bracket), hi = std::log(s.back().bracket);
    std::vector<std::optional<DecaySample>> best(static_cast<std::size_t>(bins));
    for (const auto& x : records) {
        auto b = static_cast<std::size_t>((std::log(x.bracket) - lo) / (hi - lo) * bins);
        b = std::min<std::size_t>(b, static_cast<std::size_t>(bins - 1));
        if (!best[b] || x.magnitude > best[b]->magnitude)
            best[b] = x;
    }
    std::vector<DecaySample> out;
    for (const auto& b : best)
        if (b && b->magnitude > 0.0)
            out.push_back(*b);
    return out;
}

} // namespace detail

/// Fit log|V| = log c' - c <xi>^{1/s} for each candidate s on the upper
/// envelope of the samples; keeps the s with the smallest residual.
inline GevreyDecayFit fit_gevrey_decay(const std::vector<DecaySample>& samples,
                                       const std::vector<double>& s_grid = default_gevrey_grid(), double eps = 0.0,
                                       int bins = 32)
{
    if (samples.size() < 4)
        fail(ErrorKind::fit, "Gevrey decay fit needs at least 4 samples");
    if (s_grid.empty())
        fail(ErrorKind::fit, "candidate Gevrey orders must not be empty");
    double bmin = std::numeric_limits<double>::infinity(), bmax = 0.0;
    for (const auto& s : samples) {
        if (!(s.bracket >= 1.0) || !std::isfinite(s.magnitude) || s.magnitude < 0.0)
            fail(ErrorKind::fit, "decay samples need <xi> >= 1 and finite nonnegative magnitudes");
        bmin = std::min(bmin, s.bracket);
        bmax = std::max(bmax, s.bracket);
    }
    if (std::log10(bmax / bmin) < 1.5 - 1e-12)
        fail(ErrorKind::fit, "frequency band must cover at least 1.5 decades of <xi>");
    GevreyDecayFit out;
    out.eps = eps;
    const auto env = detail::decay_envelope(samples, bins);
    if (env.size() < 4) {
        out.classification = "no Gevrey decay detected";
        return out;
    }
    std::vector<double> y;
    for (const auto& e : env)
        y.push_back(std::log(e.magnitude));
    double best = std::numeric_limits<double>::infinity();
    LineFit best_line;
    for (double s : s_grid) {
        if (!(s > 0.0))
            fail(ErrorKind::fit, "candidate Gevrey orders must be positive");
        std::vector<double> x;
        for (const auto& e : env)
            x.push_back(std::pow(e.bracket, 1.0 / s));
        const LineFit line = least_squares(x, y);
        const double r = line.residual / std::log(10.0);
        out.residual_by_s.emplace_back(s, r);
        if (r < best) {
            best = r;
            best_line = line;
            out.s_best = s;
        }
    }
    out.c = -best_line.slope;
    out.log_prefactor = best_line.intercept;
    out.residual = best;
    // Decay must account for most of the spread: the fitted drop across the
    // band has to dominate the scatter around the line.
    double ymin = y.front(), ymax = y.front();
    for (double v : y) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    const double drop = (ymax - ymin) / std::log(10.0);
    out.detected = out.c > 0.0 && drop > 1.0 && out.residual < 0.25 * drop;
    out.classification = out.detected ? "gevrey decay of order " + std::to_string(out.s_best)
                                      : "no Gevrey decay detected";
    return out;
}

/// Fit the eps-dependence of the prefactor, c' ~ eps^{-N}, at a common order s.
inline ScalingFit gevrey_prefactor_scaling(const std::vector<GevreyDecayFit>& fits)
{
    std::vector<std::pair<double, double>> samples;
    for (const auto& f : fits)
        samples.emplace_back(f.eps, std::exp(f.log_prefactor));
    return fit_power(samples);
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

enum class ReferenceKind { classical_solve, finest_eps };

inline const char* to_string(ReferenceKind r)
{
    return r == ReferenceKind::classical_solve ? "classical-solve" : "finest-eps";
}

/// Eight Gevrey bumps of varying centre and width used as ultradistribution probes.
inline std::vector<DataSpec> pairing_battery(int n = 1, double order = 1.5)
{
    const double centers[8] = {-1.5, -0.75, 0.0, 0.0, 0.5, 1.0, 1.75, -2.5};
    const double widths[8] = {1.0, 0.5, 2.0, 0.75, 1.25, 0.6, 1.5, 2.5};
    std::vector<DataSpec> out;
    for (int i = 0; i < 8; ++i) {
        Point c(static_cast<std::size_t>(n), 0.0);
        c[0] = centers[i];
        if (n == 2)
            c[1] = 0.5 * centers[7 - i];
        out.push_back({GevreyBump{order, c, widths[i]}, RegularityCase::gevrey, 1.0});
    }
    return out;
}

struct StudyOptions {
    PeriodicGrid grid{1, 16.0, 128};
    double cutoff = 20.0;
    std::vector<double> output_times{0.25, 0.5, 1.0};
    IntegratorConfig integrator;
    IntegratorConfig reference_integrator;
    unsigned workers = 0;

    StudyOptions()
    {
        integrator.step.rtol = 1e-12;
        integrator.step.atol = 1e-14;
        reference_integrator = integrator;
        reference_integrator.step.rtol = 1e-13;
        reference_integrator.step.atol = 1e-15;
    }
};

struct ConvergenceRow {
    double eps = 0.0;
    double field_error = 0.0;   // sup over output times and grid
    double pairing_error = 0.0; // max over the battery and output times
    std::size_t failed_cells = 0;
};

struct ConvergenceTable {
    ReferenceKind reference = ReferenceKind::classical_solve;
    std::vector<ConvergenceRow> rows;

    bool field_monotone() const
    {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (!(rows[i].field_error < rows[i - 1].field_error))
                return false;
        return !rows.empty();
    }
    bool pairing_monotone() const
    {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (!(rows[i].pairing_error < rows[i - 1].pairing_error))
                return false;
        return !rows.empty();
    }
};

/// Fields and pairings of one representative at the study's output times.
struct SolutionSnapshot {
    std::vector<std::vector<Complex>> coefficients; // [time][mode]
    std::vector<std::vector<double>> fields;        // [time][grid]
    std::size_t failed_cells = 0;
};

inline SolutionSnapshot solve_snapshot(const ProblemSetup& setup, const InitialData& data, double eps,
                                       const Lattice& lattice, const StudyOptions& opt, const IntegratorConfig& icfg,
                                       bool regularize_data = true)
{
    SweepOptions sw;
    sw.integrator = icfg;
    sw.integrator.output_times = opt.output_times;
    sw.workers = opt.workers;
    const auto cells = solve_lattice(setup, eps, lattice, mode_initializer(data, eps, regularize_data), sw);
    SolutionSnapshot snap;
    for (const auto& c : cells)
        if (!c.ok)
            ++snap.failed_cells;
    if (snap.failed_cells)
        fail(ErrorKind::divergence, std::to_string(snap.failed_cells) + " mode cells failed at eps="
                                        + std::to_string(eps) + ": " + std::find_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok; })->failure);
    for (std::size_t j = 0; j < opt.output_times.size(); ++j) {
        snap.coefficients.push_back(field_coefficients(cells, j));
        snap.fields.push_back(reconstruct_field(opt.grid, lattice, snap.coefficients.back()).u);
    }
    return snap;
}

namespace detail {

inline double sup_difference(const SolutionSnapshot& a, const SolutionSnapshot& b)
{
    double e = 0.0;
    for (std::size_t j = 0; j < a.fields.size(); ++j)
        for (std::size_t i = 0; i < a.fields[j].size(); ++i)
            e = std::max(e, std::abs(a.fields[j][i] - b.fields[j][i]));
    return e;
}

inline double pairing_difference(const SolutionSnapshot& a, const SolutionSnapshot& b, const PeriodicGrid& grid,
                                 const Lattice& lattice, const std::vector<FourierDatum>& battery)
{
    double e = 0.0;
    for (std::size_t j = 0; j < a.coefficients.size(); ++j) {
        std::vector<Complex> d(lattice.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = a.coefficients[j][i] - b.coefficients[j][i];
        for (const auto& test : battery)
            e = std::max(e, std::abs(pairing(grid, lattice, d, test)));
    }
    return e;
}

} // namespace detail

/// Per-eps distance of u_eps to the reference: classical solve with the
/// unmollified coefficients and data, or the finest-eps representative.
inline ConvergenceTable convergence_study(const ProblemSetup& setup, const InitialData& data, const EpsLadder& ladder,
                                          ReferenceKind reference, const StudyOptions& opt = {})
{
    ladder.validate();
    setup.validate();
    const Lattice lattice = retained_lattice(opt.grid, opt.cutoff);
    std::vector<FourierDatum> battery;
    for (const auto& t : pairing_battery(setup.n, setup.s))
        battery.push_back(fourier_of(t));

    SolutionSnapshot ref;
    std::vector<double> eps_list = ladder.values;
    if (reference == ReferenceKind::classical_solve) {
        ProblemSetup cls = setup;
        cls.classical = true;
        cls.validate();
        if (data.regularity() == RegularityCase::distribution)
            fail(ErrorKind::domain, "classical reference needs function data");
        ref = solve_snapshot(cls, data, ladder.values.front(), lattice, opt, opt.reference_integrator, false);
    } else {
        if (ladder.size() < 2)
            fail(ErrorKind::domain, "finest-eps reference needs at least two ladder values");
        ref = solve_snapshot(setup, data, ladder.values.back(), lattice, opt, opt.reference_integrator);
        eps_list.pop_back();
    }
    ConvergenceTable table;
    table.reference = reference;
    for (double eps : eps_list) {
        const auto snap = solve_snapshot(setup, data, eps, lattice, opt, opt.integrator);
        ConvergenceRow row;
        row.eps = eps;
        row.field_error = detail::sup_difference(snap, ref);
        row.pairing_error = detail::pairing_difference(snap, ref, opt.grid, lattice, battery);
        row.failed_cells = snap.failed_cells;
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Uniqueness probe
// ---------------------------------------------------------------------------

/// Negligible perturbation of a representative: additive mode data and/or
/// coefficient net terms (one per axis, may be empty).
struct Perturbation {
    std::function<Vec2c(double, const Frequency&)> data; // (eps, xi) -> delta V(0, xi)
    std::vector<NetTerm> a_terms;
    std::vector<NetTerm> b_terms;

    bool empty() const { return !data && a_terms.empty() && b_terms.empty(); }
};

struct UniquenessReport {
    std::vector<std::pair<double, double>> differences; // (eps, sup |u_pert - u|)
    std::optional<ScalingFit> fit;                      // absent when every difference is zero
    double decay_order = 0.0;                           // -slope
    NegligibilityReport negligibility;
    bool bitwise_equal = true;
};

inline UniquenessReport uniqueness_probe(const ProblemSetup& setup, const InitialData& data, const EpsLadder& ladder,
                                         const Perturbation& perturbation, const StudyOptions& opt = {})
{
    ladder.validate();
    const Lattice lattice = retained_lattice(opt.grid, opt.cutoff);
    ProblemSetup perturbed = setup;
    if (!perturbation.a_terms.empty())
        perturbed.a_perturbation = perturbation.a_terms;
    if (!perturbation.b_terms.empty())
        perturbed.b_perturbation = perturbation.b_terms;
    perturbed.validate();

    UniquenessReport rep;
    std::vector<NetNorm> norms;
    for (double eps : ladder.values) {
        SweepOptions sw;
        sw.integrator = opt.integrator;
        sw.integrator.output_times = opt.output_times;
        sw.workers = opt.workers;
        const auto init = mode_initializer(data, eps);
        const auto base = solve_lattice(setup, eps, lattice, init, sw);
        auto pinit = init;
        if (perturbation.data)
            pinit = [init, f = perturbation.data, eps](const Frequency& xi) -> Vec2c { return init(xi) + f(eps, xi); };
        const auto pert = solve_lattice(perturbed, eps, lattice, pinit, sw);
        double diff = 0.0;
        for (std::size_t j = 0; j < opt.output_times.size(); ++j) {
            for (std::size_t i = 0; i < base.size(); ++i) {
                if (!base[i].ok || !pert[i].ok)
                    fail(ErrorKind::divergence, "mode cell failed in uniqueness probe: "
                                                    + (base[i].ok ? pert[i].failure : base[i].failure));
                const auto& a = base[i].outputs[j].v;
                const auto& b = pert[i].outputs[j].v;
                if (a[0] != b[0] || a[1] != b[1])
                    rep.bitwise_equal = false;
            }
            const auto ua = reconstruct_field(opt.grid, lattice, field_coefficients(base, j)).u;
            const auto ub = reconstruct_field(opt.grid, lattice, field_coefficients(pert, j)).u;
            for (std::size_t i = 0; i < ua.size(); ++i)
                diff = std::max(diff, std::abs(ua[i] - ub[i]));
        }
        rep.differences.emplace_back(eps, diff);
        norms.push_back({eps, 0, diff});
    }
    std::vector<int> qs;
    for (int q = 0; q <= default_max_negligible_order; ++q)
        qs.push_back(q);
    rep.negligibility = test_negligible(norms, qs);
    const bool all_zero =
        std::all_of(rep.differences.begin(), rep.differences.end(), [](const auto& d) { return d.second == 0.0; });
    if (!all_zero && rep.differences.size() >= 4) {
        rep.fit = fit_power(rep.differences);
        rep.decay_order = -rep.fit->slope;
    } else if (all_zero) {
        rep.decay_order = std::numeric_limits<double>::infinity();
    }
    return rep;
}

} // namespace vws
