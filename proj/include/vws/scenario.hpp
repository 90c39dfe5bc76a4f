#pragma once

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cauchy_data.hpp"
#include "coefficients.hpp"
#include "error.hpp"
#include "net_analysis.hpp"
#include "scaling_fit.hpp"
#include "spectral_core.hpp"
#include "spectral_field.hpp"

namespace vws {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct VerifyOptions {
    bool gronwall = true;
    bool ks = true;
    bool mode_estimate = true;
    bool moderateness = true;
    bool gevrey_decay = true;
    bool dalembert = true; // only applied to constant-coefficient function data
};

struct ScenarioConfig {
    std::string name = "scenario";
    int n = 1;
    int k = 2;
    double s = 1.5;
    double T = 1.0;
    std::vector<std::vector<CoefficientAtom>> a_atoms; // per axis
    std::vector<std::vector<CoefficientAtom>> b_atoms;
    KernelShape kernel = KernelShape::bump;
    bool auto_scale = true;
    ScaleRule scale;
    InitialData data;
    EpsLadder ladder;
    PeriodicGrid grid;
    double cutoff = 0.0;
    IntegratorConfig integrator;
    std::vector<double> output_times;
    std::set<std::string> artifacts{"modes", "fields", "verify", "fits", "plotdata"};
    VerifyOptions verify;
    double failure_threshold = 0.05;
    unsigned workers = 0;
    Json echo; // normalised config including derived quantities

    int structure_order() const
    {
        int l = 0;
        for (const auto* all : {&a_atoms, &b_atoms})
            for (const auto& axis : *all)
                for (const auto& atom : axis)
                    if (std::holds_alternative<Dirac>(atom.kind) && atom.weight != 0.0)
                        l = 1;
        return l;
    }
    double sigma() const { return 1.0 + k / 2.0; }
    double growth_exponent() const { return (3.0 * structure_order() + k) / k; }

    ProblemSetup build_setup() const
    {
        ProblemSetup p;
        p.n = n;
        p.k = k;
        p.s = s;
        p.T = T;
        for (int i = 0; i < n; ++i) {
            p.a_nets.emplace_back(CoefficientSpec(a_atoms[i], CoefficientRole::a, i + 1, T), MollifierKernel(kernel), scale);
            p.b_nets.emplace_back(CoefficientSpec(b_atoms[i], CoefficientRole::b, i + 1, T), MollifierKernel(kernel), scale);
        }
        p.validate();
        return p;
    }

    /// True when a is a constant and b vanishes (closed-form wave solution).
    std::optional<double> constant_wave_speed() const
    {
        if (n != 1)
            return std::nullopt;
        double a = 0.0;
        for (const auto& atom : a_atoms[0]) {
            const auto* c = std::get_if<Constant>(&atom.kind);
            if (!c)
                return std::nullopt;
            a += atom.weight * c->value;
        }
        for (const auto& atom : b_atoms[0]) {
            const auto* c = std::get_if<Constant>(&atom.kind);
            if (!c || atom.weight * c->value != 0.0)
                return std::nullopt;
        }
        return std::sqrt(a);
    }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& field, const std::string& what)
{
    fail(ErrorKind::config, field + ": " + what);
}

inline const Json& require(const Json& j, const std::string& path, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        config_error(path.empty() ? key : path + "." + key, "required field missing");
    return j.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& field)
{
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        config_error(field, "wrong type");
    }
}

template <class T>
T value_or(const Json& j, const std::string& path, const char* key, T fallback)
{
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
        return fallback;
    return get_as<T>(j.at(key), path + "." + key);
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// (sum c_i t^i)^p with its derivative, supported on [lo, hi].
inline SmoothSample polynomial_atom(std::vector<double> c, double p, double lo, double hi, int smoothness)
{
    SmoothSample sm;
    auto poly = [c](double t) {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 0;)
            v = v * t + c[i];
        return v;
    };
    auto dpoly = [c](double t) {
        double v = 0.0;
        for (std::size_t i = c.size(); i-- > 1;)
            v = v * t + static_cast<double>(i) * c[i];
        return v;
    };
    sm.value = [poly, p](double t) { return std::pow(poly(t), p); };
    sm.derivative = [poly, dpoly, p](double t) { return p == 1.0 ? dpoly(t) : p * std::pow(poly(t), p - 1.0) * dpoly(t); };
    sm.lo = lo;
    sm.hi = hi;
    sm.smoothness = smoothness;
    std::ostringstream label;
    label << "polynomial^" << p;
    sm.label = label.str();
    return sm;
}

inline CoefficientAtom parse_atom(const Json& j, const std::string& path, double T)
{
    const auto type = get_as<std::string>(require(j, path, "type"), join(path, "type"));
    CoefficientAtom atom;
    atom.weight = value_or<double>(j, path, "weight", 1.0);
    if (type == "constant") {
        atom.kind = Constant{get_as<double>(require(j, path, "value"), join(path, "value"))};
    } else if (type == "heaviside") {
        atom.kind = Heaviside{get_as<double>(require(j, path, "t0"), join(path, "t0")),
                              get_as<double>(require(j, path, "t1"), join(path, "t1"))};
    } else if (type == "dirac") {
        atom.kind = Dirac{get_as<double>(require(j, path, "t"), join(path, "t"))};
    } else if (type == "polynomial") {
        const auto c = get_as<std::vector<double>>(require(j, path, "coefficients"), join(path, "coefficients"));
        if (c.empty())
            config_error(join(path, "coefficients"), "must not be empty");
        atom.kind = polynomial_atom(c, value_or<double>(j, path, "power", 1.0), value_or<double>(j, path, "lo", -1.0),
                                    value_or<double>(j, path, "hi", T + 1.0), value_or<int>(j, path, "smoothness", 2));
    } else {
        config_error(join(path, "type"), "unknown atom type '" + type + "' (constant, heaviside, dirac, polynomial)");
    }
    return atom;
}

inline Point parse_point(const Json& j, const std::string& field, int n)
{
    Point p = get_as<std::vector<double>>(j, field);
    if (static_cast<int>(p.size()) != n)
        config_error(field, "needs " + std::to_string(n) + " components");
    return p;
}

inline DataSpec parse_datum(const Json& j, const std::string& path, RegularityCase rc, int n)
{
    const auto type = get_as<std::string>(require(j, path, "type"), join(path, "type"));
    DataSpec d;
    d.regularity = rc;
    d.amplitude = value_or<double>(j, path, "amplitude", 1.0);
    const Point zero(static_cast<std::size_t>(n), 0.0);
    const auto point = [&](const char* key) {
        return j.contains(key) ? parse_point(j.at(key), join(path, key), n) : zero;
    };
    if (type == "gevrey_bump")
        d.kind = GevreyBump{value_or<double>(j, path, "order", 1.5), point("center"), value_or<double>(j, path, "width", 1.0)};
    else if (type == "smooth_bump")
        d.kind = SmoothBump{point("center"), value_or<double>(j, path, "width", 1.0)};
    else if (type == "dirac")
        d.kind = DiracPoint{point("x0")};
    else if (type == "dirac_derivative")
        d.kind = DiracDerivative{point("x0"), value_or<int>(j, path, "axis", 0)};
    else
        config_error(join(path, "type"), "unknown datum '" + type + "' (gevrey_bump, smooth_bump, dirac, dirac_derivative)");
    try {
        d.validate();
    } catch (const Error& e) {
        config_error(path, e.what());
    }
    return d;
}

inline RegularityCase parse_case(const std::string& s, const std::string& field)
{
    if (s == "gevrey")
        return RegularityCase::gevrey;
    if (s == "smooth")
        return RegularityCase::smooth;
    if (s == "distribution")
        return RegularityCase::distribution;
    config_error(field, "case must be gevrey, smooth or distribution");
}

inline Json scale_json(const ScaleRule& r)
{
    Json j;
    j["kind"] = to_string(r.kind);
    j["c"] = r.c;
    j["r"] = r.r;
    if (r.kind == ScaleKind::mixed_scale)
        j["r2"] = r.r2;
    return j;
}

} // namespace detail

/// Validates and normalises a scenario document. Errors name the field.
inline ScenarioConfig parse_config_json(const Json& root)
{
    using namespace detail;
    ScenarioConfig cfg;
    if (!root.is_object())
        config_error("<root>", "scenario must be a JSON object");
    cfg.name = value_or<std::string>(root, "", "name", "scenario");

    const Json empty = Json::object();
    const Json& prob = root.contains("problem") ? root.at("problem") : empty;
    cfg.n = value_or<int>(prob, "problem", "n", 1);
    cfg.k = value_or<int>(prob, "problem", "k", 2);
    cfg.s = value_or<double>(prob, "problem", "s", 1.5);
    cfg.T = value_or<double>(prob, "problem", "T", 1.0);
    if (cfg.n < 1 || cfg.n > 2)
        config_error("problem.n", "must be 1 or 2");
    if (cfg.k < 2)
        fail(ErrorKind::admissibility, "problem.k: coefficient class k must be >= 2");
    if (!(cfg.s > 1.0 && cfg.s < cfg.sigma()))
        fail(ErrorKind::admissibility, "problem.s: admissibility requires 1 < s < 1 + k/2 = " + std::to_string(cfg.sigma())
                                           + ", got s = " + std::to_string(cfg.s));
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T))
        config_error("problem.T", "must be positive");

    const Json& coef = require(root, "", "coefficients");
    for (const char* role : {"a", "b"}) {
        auto& dest = std::string(role) == "a" ? cfg.a_atoms : cfg.b_atoms;
        const std::string rpath = std::string("coefficients.") + role;
        if (!coef.contains(role)) {
            if (std::string(role) == "a")
                config_error(rpath, "required field missing");
            dest.assign(static_cast<std::size_t>(cfg.n), {CoefficientAtom{Constant{0.0}, 1.0}});
            continue;
        }
        const Json& axes = coef.at(role);
        if (!axes.is_array() || static_cast<int>(axes.size()) != cfg.n)
            config_error(rpath, "needs one atom list per axis (n = " + std::to_string(cfg.n) + ")");
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const std::string apath = rpath + "[" + std::to_string(i) + "]";
            if (!axes[i].is_array() || axes[i].empty())
                config_error(apath, "needs a nonempty atom list");
            std::vector<CoefficientAtom> atoms;
            for (std::size_t a = 0; a < axes[i].size(); ++a)
                atoms.push_back(parse_atom(axes[i][a], apath + "[" + std::to_string(a) + "]", cfg.T));
            try {
                CoefficientSpec(atoms, std::string(role) == "a" ? CoefficientRole::a : CoefficientRole::b,
                                static_cast<int>(i) + 1, cfg.T);
            } catch (const Error& e) {
                config_error(apath, e.what());
            }
            dest.push_back(std::move(atoms));
        }
    }

    const auto kernel = value_or<std::string>(root, "", "kernel", "bump");
    if (kernel == "bump")
        cfg.kernel = KernelShape::bump;
    else if (kernel == "steep_bump")
        cfg.kernel = KernelShape::steep_bump;
    else
        config_error("kernel", "must be bump or steep_bump");

    const Json& data = require(root, "", "data");
    const auto rc = parse_case(get_as<std::string>(require(data, "data", "case"), "data.case"), "data.case");
    cfg.data.g0 = parse_datum(require(data, "data", "g0"), "data.g0", rc, cfg.n);
    if (data.contains("g1") && !data.at("g1").is_null())
        cfg.data.g1 = parse_datum(data.at("g1"), "data.g1", rc, cfg.n);
    if (rc == RegularityCase::gevrey) {
        const double order = std::get<GevreyBump>(cfg.data.g0.kind).order;
        if (order > cfg.s + 1e-12)
            config_error("data.g0.order", "Gevrey data order must not exceed problem.s");
    }
    if (cfg.n == 2 && rc != RegularityCase::gevrey)
        fail(ErrorKind::capability, "data.case: regularised data are implemented for n = 1 only");

    if (!root.contains("scale") || (root.at("scale").is_string() && root.at("scale").get<std::string>() == "auto")) {
        cfg.auto_scale = true;
        cfg.scale = derive_scale_exponents(cfg.s, cfg.k, cfg.structure_order(), rc);
    } else {
        const Json& sc = root.at("scale");
        cfg.auto_scale = false;
        const auto kind = get_as<std::string>(require(sc, "scale", "kind"), "scale.kind");
        const double c = value_or<double>(sc, "scale", "c", 1.0), r = value_or<double>(sc, "scale", "r", 1.0);
        if (kind == "log")
            cfg.scale = ScaleRule::log(c, r);
        else if (kind == "power")
            cfg.scale = ScaleRule::power(c, r);
        else if (kind == "mixed")
            cfg.scale = ScaleRule::mixed(c, r, value_or<double>(sc, "scale", "r2", 0.0));
        else
            config_error("scale.kind", "must be log, power, mixed (or scale = \"auto\")");
        if (!(c > 0.0))
            config_error("scale.c", "must be positive");
    }

    const Json& lad = root.contains("ladder") ? root.at("ladder") : empty;
    if (lad.contains("values"))
        cfg.ladder.values = get_as<std::vector<double>>(lad.at("values"), "ladder.values");
    else
        cfg.ladder = EpsLadder::dyadic(value_or<int>(lad, "ladder", "first", 4), value_or<int>(lad, "ladder", "last", 12));
    cfg.ladder.floor = value_or<double>(lad, "ladder", "floor", cfg.ladder.values.empty() ? 0.0 : cfg.ladder.values.back());
    try {
        cfg.ladder.validate();
    } catch (const Error& e) {
        config_error("ladder", e.what());
    }

    const Json& grid = require(root, "", "grid");
    cfg.grid.n = cfg.n;
    cfg.grid.period = get_as<double>(require(grid, "grid", "domain_period"), "grid.domain_period");
    cfg.grid.points = get_as<int>(require(grid, "grid", "points"), "grid.points");
    if (!(cfg.grid.period > 0.0))
        config_error("grid.domain_period", "must be positive");
    if (cfg.grid.points < 64 || (cfg.grid.points & (cfg.grid.points - 1)) != 0)
        config_error("grid.points", "must be a power of two >= 64");
    cfg.cutoff = value_or<double>(grid, "grid", "frequency_cutoff", cfg.grid.nyquist());
    if (!(cfg.cutoff > 0.0) || cfg.cutoff > cfg.grid.nyquist())
        config_error("grid.frequency_cutoff", "must lie in (0, Nyquist = " + std::to_string(cfg.grid.nyquist()) + "]");

    const Json& integ = root.contains("integrator") ? root.at("integrator") : empty;
    cfg.integrator.step.rtol = value_or<double>(integ, "integrator", "rtol", 1e-10);
    cfg.integrator.step.atol = value_or<double>(integ, "integrator", "atol", 1e-12);
    cfg.integrator.h_max = value_or<double>(integ, "integrator", "h_max", 0.05);
    cfg.integrator.resolution = value_or<double>(integ, "integrator", "resolution", 10.0);
    cfg.integrator.step.max_steps = value_or<std::size_t>(integ, "integrator", "max_steps", cfg.integrator.step.max_steps);
    if (!(cfg.integrator.step.rtol > 0.0) || !(cfg.integrator.step.atol > 0.0))
        config_error("integrator.rtol", "tolerances must be positive");
    if (!(cfg.integrator.h_max > 0.0) || !(cfg.integrator.resolution > 0.0))
        config_error("integrator.h_max", "step caps must be positive");

    const Json& out = root.contains("outputs") ? root.at("outputs") : empty;
    cfg.output_times = value_or<std::vector<double>>(out, "outputs", "times", std::vector<double>{cfg.T});
    if (cfg.output_times.empty())
        config_error("outputs.times", "must not be empty");
    for (std::size_t i = 0; i < cfg.output_times.size(); ++i) {
        const double t = cfg.output_times[i];
        if (!(t > 0.0 && t <= cfg.T))
            config_error("outputs.times", "times must lie in (0, T]");
        if (i > 0 && !(t > cfg.output_times[i - 1]))
            config_error("outputs.times", "times must be strictly increasing");
    }
    if (out.contains("artifacts")) {
        cfg.artifacts.clear();
        for (const auto& a : get_as<std::vector<std::string>>(out.at("artifacts"), "outputs.artifacts")) {
            if (a != "modes" && a != "fields" && a != "verify" && a != "fits" && a != "plotdata")
                config_error("outputs.artifacts", "unknown artifact '" + a + "'");
            cfg.artifacts.insert(a);
        }
    }

    const Json& ver = root.contains("verify") ? root.at("verify") : empty;
    cfg.verify.gronwall = value_or<bool>(ver, "verify", "gronwall", true);
    cfg.verify.ks = value_or<bool>(ver, "verify", "ks", true);
    cfg.verify.mode_estimate = value_or<bool>(ver, "verify", "mode_estimate", true);
    cfg.verify.moderateness = value_or<bool>(ver, "verify", "moderateness", true);
    cfg.verify.gevrey_decay = value_or<bool>(ver, "verify", "gevrey_decay", true);
    cfg.verify.dalembert = value_or<bool>(ver, "verify", "dalembert", true);
    cfg.failure_threshold = value_or<double>(root, "", "failure_threshold", 0.05);
    if (!(cfg.failure_threshold >= 0.0 && cfg.failure_threshold <= 1.0))
        config_error("failure_threshold", "must lie in [0, 1]");
    cfg.workers = static_cast<unsigned>(std::max(0, value_or<int>(root, "", "workers", 0)));

    try {
        cfg.build_setup();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::admissibility || e.kind() == ErrorKind::config)
            throw;
        config_error("coefficients", e.what());
    }

    Json echo = root;
    echo["derived"] = {{"sigma", cfg.sigma()},
                       {"structure_order", cfg.structure_order()},
                       {"growth_exponent", cfg.growth_exponent()},
                       {"scale", scale_json(cfg.scale)},
                       {"scale_source", cfg.auto_scale ? "auto" : "config"},
                       {"nyquist", cfg.grid.nyquist()},
                       {"frequency_cutoff", cfg.cutoff},
                       {"ladder", cfg.ladder.values}};
    cfg.echo = std::move(echo);
    return cfg;
}

inline ScenarioConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open scenario file " + path.string());
    Json root;
    try {
        root = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::config, path.string() + ": malformed JSON: " + e.what());
    }
    return parse_config_json(root);
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

struct SuiteReport {
    std::string name;
    bool passed = true;
    bool skipped = false;
    Json details = Json::object();
};

struct EpsResult {
    double eps = 0.0;
    double omega = 1.0;
    std::vector<ModeCell> cells;
    std::vector<FieldSamples> fields; // per output time; empty when reconstruction failed
    std::string field_failure;
    std::size_t failed_cells = 0;
    double sup_final = 0.0;             // sup_xi |V_eps(T, xi)|
    double estimate_constant = 0.0;     // max over cells
    std::optional<GevreyDecayFit> decay;
    std::vector<std::vector<double>> pairings; // [time][battery]
};

struct RunResult {
    ScenarioConfig config;
    Lattice lattice;
    std::vector<EpsResult> per_eps;
    std::vector<SuiteReport> suites;
    std::vector<std::pair<std::string, ScalingFit>> fits;
    bool failed = false;
    std::string failure_reason;
    bool regularization_dependent = false;
    std::size_t cell_count = 0;
    double wall_seconds = 0.0;

    bool suites_passed() const
    {
        return !failed && std::all_of(suites.begin(), suites.end(), [](const auto& s) { return s.passed; });
    }
    const SuiteReport* suite(const std::string& name) const
    {
        for (const auto& s : suites)
            if (s.name == name)
                return &s;
        return nullptr;
    }
};

namespace detail {

/// Closed-form periodic solution for u_tt = c^2 u_xx, u_t(0) = 0.
inline double dalembert(const DataSpec& g0, double period, double c, double t, double x)
{
    double u = 0.0;
    for (int m = -2; m <= 2; ++m)
        u += 0.5 * (data_value(g0, {x - c * t + m * period}) + data_value(g0, {x + c * t + m * period}));
    return u;
}

} // namespace detail

inline RunResult run_scenario(const ScenarioConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    res.config = cfg;
    const ProblemSetup setup = cfg.build_setup();
    res.lattice = retained_lattice(cfg.grid, cfg.cutoff);
    res.regularization_dependent = cfg.data.regularity() == RegularityCase::distribution;

    // Solve at the requested times plus T.
    std::vector<double> times = cfg.output_times;
    if (std::abs(times.back() - cfg.T) > 1e-12 * cfg.T)
        times.push_back(cfg.T);
    const std::size_t final_index = times.size() - 1;

    SweepOptions sweep;
    sweep.integrator = cfg.integrator;
    sweep.integrator.output_times = times;
    sweep.check_gronwall = cfg.verify.gronwall || cfg.verify.ks;
    sweep.check_estimate = cfg.verify.mode_estimate;
    sweep.workers = cfg.workers;

    std::vector<FourierDatum> battery;
    if (res.regularization_dependent)
        for (const auto& t : pairing_battery(cfg.n, cfg.s))
            battery.push_back(fourier_of(t));

    for (double eps : cfg.ladder.values) {
        EpsResult er;
        er.eps = eps;
        er.omega = setup.omega(eps);
        er.cells = solve_lattice(setup, eps, res.lattice, mode_initializer(cfg.data, eps), sweep);
        for (const auto& c : er.cells) {
            if (!c.ok) {
                ++er.failed_cells;
                continue;
            }
            er.sup_final = std::max(er.sup_final, c.outputs[final_index].v.norm());
            if (c.estimate)
                er.estimate_constant = std::max(er.estimate_constant, c.estimate->constant);
        }
        res.cell_count += er.cells.size();
        try {
            for (std::size_t j = 0; j < cfg.output_times.size(); ++j) {
                const auto coeffs = field_coefficients(er.cells, j);
                er.fields.push_back(reconstruct_field(cfg.grid, res.lattice, coeffs));
                if (!battery.empty()) {
                    std::vector<double> p;
                    for (const auto& test : battery)
                        p.push_back(pairing(cfg.grid, res.lattice, coeffs, test));
                    er.pairings.push_back(std::move(p));
                }
            }
        } catch (const Error& e) {
            er.fields.clear();
            er.field_failure = e.what();
        }
        if (cfg.verify.gevrey_decay) {
            std::vector<DecaySample> samples;
            for (const auto& c : er.cells)
                if (c.ok)
                    samples.push_back({bracket(c.xi), c.outputs[final_index].v.norm()});
            try {
                er.decay = fit_gevrey_decay(samples, default_gevrey_grid(), eps);
            } catch (const Error&) {
                er.decay.reset(); // band too narrow or too few samples
            }
        }
        res.per_eps.push_back(std::move(er));
    }

    // -- suites -------------------------------------------------------------
    std::size_t failed = 0;
    for (const auto& e : res.per_eps)
        failed += e.failed_cells;
    {
        SuiteReport s{"cells"};
        const double rate = res.cell_count ? static_cast<double>(failed) / res.cell_count : 0.0;
        s.passed = failed == 0;
        s.details = {{"cells", res.cell_count}, {"failed", failed}, {"failure_rate", rate},
                     {"threshold", cfg.failure_threshold}};
        Json reasons = Json::array();
        for (const auto& e : res.per_eps)
            for (const auto& c : e.cells)
                if (!c.ok && reasons.size() < 20)
                    reasons.push_back({{"eps", e.eps}, {"xi", c.xi}, {"reason", c.failure}});
        s.details["failures"] = reasons;
        if (rate > cfg.failure_threshold) {
            res.failed = true;
            res.failure_reason = "cell failure rate " + std::to_string(rate) + " exceeds threshold";
        }
        res.suites.push_back(std::move(s));
    }
    if (cfg.verify.ks) {
        SuiteReport s{"ks"};
        std::size_t violations = 0;
        for (const auto& e : res.per_eps)
            for (const auto& c : e.cells)
                if (c.gronwall)
                    violations += c.gronwall->ks_violations;
        s.passed = violations == 0;
        s.details = {{"violations", violations}};
        res.suites.push_back(std::move(s));
    }
    if (cfg.verify.gronwall) {
        SuiteReport s{"gronwall"};
        std::size_t failing = 0, checked = 0;
        double worst = 0.0, min_c0 = 1.0, commutator = 0.0;
        Json per = Json::array();
        for (const auto& e : res.per_eps) {
            double w = 0.0;
            for (const auto& c : e.cells) {
                if (!c.gronwall)
                    continue;
                ++checked;
                if (!c.gronwall->passed)
                    ++failing;
                w = std::max(w, c.gronwall->worst_ratio);
                min_c0 = std::min(min_c0, c.gronwall->min_nearly_diagonal);
                commutator = std::max(commutator, c.gronwall->measured_commutator_constant);
            }
            worst = std::max(worst, w);
            per.push_back({{"eps", e.eps}, {"worst_ratio", w}});
        }
        s.passed = failing == 0;
        s.details = {{"checked", checked}, {"failing", failing}, {"worst_ratio", worst},
                     {"min_nearly_diagonal", min_c0}, {"measured_commutator_constant", commutator},
                     {"relative_tolerance", gronwall_rel_tol}, {"per_eps", per}};
        res.suites.push_back(std::move(s));
    }
    if (cfg.verify.mode_estimate) {
        SuiteReport s{"mode_estimate"};
        Json per = Json::array();
        double worst_ratio = 1.0;
        for (std::size_t i = 0; i < res.per_eps.size(); ++i) {
            const double c = res.per_eps[i].estimate_constant;
            per.push_back({{"eps", res.per_eps[i].eps}, {"constant", c}});
            if (i > 0) {
                const double p = res.per_eps[i - 1].estimate_constant;
                const double r = (p > 0.0 && c > 0.0) ? std::max(c / p, p / c) : (p == c ? 1.0 : INFINITY);
                worst_ratio = std::max(worst_ratio, r);
            }
        }
        s.passed = worst_ratio < 2.0;
        s.details = {{"per_eps", per}, {"max_consecutive_ratio", std::isfinite(worst_ratio) ? Json(worst_ratio) : Json("inf")}};
        res.suites.push_back(std::move(s));
    }
    if (cfg.verify.moderateness) {
        SuiteReport s{"moderateness"};
        std::vector<std::pair<double, double>> samples;
        for (const auto& e : res.per_eps)
            samples.emplace_back(e.eps, e.sup_final);
        if (samples.size() < 4) {
            s.skipped = true;
            s.details = {{"reason", "fewer than 4 ladder values"}};
        } else {
            try {
                const ScalingFit fit = fit_power(samples);
                res.fits.emplace_back("sup_modes_final", fit);
                s.passed = std::isfinite(fit.slope) && fit.residual < moderate_residual_log10
                           && fit.verdict != Verdict::divergent;
                s.details = {{"slope", fit.slope}, {"residual", fit.residual}, {"verdict", to_string(fit.verdict)}};
            } catch (const Error& e) {
                s.passed = false;
                s.details = {{"error", e.what()}};
            }
        }
        res.suites.push_back(std::move(s));
    }
    if (cfg.verify.gevrey_decay) {
        SuiteReport s{"gevrey_decay"};
        Json per = Json::array();
        std::vector<GevreyDecayFit> fits;
        for (const auto& e : res.per_eps) {
            if (!e.decay)
                continue;
            per.push_back({{"eps", e.eps}, {"detected", e.decay->detected}, {"s_best", e.decay->s_best},
                           {"c", e.decay->c}, {"residual", e.decay->residual}});
            fits.push_back(*e.decay);
        }
        if (fits.empty()) {
            s.skipped = true;
            s.details = {{"reason", "frequency band narrower than 1.5 decades"}};
        } else {
            s.details = {{"per_eps", per}};
            if (fits.size() >= 4) {
                try {
                    const auto sc = gevrey_prefactor_scaling(fits);
                    res.fits.emplace_back("gevrey_prefactor", sc);
                    s.details["prefactor_exponent_N"] = sc.slope;
                } catch (const Error&) {
                }
            }
        }
        res.suites.push_back(std::move(s)); // informational
    }
    {
        SuiteReport s{"hermitian"};
        double residue = 0.0;
        std::size_t flagged = 0;
        Json errors = Json::array();
        for (const auto& e : res.per_eps) {
            if (!e.field_failure.empty())
                errors.push_back({{"eps", e.eps}, {"reason", e.field_failure}});
            for (const auto& f : e.fields) {
                residue = std::max(residue, f.imag_residue);
                flagged += f.flagged ? 1 : 0;
            }
        }
        s.passed = errors.empty() && flagged == 0;
        s.details = {{"max_imaginary_residue", residue}, {"flagged_fields", flagged}, {"errors", errors}};
        res.suites.push_back(std::move(s));
    }
    const auto speed = cfg.constant_wave_speed();
    if (cfg.verify.dalembert && speed && !cfg.data.g1 && cfg.data.regularity() == RegularityCase::gevrey) {
        SuiteReport s{"dalembert"};
        double err = 0.0;
        Json per = Json::array();
        for (const auto& e : res.per_eps) {
            for (std::size_t j = 0; j < e.fields.size(); ++j) {
                double ej = 0.0;
                for (int i = 0; i < cfg.grid.points; ++i)
                    ej = std::max(ej, std::abs(e.fields[j].u[i]
                                               - detail::dalembert(cfg.data.g0, cfg.grid.period, *speed,
                                                                   cfg.output_times[j], cfg.grid.x(i))));
                per.push_back({{"eps", e.eps}, {"t", cfg.output_times[j]}, {"sup_error", ej}});
                err = std::max(err, ej);
            }
            if (e.fields.empty())
                err = INFINITY;
        }
        s.passed = err <= 1e-5;
        s.details = {{"sup_error", std::isfinite(err) ? Json(err) : Json("inf")}, {"tolerance", 1e-5}, {"per_output", per}};
        res.suites.push_back(std::move(s));
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// 17 significant digits.
inline std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const Json& j, int indent = 0)
{
    const std::string pad(static_cast<std::size_t>(indent + 2), ' '), close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            os << (first ? "" : ",\n") << pad << Json(it.key()).dump() << ": ";
            write_json(os, it.value(), indent + 2);
            first = false;
        }
        os << "\n" << close << "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << (i ? ",\n" : "") << pad;
            write_json(os, j[i], indent + 2);
        }
        os << "\n" << close << "]";
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (std::isfinite(v))
            os << format_real(v);
        else
            os << Json(format_real(v)).dump();
        return;
    }
    default:
        os << j.dump();
    }
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p);
    if (!out)
        fail(ErrorKind::io, "cannot write " + p.string());
    return out;
}

inline Json fit_json(const ScalingFit& f)
{
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"residual", f.residual},
            {"verdict", to_string(f.verdict)},
            {"order", f.order},
            {"slope_first_half", f.slope_first_half},
            {"slope_second_half", f.slope_second_half}};
}

} // namespace detail

inline std::string dump_json(const Json& j)
{
    std::ostringstream os;
    detail::write_json(os, j);
    os << "\n";
    return os.str();
}

inline Json verify_json(const RunResult& r)
{
    Json j;
    j["scenario"] = r.config.name;
    j["status"] = r.failed ? "failed" : (r.suites_passed() ? "passed" : "suite_failures");
    if (r.failed)
        j["failure_reason"] = r.failure_reason;
    j["regularization_dependent_fields"] = r.regularization_dependent;
    Json suites = Json::object();
    for (const auto& s : r.suites) {
        Json d = s.details;
        d["passed"] = s.passed;
        if (s.skipped)
            d["skipped"] = true;
        suites[s.name] = d;
    }
    j["suites"] = suites;
    return j;
}

inline Json fits_json(const RunResult& r)
{
    Json j = Json::object();
    for (const auto& [name, f] : r.fits)
        j[name] = detail::fit_json(f);
    Json decay = Json::array();
    for (const auto& e : r.per_eps)
        if (e.decay)
            decay.push_back({{"eps", e.eps},
                             {"classification", e.decay->classification},
                             {"s_best", e.decay->s_best},
                             {"c", e.decay->c},
                             {"log_prefactor", e.decay->log_prefactor},
                             {"residual", e.decay->residual}});
    j["gevrey_decay"] = decay;
    return j;
}

/// Writes the requested artifacts and returns the written paths.
inline std::vector<std::filesystem::path> emit_outputs(const RunResult& r, const std::filesystem::path& outdir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec)
        fail(ErrorKind::io, "cannot create " + outdir.string() + ": " + ec.message());
    std::vector<fs::path> manifest;
    const auto& cfg = r.config;
    const bool two_d = cfg.n == 2;
    const auto wants = [&](const char* a) { return cfg.artifacts.count(a) > 0; };

    if (wants("modes")) {
        const auto p = outdir / "modes.csv";
        auto out = detail::open_out(p);
        out << (two_d ? "eps,xi,xi2,t,reV1,imV1,reV2,imV2,energy\n" : "eps,xi,t,reV1,imV1,reV2,imV2,energy\n");
        for (const auto& e : r.per_eps)
            for (const auto& c : e.cells)
                for (std::size_t j = 0; j < cfg.output_times.size(); ++j) {
                    out << format_real(e.eps) << ',' << format_real(c.xi[0]) << ',';
                    if (two_d)
                        out << format_real(c.xi[1]) << ',';
                    out << format_real(cfg.output_times[j]) << ',';
                    if (c.ok) {
                        const auto& s = c.outputs[j];
                        out << format_real(s.v[0].real()) << ',' << format_real(s.v[0].imag()) << ','
                            << format_real(s.v[1].real()) << ',' << format_real(s.v[1].imag()) << ','
                            << format_real(s.energy) << '\n';
                    } else {
                        out << "nan,nan,nan,nan,nan\n";
                    }
                }
        manifest.push_back(p);
    }
    if (wants("fields")) {
        const auto p = outdir / "fields.csv";
        auto out = detail::open_out(p);
        out << (two_d ? "eps,t,x,x2,u\n" : "eps,t,x,u\n");
        for (const auto& e : r.per_eps)
            for (std::size_t j = 0; j < e.fields.size(); ++j)
                for (std::size_t i = 0; i < e.fields[j].u.size(); ++i) {
                    out << format_real(e.eps) << ',' << format_real(cfg.output_times[j]) << ',';
                    if (two_d)
                        out << format_real(cfg.grid.x(static_cast<int>(i) / cfg.grid.points)) << ','
                            << format_real(cfg.grid.x(static_cast<int>(i) % cfg.grid.points)) << ',';
                    else
                        out << format_real(cfg.grid.x(static_cast<int>(i))) << ',';
                    out << format_real(e.fields[j].u[i]) << '\n';
                }
        manifest.push_back(p);
    }
    if (wants("verify")) {
        const auto p = outdir / "verify.json";
        detail::open_out(p) << dump_json(verify_json(r));
        manifest.push_back(p);
        const auto c = outdir / "config.json";
        detail::open_out(c) << dump_json(cfg.echo.is_null() ? Json::object() : cfg.echo);
        manifest.push_back(c);
    }
    if (wants("fits")) {
        const auto p = outdir / "fits.json";
        detail::open_out(p) << dump_json(fits_json(r));
        manifest.push_back(p);
    }
    if (wants("plotdata")) {
        const auto dir = outdir / "plotdata";
        fs::create_directories(dir, ec);
        if (ec)
            fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
        const auto series = [&](const std::string& name, const std::vector<std::pair<double, double>>& xy) {
            const auto p = dir / name;
            auto out = detail::open_out(p);
            for (const auto& [x, y] : xy)
                out << format_real(x) << ' ' << format_real(y) << '\n';
            manifest.push_back(p);
        };
        std::vector<std::pair<double, double>> sup, est;
        for (const auto& e : r.per_eps) {
            sup.emplace_back(e.eps, e.sup_final);
            est.emplace_back(e.eps, e.estimate_constant);
        }
        series("sup_modes_final.dat", sup);
        series("mode_estimate_constant.dat", est);
        for (std::size_t k = 0; k < r.per_eps.size(); ++k) {
            const auto& e = r.per_eps[k];
            if (!two_d)
                for (std::size_t j = 0; j < e.fields.size(); ++j) {
                    std::vector<std::pair<double, double>> xy;
                    for (std::size_t i = 0; i < e.fields[j].u.size(); ++i)
                        xy.emplace_back(cfg.grid.x(static_cast<int>(i)), e.fields[j].u[i]);
                    series("field_eps" + std::to_string(k) + "_t" + std::to_string(j) + ".dat", xy);
                }
            for (std::size_t j = 0; j < e.pairings.size(); ++j) {
                std::vector<std::pair<double, double>> xy;
                for (std::size_t b = 0; b < e.pairings[j].size(); ++b)
                    xy.emplace_back(static_cast<double>(b), e.pairings[j][b]);
                series("pairing_eps" + std::to_string(k) + "_t" + std::to_string(j) + ".dat", xy);
            }
        }
    }
    return manifest;
}

} // namespace vws
