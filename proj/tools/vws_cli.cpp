#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vws/quasisym_suite.hpp"
#include "vws/scaling_fit.hpp"
#include "vws/scenario.hpp"

namespace {

// exit codes: 0 all suites passed, 2 suite failures, 1 execution error
constexpr int exit_pass = 0;
constexpr int exit_error = 1;
constexpr int exit_suite_failure = 2;

int cmd_run(const std::string& config, const std::string& outdir, int workers)
{
    auto cfg = vws::parse_config(config);
    if (workers > 0)
        cfg.workers = static_cast<unsigned>(workers);
    const auto result = vws::run_scenario(cfg);
    const auto dir = outdir.empty() ? std::filesystem::path("results") / cfg.name : std::filesystem::path(outdir);
    const auto manifest = vws::emit_outputs(result, dir);
    std::printf("scenario %s: %zu cells over %zu eps values in %.2f s\n", cfg.name.c_str(), result.cell_count,
                result.per_eps.size(), result.wall_seconds);
    for (const auto& s : result.suites)
        std::printf("  %-14s %s\n", s.name.c_str(), s.skipped ? "SKIP" : (s.passed ? "PASS" : "FAIL"));
    if (result.failed)
        std::printf("  run failed: %s\n", result.failure_reason.c_str());
    if (result.regularization_dependent)
        std::printf("  note: raw fields depend on the data regularisation; compare pairings instead\n");
    for (const auto& p : manifest)
        std::printf("  wrote %s\n", p.string().c_str());
    return result.suites_passed() ? exit_pass : exit_suite_failure;
}

int cmd_verify_quasisym(int m, int samples, double tol, std::uint64_t seed)
{
    const auto rep = vws::run_quasisym_suite(m, samples, tol, seed);
    std::printf("quasi-symmetriser suite: m=%d samples=%d tol=%g\n", m, samples, tol);
    for (const auto& [id, n] : rep.failures) {
        const auto w = rep.worst.find(id);
        std::printf("  %-16s %s  failures=%d", id.c_str(), n == 0 ? "PASS" : "FAIL", n);
        if (w != rep.worst.end())
            std::printf("  worst=%.3e", w->second);
        std::printf("\n");
    }
    if (m == 2)
        std::printf("  min nearly-diagonal constant %.6f, max commutator error %.3e, outside S_2: %d\n",
                    rep.min_nearly_diagonal, rep.max_commutator_error, rep.not_in_s2);
    return rep.passed() ? exit_pass : exit_suite_failure;
}

/// Reads (eps, norm) pairs from a CSV with a header row.
std::vector<std::pair<double, double>> read_pairs(const std::string& path, const std::string& eps_col,
                                                  const std::string& value_col)
{
    std::ifstream in(path);
    if (!in)
        vws::fail(vws::ErrorKind::io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        vws::fail(vws::ErrorKind::io, path + " is empty");
    const auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ','))
            out.push_back(cell);
        return out;
    };
    const auto header = split(line);
    int ie = -1, iv = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        if (header[i] == eps_col)
            ie = i;
        if (header[i] == value_col)
            iv = i;
    }
    if (ie < 0 || iv < 0)
        vws::fail(vws::ErrorKind::config, path + ": columns '" + eps_col + "' and '" + value_col + "' required");
    std::vector<std::pair<double, double>> out;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (static_cast<int>(cells.size()) <= std::max(ie, iv))
            vws::fail(vws::ErrorKind::config, path + ": short row '" + line + "'");
        out.emplace_back(std::stod(cells[ie]), std::stod(cells[iv]));
    }
    return out;
}

int cmd_fit(const std::string& path, const std::string& eps_col, const std::string& value_col)
{
    const auto fit = vws::fit_power(read_pairs(path, eps_col, value_col));
    vws::Json j = {{"slope", fit.slope},
                   {"intercept", fit.intercept},
                   {"residual", fit.residual},
                   {"verdict", vws::to_string(fit.verdict)},
                   {"order", fit.order},
                   {"slope_first_half", fit.slope_first_half},
                   {"slope_second_half", fit.slope_second_half}};
    std::cout << vws::dump_json(j);
    return exit_pass;
}

int cmd_report(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        vws::fail(vws::ErrorKind::io, "cannot open " + path);
    const auto j = vws::Json::parse(in);
    std::printf("scenario %s: %s\n", j.value("scenario", "?").c_str(), j.value("status", "?").c_str());
    bool ok = j.value("status", "") == "passed";
    for (const auto& [name, suite] : j.at("suites").items()) {
        const bool skipped = suite.value("skipped", false);
        const bool passed = suite.value("passed", false);
        std::printf("  %-14s %s\n", name.c_str(), skipped ? "SKIP" : (passed ? "PASS" : "FAIL"));
        for (const auto& [key, value] : suite.items()) {
            if (key == "passed" || key == "skipped" || value.is_array() || value.is_object())
                continue;
            std::printf("      %s = %s\n", key.c_str(), value.dump().c_str());
        }
    }
    return ok ? exit_pass : exit_suite_failure;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral solver and verification harness for weakly hyperbolic wave equations"};
    app.require_subcommand(1);

    std::string config, outdir;
    int workers = 0;
    auto* run = app.add_subcommand("run", "run a scenario and write its artifacts");
    run->add_option("config", config, "scenario JSON file")->required();
    run->add_option("--out", outdir, "output directory (default results/<name>)");
    run->add_option("--workers", workers, "worker threads (overrides config and VWS_WORKERS)");

    int m = 2, samples = 1000;
    double tol = 1e-10;
    std::uint64_t seed = 20240601;
    auto* qs = app.add_subcommand("verify-quasisym", "randomised structural checks of the quasi-symmetriser");
    qs->add_option("--m", m, "matrix size")->check(CLI::Range(2, vws::quasisym_size_cap));
    qs->add_option("--samples", samples, "random (lambda, delta) samples")->check(CLI::PositiveNumber);
    qs->add_option("--tol", tol, "relative tolerance")->check(CLI::PositiveNumber);
    qs->add_option("--seed", seed, "random seed");

    std::string csv, eps_col = "eps", value_col = "norm";
    auto* fit = app.add_subcommand("fit", "power-law fit of norms against 1/eps from a CSV");
    fit->add_option("csv", csv, "CSV with a header row")->required();
    fit->add_option("--eps-column", eps_col, "name of the eps column");
    fit->add_option("--value-column", value_col, "name of the norm column");

    std::string verify;
    auto* report = app.add_subcommand("report", "render a verify.json as text");
    report->add_option("verify_json", verify, "path to verify.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_pass : exit_error;
    }
    try {
        if (*run)
            return cmd_run(config, outdir, workers);
        if (*qs)
            return cmd_verify_quasisym(m, samples, tol, seed);
        if (*fit)
            return cmd_fit(csv, eps_col, value_col);
        if (*report)
            return cmd_report(verify);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_error;
    }
    return exit_error;
}
