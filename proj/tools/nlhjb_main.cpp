// Copyright 2026 the nlhjb authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or
// at http://www.apache.org/licenses/LICENSE-2.0

// Batch front-end: load a problem config, run solve / extract / simulate /
// verify / nonexist / barrier pipelines, emit CSV tables and a manifest.
// Exit codes: 0 ok, 1 validation error, 2 solver error, 3 property failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlhjb/ergodic.hpp"
#include "nlhjb/io.hpp"
#include "nlhjb/levy.hpp"
#include "nlhjb/problem.hpp"
#include "nlhjb/solver.hpp"
#include "nlhjb/verify.hpp"

namespace fs = std::filesystem;
using namespace nlhjb;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::string spec_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    int threads = 1;
};

void write_manifest(const CommonOpts& o, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream ms(fs::path(o.out_dir) / "manifest.txt");
    ms << "command = " << command << "\n";
    ms << "spec = " << o.spec_path << "\n";
    ms << "out = " << o.out_dir << "\n";
    ms << "seed = " << o.seed << "\n";
    ms << "tol = " << fmt17(o.tol) << "\n";
    ms << "threads = " << o.threads << "\n";
    ms << "version = " << kVersion << "\n";
    const auto now = std::chrono::system_clock::now();
    ms << "timestamp = "
       << std::chrono::duration_cast<std::chrono::seconds>(
              now.time_since_epoch())
              .count()
       << "\n";
    for (const auto& [k, v] : extra) ms << k << " = " << v << "\n";
}

RunConfig load_spec(const CommonOpts& o) {
    RunConfig rc = parse_config_file(o.spec_path);
    const ValidationReport rep = validate_spec(rc.spec);
    std::ofstream vs(fs::path(o.out_dir) / "validation.csv");
    write_validation_report(vs, rep);
    if (!rep.all_pass())
        throw std::invalid_argument("spec failed assumption validation");
    rc.spec = normalize_source(rc.spec);
    return rc;
}

ExtractConfig extract_config_for(const RunConfig& rc, double tol) {
    ExtractConfig cfg = ExtractConfig::defaults();
    cfg.h = rc.grid_h;
    cfg.solver.tol_residual = tol;
    const auto it = rc.raw.find("alpha.ladder");
    if (it != rc.raw.end()) {
        cfg.alpha_sequence.clear();
        std::istringstream ls(it->second);
        std::string tok;
        while (std::getline(ls, tok, ','))
            cfg.alpha_sequence.push_back(std::strtod(tok.c_str(), nullptr));
    }
    return cfg;
}

void write_lambda_rows(const fs::path& path, const EigenDiagnostics& diag) {
    std::vector<LambdaTableRow> rows;
    for (std::size_t k = 0; k < diag.runs.size(); ++k) {
        const auto& run = diag.runs[k];
        for (std::size_t j = 0; j < run.radii.size(); ++j)
            rows.push_back({run.alpha, run.radii[j], run.lambda_raw[j],
                            run.residuals[j]});
        // stabilized (tail-corrected) value: n = inf marks the domain limit
        rows.push_back({run.alpha, std::numeric_limits<double>::infinity(),
                        run.lambda_alpha, run.corrected_residual});
    }
    std::ofstream os(path);
    write_lambda_table(os, rows);
}

int cmd_solve(const CommonOpts& o, double alpha, double radius) {
    const RunConfig rc = load_spec(o);
    DiscountedProblem prob{rc.spec, alpha,
                           radius > 0.0 ? radius : rc.spec.truncation_plan.back(),
                           rc.grid_h};
    SolverConfig cfg = SolverConfig::defaults();
    cfg.tol_residual = o.tol;
    const DiscreteSolution sol = solve_dirichlet(prob, cfg);
    write_grid_function((fs::path(o.out_dir) / "solution.csv").string(), sol.w);
    {
        std::ofstream os(fs::path(o.out_dir) / "convergence.csv");
        os << "iter,residual_sup,policy_changes\n";
        for (const auto& r : sol.log)
            os << r.iter << "," << fmt17(r.residual_sup) << ","
               << r.policy_changes << "\n";
    }
    write_manifest(o, "solve",
                   {{"alpha", fmt17(alpha)}, {"radius", fmt17(prob.radius_n)}});
    std::printf("solve: residual %.3e after %d iterations\n", sol.residual_norm,
                sol.iterations);
    return 0;
}

int cmd_extract(const CommonOpts& o) {
    const RunConfig rc = load_spec(o);
    const ExtractConfig cfg = extract_config_for(rc, o.tol);
    const EigenPair ep = extract_eigenpair(rc.spec, cfg);
    write_grid_function((fs::path(o.out_dir) / "eigenpair.csv").string(), ep.u);
    write_lambda_rows(fs::path(o.out_dir) / "lambda_table.csv", ep.diagnostics);
    {
        std::ofstream os(fs::path(o.out_dir) / "certificates.csv");
        os << "lambda_low,lambda_star,lambda_up\n";
        os << fmt17(ep.lambda_lower) << "," << fmt17(ep.lambda_star) << ","
           << fmt17(ep.lambda_upper) << "\n";
    }
    write_manifest(o, "extract", {{"lambda_star", fmt17(ep.lambda_star)}});
    std::printf("extract: lambda* = %.6f in [%.6f, %.6f], q = %.3f\n",
                ep.lambda_star, ep.lambda_lower, ep.lambda_upper,
                ep.diagnostics.q_fit);
    return 0;
}

int cmd_simulate(const CommonOpts& o, const std::string& eigen_path,
                 const std::string& policy_name, double lambda_star,
                 std::size_t paths, double dt, double horizon,
                 double return_radius) {
    const RunConfig rc = load_spec(o);
    GridFunction u = read_grid_function(eigen_path);
    ControlPolicy policy;
    if (policy_name == "feedback")
        policy = ControlPolicy::feedback_from(rc.spec, u, "b_u from eigenpair");
    else if (policy_name == "zero")
        policy = ControlPolicy::zero();
    else if (policy_name.rfind("constant:", 0) == 0)
        policy = ControlPolicy::constant_drift(
            std::strtod(policy_name.c_str() + 9, nullptr));
    else
        throw std::invalid_argument("unknown policy: " + policy_name);

    PathConfig pc;
    pc.dt = dt;
    pc.horizon_T = horizon;
    pc.n_paths = paths;
    pc.seed = o.seed;
    pc.threads = o.threads;
    pc.return_radius = return_radius;
    if (!return_set_admissible(rc.spec, lambda_star, pc.return_radius))
        throw std::invalid_argument(
            "return set too small for the sublevel set of the running cost");

    std::vector<PathAccumulator> accs(pc.n_paths);
    for (std::size_t p = 0; p < pc.n_paths; ++p)
        accs[p] = simulate_path(policy, rc.spec, pc, p);
    {
        std::ofstream os(fs::path(o.out_dir) / "paths.csv");
        os << "path_id,time_avg_cost,return_time,flag\n";
        for (std::size_t p = 0; p < pc.n_paths; ++p)
            os << p << "," << fmt17(accs[p].time_averaged_cost) << ","
               << fmt17(accs[p].first_return_time) << ","
               << (accs[p].blown_up ? "transient" : "ok") << "\n";
    }
    const SimEstimate est = estimate_long_run_cost(policy, rc.spec, pc);
    {
        std::ofstream os(fs::path(o.out_dir) / "estimate.csv");
        os << "mean,stderr,n_paths,seed,dt,flagged,reliable\n";
        os << fmt17(est.mean) << "," << fmt17(est.stderr_) << "," << est.n_paths
           << "," << est.seed << "," << fmt17(est.dt) << "," << est.flagged
           << "," << (est.reliable ? 1 : 0) << "\n";
    }
    write_manifest(o, "simulate",
                   {{"policy", policy_name}, {"paths", std::to_string(paths)}});
    std::printf("simulate: long-run cost %.5f +- %.5f (%zu paths%s)\n", est.mean,
                est.stderr_, est.n_paths, est.reliable ? "" : ", unreliable");
    return 0;
}

int cmd_verify(const CommonOpts& o, const std::string& suite) {
    std::vector<CheckRow> rows;
    const bool fast = suite == "fast";

    rows.push_back(fuzz_comparison(fast ? 20 : 100, o.seed));

    {  // Legendre duality spot check
        ProblemSpec spec;
        spec.order.s = 0.75;
        spec.hamiltonian = HamiltonianSpec::power_law(2.5);
        spec.kernel = KernelSpec::fractional_laplacian(1, 0.75);
        spec.source = SourceTerm::power_growth(1.0, 0.5);
        spec.truncation_plan = {8.0};
        CheckRow row;
        row.name = "legendre_duality";
        row.pass = true;
        double worst = 0.0;
        std::mt19937_64 rng(o.seed + 1);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int k = 0; k < 2000; ++k) {
            const double p = uni(rng) * 8.0;
            double best = -1e300;
            for (int j = 0; j <= 4000; ++j) {
                const double xi = -40.0 + 80.0 * j / 4000.0;
                best = std::max(best, p * xi - eval_lagrangian(spec, 0.0, xi));
            }
            const double H = eval_H(spec, 0.0, p);
            worst = std::max(worst, std::abs(H - best) / (1.0 + std::abs(H)));
        }
        row.pass = worst <= 1e-4;
        row.metrics = "max_rel_gap=" + fmt17(worst);
        rows.push_back(row);
    }

    {  // H3 rescaling inequality
        ProblemSpec spec;
        spec.order.s = 0.8;
        spec.hamiltonian = HamiltonianSpec::power_law(2.0);
        spec.kernel = KernelSpec::fractional_laplacian(1, 0.8);
        spec.source = SourceTerm::power_growth(1.0, 0.5);
        spec.truncation_plan = {8.0};
        const H3Report h3 = check_H3_inequality(spec, 4000, o.seed + 2);
        CheckRow row;
        row.name = "H3_rescaling";
        row.pass = h3.pass;
        row.metrics = "min_slack=" + fmt17(h3.min_slack);
        rows.push_back(row);
    }

    {  // operator symbol spot oracle
        const double s = 0.7, k = 2.0;
        const double L = 8.0 * M_PI;
        const std::size_t N = fast ? 1024 : 2048;
        GridFunction u(-L, 2.0 * L / N, N + 1,
                       FarFieldModel::periodic(2.0 * M_PI / k));
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(k * u.x(i));
        auto ker = KernelSpec::fractional_laplacian(1, s);
        double maxrel = 0.0;
        const double scale = std::pow(k, 2.0 * s);
        for (std::size_t i = 2; i + 2 < u.size(); ++i) {
            if (std::abs(u.x(i)) > 0.5 * L) continue;
            const double got = -apply_operator(u, ker, i);
            maxrel = std::max(
                maxrel, std::abs(got - scale * std::cos(k * u.x(i))) / scale);
        }
        CheckRow row;
        row.name = "operator_symbol";
        row.pass = maxrel <= 2e-3;
        row.metrics = "max_rel=" + fmt17(maxrel);
        rows.push_back(row);
    }

    {  // tail seminorm monotonicity in a
        GridFunction u = GridFunction::symmetric(8.0, 0.125, FarFieldModel::zero());
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] = std::exp(-0.3 * u.x(i) * u.x(i));
        auto ker = KernelSpec::fractional_laplacian(1, 0.75);
        const double h1 = tail_seminorm_ball(u, ker, 2.0, 1.0);
        const double h2 = tail_seminorm_ball(u, ker, 2.0, 2.0);
        CheckRow row;
        row.name = "seminorm_monotone";
        row.pass = h2 <= h1 && h1 >= 0.0;
        row.metrics = "H(1)=" + fmt17(h1) + " H(2)=" + fmt17(h2);
        rows.push_back(row);
    }

    std::ofstream os(fs::path(o.out_dir) / "verify.csv");
    write_check_rows(os, rows);
    write_manifest(o, "verify", {{"suite", suite}});
    bool all = true;
    for (const auto& r : rows) {
        std::printf("%-20s %s %s\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                    r.metrics.c_str());
        all = all && r.pass;
    }
    return all ? 0 : 3;
}

int cmd_nonexist(const CommonOpts& o, double alpha) {
    const RunConfig rc = load_spec(o);
    std::vector<double> ladder;
    if (rc.spec.truncation_plan.size() >= 4)
        ladder = rc.spec.truncation_plan;
    const DivergenceReport rep =
        detect_nonexistence(rc.spec, alpha, ladder, rc.grid_h);
    {
        std::ofstream os(fs::path(o.out_dir) / "lambda_ladder.csv");
        os << "n,lambda_n,factor\n";
        for (std::size_t k = 0; k < rep.radii.size(); ++k)
            os << fmt17(rep.radii[k]) << "," << fmt17(rep.lambda_n[k]) << ","
               << (k > 0 ? fmt17(rep.factors[k - 1]) : std::string("")) << "\n";
    }
    write_manifest(o, "nonexist",
                   {{"diverged", rep.diverged ? "true" : "false"}});
    std::printf("nonexist: %s\n", rep.diverged ? "divergence declared"
                                               : "no divergence detected");
    return 0;
}

int cmd_barrier(const CommonOpts& o) {
    const RunConfig rc = load_spec(o);
    const BarrierModel bar =
        build_barrier(rc.spec, rc.spec.max_radius() + 2.0, rc.grid_h);
    write_grid_function((fs::path(o.out_dir) / "barrier.csv").string(), bar.V);
    {
        std::ofstream os(fs::path(o.out_dir) / "barrier_constants.csv");
        os << "beta,kappa0,kappa1,R0\n";
        os << fmt17(bar.beta) << "," << fmt17(bar.kappa0) << ","
           << fmt17(bar.kappa1) << "," << fmt17(bar.R0) << "\n";
    }
    write_manifest(o, "barrier", {{"beta", fmt17(bar.beta)}});
    std::printf("barrier: beta=%.4f kappa0=%.4f kappa1=%.5f R0=%.1f\n", bar.beta,
                bar.kappa0, bar.kappa1, bar.R0);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlocal ergodic Hamilton-Jacobi solver and verifier"};
    app.require_subcommand(1);

    CommonOpts opts;
    double alpha = 0.1, radius = 0.0, dt = 0.01, horizon = 200.0;
    double lambda_star = 0.0, return_radius = 8.0;
    std::size_t paths = 1000;
    std::string eigen_path, policy = "feedback", suite = "all";

    auto add_common = [&](CLI::App* cmd, bool needs_spec) {
        if (needs_spec)
            cmd->add_option("--spec", opts.spec_path, "problem config file")
                ->required();
        cmd->add_option("--out", opts.out_dir, "output directory")->required();
        cmd->add_option("--seed", opts.seed, "rng seed");
        cmd->add_option("--tol", opts.tol, "solver tolerance");
        cmd->add_option("--threads", opts.threads, "worker cap");
    };

    auto* c_solve = app.add_subcommand("solve", "single discounted Dirichlet solve");
    add_common(c_solve, true);
    c_solve->add_option("--alpha", alpha, "discount rate");
    c_solve->add_option("--radius", radius, "truncation radius (default: plan max)");

    auto* c_extract = app.add_subcommand("extract", "vanishing-discount pipeline");
    add_common(c_extract, true);

    auto* c_sim = app.add_subcommand("simulate", "long-run cost simulation");
    add_common(c_sim, true);
    c_sim->add_option("--eigenpair", eigen_path, "eigenpair csv")->required();
    c_sim->add_option("--policy", policy, "feedback | zero | constant:<v>");
    c_sim->add_option("--lambda", lambda_star, "solver lambda* for admissibility");
    c_sim->add_option("--paths", paths, "number of paths");
    c_sim->add_option("--dt", dt, "time step");
    c_sim->add_option("--horizon", horizon, "path horizon T");
    c_sim->add_option("--return-radius", return_radius, "return set radius");

    auto* c_verify = app.add_subcommand("verify", "property suite");
    add_common(c_verify, false);
    c_verify->add_option("--suite", suite, "all | fast");

    auto* c_nonex = app.add_subcommand("nonexist", "divergence probe");
    add_common(c_nonex, true);
    c_nonex->add_option("--alpha", alpha, "fixed probe discount")->default_val(0.002);

    auto* c_barrier = app.add_subcommand("barrier", "build the barrier model");
    add_common(c_barrier, true);

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(opts.out_dir);
        if (app.got_subcommand(c_solve)) return cmd_solve(opts, alpha, radius);
        if (app.got_subcommand(c_extract)) return cmd_extract(opts);
        if (app.got_subcommand(c_sim))
            return cmd_simulate(opts, eigen_path, policy, lambda_star, paths, dt,
                                horizon, return_radius);
        if (app.got_subcommand(c_verify)) return cmd_verify(opts, suite);
        if (app.got_subcommand(c_nonex)) return cmd_nonexist(opts, alpha);
        if (app.got_subcommand(c_barrier)) return cmd_barrier(opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what()
                  << " (last residual " << e.last_residual << ")\n";
        return 2;
    } catch (const CauchyFailure& e) {
        std::cerr << "solver error: " << e.what() << "; table:";
        for (double v : e.table) std::cerr << " " << v;
        std::cerr << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
