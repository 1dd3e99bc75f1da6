// Scenario-driven command line front end: parse a config, run one stage of
// the pipeline, emit CSV/SVG artifacts and a JSON run summary.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "bloch/evolution.hpp"
#include "bloch/parallel.hpp"
#include "bloch/report_io.hpp"
#include "bloch/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bloch;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    int jobs = 0;
    double dt_override = 0.0;
    long long seed_override = -1;
};

ScenarioConfig load_with_overrides(const GlobalArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config '" + args.config_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config parse failure: " + std::string(e.what()));
    }
    for (const auto& o : args.overrides) apply_override(doc, o);
    if (args.seed_override >= 0) doc["seed"] = args.seed_override;
    if (args.dt_override > 0.0) doc["experiment"]["dt"] = args.dt_override;
    return parse_scenario(doc);
}

fs::path resolve_out_dir(const GlobalArgs& args, const ScenarioConfig& cfg) {
    fs::path dir;
    if (!args.out_dir.empty())
        dir = args.out_dir;
    else if (!cfg.output_dir.empty())
        dir = cfg.output_dir;
    else if (const char* root = std::getenv("BLOCHTK_OUT_ROOT"))
        dir = fs::path(root) / cfg.name;
    else
        dir = fs::path("out") / cfg.name;
    fs::create_directories(dir);
    return dir;
}

struct ActivationPipeline {
    SpectrumSampling sampling;
    std::vector<Branch> branches;
    SampledFunction u0;
    PreparedSelection selection;
    ProjectionReport report;
};

// Shared front half of every activation-driven subcommand: sweep the box's
// Floquet exponents, build the configured perturbation, scan for activation.
ActivationPipeline run_activation(const ScenarioConfig& cfg) {
    ActivationPipeline p;
    p.sampling = bloch_spectrum(cfg.op, XiGrid::of_box(cfg.grid), cfg.truncation);
    p.branches = track_branches(p.sampling);
    p.u0 = build_initial_perturbation(cfg, &p.sampling, &p.branches, &p.selection);
    const double tau = cfg.tau_act_rel * p.u0.norm();
    p.report = activation_report(p.u0, p.sampling, p.branches, tau, cfg.p(), cfg.eps_gap);
    return p;
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

int cmd_spectrum(const ScenarioConfig& cfg, const fs::path& out) {
    const XiGrid grid(cfg.xi_count);
    const SpectrumSampling s = bloch_spectrum(cfg.op, grid, cfg.truncation);
    const auto branches = track_branches(s);
    const auto abscissa = spectral_abscissa(s);
    const auto sigma_u = unstable_set(s, cfg.p(), branches);

    write_spectrum_csv((out / "spectrum.csv").string(), s, branches);

    json segments = json::array();
    for (const auto& seg : sigma_u.members)
        segments.push_back({{"branch_id", seg.branch_id},
                            {"xi_lo", s.grid.value(seg.first_xi)},
                            {"xi_hi", s.grid.value(seg.last_xi)}});
    json results;
    results["lambda0"] = {{"value", abscissa.value},
                          {"xi", s.grid.value(abscissa.xi_index)},
                          {"eigen_index", abscissa.eigen_index}};
    results["sigma_u"] = {{"threshold", sigma_u.threshold},
                          {"empty", sigma_u.empty()},
                          {"segments", segments}};
    write_summary((out / "summary.json").string(), cfg.resolved, results);
    std::cout << "lambda0 = " << format_double(abscissa.value) << " at xi = "
              << format_double(s.grid.value(abscissa.xi_index)) << "\n";
    return 0;
}

int cmd_lambdam(const ScenarioConfig& cfg, const fs::path& out) {
    const auto p = run_activation(cfg);
    const BlochField field = bloch_transform(p.u0);
    write_bloch_norms_csv((out / "bloch_norms.csv").string(), field);
    write_masses_csv((out / "masses.csv").string(), p.sampling, p.branches,
                     activation_masses(field, p.sampling, cfg.eps_gap));
    write_summary((out / "summary.json").string(), cfg.resolved,
                  json{{"projection_report", to_json(p.report)}});
    std::cout << (p.report.activated ? "activated" : "not activated")
              << ", lambda_M = " << format_double(p.report.lambda_m) << "\n";
    return p.report.activated ? 0 : 2;
}

int cmd_hypothesis(const ScenarioConfig& cfg, const fs::path& out) {
    const auto p = run_activation(cfg);
    json results{{"projection_report", to_json(p.report)}};
    int exit_code = 2;
    if (p.report.activated) {
        const auto part =
            eigencount_partition(p.sampling, p.report.lambda_m, cfg.eps_gap);
        write_partition_csv((out / "partition.csv").string(), p.sampling, part);
        const auto complement =
            complement_projection(p.u0, p.sampling, p.report.lambda_m, cfg.eps_gap);
        const double defect =
            p.u0.distance(complement.field) / std::max(p.u0.norm(), 1e-300);
        results["partition"] = to_json(part);
        results["complement_defect"] = defect;
        results["complement_warnings"] = complement.warnings;
        exit_code = 0;
    }
    write_summary((out / "summary.json").string(), cfg.resolved, results);
    return exit_code;
}

int cmd_linear(const ScenarioConfig& cfg, const fs::path& out) {
    const auto p = run_activation(cfg);
    if (!p.report.activated) {
        write_summary((out / "summary.json").string(), cfg.resolved,
                      json{{"projection_report", to_json(p.report)}});
        return 2;
    }
    require(cfg.horizon > 0.0 && cfg.dt > 0.0,
            "linear: experiment.horizon and experiment.dt must be positive");
    const double omega = p.report.lambda_m - cfg.omega_offset;
    const auto diag = growth_sandwich(cfg.op, p.u0, p.report, p.sampling, omega,
                                      cfg.horizon, cfg.dt, 0.01, cfg.evolve_options());
    write_growth_csv((out / "growth.csv").string(), diag.series_full,
                     diag.series_projected);

    std::vector<PlotSeries> series(2);
    series[0].label = "log10 |exp(Lt)u0|";
    series[1].label = "log10 |P exp(Lt)u0|";
    for (size_t k = 0; k < diag.series_full.times.size(); ++k) {
        series[0].x.push_back(diag.series_full.times[k]);
        series[0].y.push_back(std::log10(std::max(diag.series_full.l2[k], 1e-300)));
    }
    for (size_t k = 0; k < diag.series_projected.times.size(); ++k) {
        series[1].x.push_back(diag.series_projected.times[k]);
        series[1].y.push_back(std::log10(std::max(diag.series_projected.l2[k], 1e-300)));
    }
    write_svg_plot((out / "growth.svg").string(), "linear growth, " + cfg.name, series,
                   true, p.report.lambda_m / std::log(10.0), series[0].y.front());

    write_summary((out / "summary.json").string(), cfg.resolved,
                  json{{"projection_report", to_json(p.report)},
                       {"growth", to_json(diag)}});
    std::cout << "rates: projected " << format_double(diag.rate_projected) << ", full "
              << format_double(diag.rate_full) << ", lambda_M "
              << format_double(p.report.lambda_m) << "\n"
              << (diag.lower_ok && diag.upper_ok ? "growth sandwich holds"
                                                 : "growth sandwich VIOLATED")
              << "\n";
    return 0;
}

int cmd_instability(const ScenarioConfig& cfg, const fs::path& out) {
    const auto p = run_activation(cfg);
    require(cfg.eta > 0.0 && !cfg.deltas.empty() && cfg.dt > 0.0,
            "instability: experiment.eta, deltas and dt are required");
    const auto verdict = instability_experiment(cfg.op, cfg.nonlinearity, p.u0, cfg.eta,
                                                cfg.deltas, p.report, cfg.dt,
                                                cfg.evolve_options());
    json results{{"projection_report", to_json(p.report)},
                 {"verdict", to_json(verdict)}};
    if (verdict.status == RunStatus::hypotheses_unmet) {
        write_summary((out / "summary.json").string(), cfg.resolved, results);
        std::cout << "hypotheses unmet: lambda_M <= lambda0/p or not activated\n";
        return 2;
    }

    std::vector<PlotSeries> series;
    for (size_t i = 0; i < verdict.runs.size(); ++i) {
        const auto& run = verdict.runs[i];
        write_trajectory_csv((out / ("traj_delta_" + std::to_string(i) + ".csv")).string(),
                             run.traj, rho_series(run.traj, verdict.lambda_m));
        PlotSeries s;
        s.label = "delta = " + format_double(run.delta);
        for (size_t k = 0; k < run.traj.times.size(); ++k) {
            s.x.push_back(run.traj.times[k]);
            s.y.push_back(std::log10(std::max(run.traj.l2[k], 1e-300)));
        }
        series.push_back(std::move(s));
    }
    write_svg_plot((out / "instability.svg").string(), "instability, " + cfg.name,
                   series, true, verdict.lambda_m / std::log(10.0),
                   series.back().y.front());
    write_summary((out / "summary.json").string(), cfg.resolved, results);

    for (const auto& run : verdict.runs)
        std::cout << "delta " << format_double(run.delta) << ": T = "
                  << format_double(run.time_t) << ", |u(T)| = "
                  << format_double(run.norm_at_t) << ", epsilon = "
                  << format_double(verdict.epsilon)
                  << (run.pass ? "  [pass]" : "  [FAIL]") << "\n";
    std::cout << (verdict.unstable ? "verdict: unstable" : "verdict: not confirmed")
              << "\n";
    return 0;
}

int cmd_dissipative(const ScenarioConfig& cfg, const fs::path& out) {
    require(cfg.mode == "kdvks", "dissipative: requires a kdvks-mode scenario");
    require(cfg.horizon > 0.0 && cfg.dt > 0.0,
            "dissipative: experiment.horizon and experiment.dt are required");
    const auto p = run_activation(cfg);

    const double amplitude = cfg.deltas.empty() ? 1e-3 : cfg.deltas.front();
    const auto traj = nonlinear_evolve(cfg.op, cfg.nonlinearity, p.u0, amplitude,
                                       cfg.horizon, cfg.dt, cfg.evolve_options());
    const auto fit = damping_check(traj, cfg.theta);
    write_trajectory_csv((out / "traj.csv").string(), traj,
                         rho_series(traj, p.report.lambda_m, Norm::h1));

    // mean of the scalar field is conserved by every flux term
    const auto coef0 = traj.states.front().spectrum();
    const auto coef1 = traj.states.back().spectrum();
    const double mean_drift = std::abs(coef1[0][0] - coef0[0][0]);

    json results{{"projection_report", to_json(p.report)},
                 {"damping", to_json(fit)},
                 {"amplitude", amplitude},
                 {"mean_drift", mean_drift}};

    // Theorem-side hypotheses for the dissipative instability argument
    const double pexp = cfg.p();
    const double lam_m = p.report.lambda_m;
    const double lam0 = p.report.lambda0;
    const bool hyp_floor = p.report.activated && lam_m > lam0 / pexp;
    const bool hyp_damped = lam_m > (lam0 + cfg.theta) / (pexp - 1.0);
    results["hypotheses"] = {{"lambda_m_above_floor", hyp_floor},
                             {"lambda_m_above_damped_floor", hyp_damped}};

    int exit_code = 2;
    if (hyp_floor && hyp_damped && fit.ok && cfg.eta > 0.0) {
        const double a_pm1 =
            p.u0.norm(Norm::h2) / ((pexp - 1.0) * lam_m - (cfg.theta + lam0));
        const double a_p = (fit.c / (cfg.theta + lam_m)) *
                           (1.0 / (pexp * lam_m - lam0) +
                            1.0 / ((pexp - 1.0) * lam_m - (cfg.theta + lam0)));
        results["dissipative_bound"] =
            to_json(dissipative_bound(pexp, cfg.eta, amplitude, a_p, a_pm1, fit.c));
        results["a_p"] = a_p;
        results["a_pm1"] = a_pm1;
        exit_code = 0;
    }
    write_summary((out / "summary.json").string(), cfg.resolved, results);
    std::cout << "damping fit: " << (fit.ok ? "C = " + format_double(fit.c)
                                            : std::string("no finite C"))
              << ", residual " << format_double(fit.residual_max) << "\n";
    if (exit_code == 2) std::cout << "dissipative instability hypotheses unmet\n";
    return exit_code;
}

int selftest_heat_spectrum();
int selftest_isometry();
int selftest_projection();
int selftest_evolution();
int selftest_polynomial();

int cmd_selftest() {
    int failures = 0;
    failures += selftest_isometry();
    failures += selftest_heat_spectrum();
    failures += selftest_projection();
    failures += selftest_evolution();
    failures += selftest_polynomial();
    std::cout << (failures == 0 ? "selftest: all checks passed\n"
                                : "selftest: FAILURES\n");
    return failures == 0 ? 0 : 1;
}

int check(bool ok, const std::string& label) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << label << "\n";
    return ok ? 0 : 1;
}

PeriodicOperator heat_operator() {
    return PeriodicOperator(2, 1, {{2, {PeriodicCoefficient::constant(1.0)}}});
}

int selftest_isometry() {
    int failures = 0;
    const SpatialGrid grid(8, 32);
    SampledFunction f = SampledFunction::mode(grid, 1, 0, 1, 3, {0.7, 0.2});
    f += SampledFunction::mode(grid, 1, 0, -2, 5, {0.1, -0.4});
    failures += check(isometry_defect(f) < 1e-12, "selftest: mode isometry");
    const SampledFunction back = inverse_bloch(bloch_transform(f));
    failures += check(f.distance(back) < 1e-10 * f.norm(), "selftest: round trip");
    return failures;
}

int selftest_heat_spectrum() {
    int failures = 0;
    const auto op = heat_operator();
    const auto s = bloch_spectrum(op, XiGrid(16), 8);
    double worst = 0.0;
    for (int m = 0; m < 16; ++m)
        for (int k = -8; k <= 8; ++k) {
            const double expect = -std::pow(k + s.grid.value(m), 2.0);
            double best = 1e300;
            for (const auto& l : s.points[m].eigenvalues)
                best = std::min(best, std::abs(l - expect));
            worst = std::max(worst, best);
        }
    failures += check(worst < 1e-10, "selftest: heat spectrum matches symbol");
    failures += check(std::abs(spectral_abscissa(s).value) < 1e-12,
                      "selftest: heat spectral abscissa");
    return failures;
}

int selftest_projection() {
    int failures = 0;
    PeriodicOperator mathieu(
        2, 1, {{2, {PeriodicCoefficient::constant(1.0)}},
               {0, {PeriodicCoefficient::cosine(1, 1.0)}}});
    const BlochMatrix bm = assemble_bloch_matrix(mathieu, 0.25, 8);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(bm.entries);
    int top = 0;
    for (int i = 1; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i].real() > es.eigenvalues()[top].real()) top = i;
    double gap = 1e300;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (i != top) gap = std::min(gap, std::abs(es.eigenvalues()[i] -
                                                   es.eigenvalues()[top]));
    const Contour gamma = Contour::circle(es.eigenvalues()[top], gap / 3.0, 128);
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(bm.dim());
    const Eigen::VectorXcd once = riesz_project(mathieu, 0.25, 8, gamma, v);
    const Eigen::VectorXcd twice = riesz_project(mathieu, 0.25, 8, gamma, once);
    failures += check((twice - once).norm() <= 1e-10 * once.norm(),
                      "selftest: Riesz projection idempotent");
    return failures;
}

int selftest_evolution() {
    int failures = 0;
    const SpatialGrid grid(4, 32);
    const auto op = heat_operator();
    const SampledFunction u0 = SampledFunction::mode(grid, 1, 0, 1, 1);
    const double kappa = 1.0 + grid.xi(1);
    const SampledFunction ut = linear_evolve(op, u0, 0.3, 8);
    SampledFunction expect = u0;
    expect *= std::exp(-kappa * kappa * 0.3);
    failures += check(ut.distance(expect) < 1e-10 * expect.norm(),
                      "selftest: heat mode decay");
    failures += check(linear_evolve(op, u0, 0.0, 8).distance(u0) == 0.0,
                      "selftest: t = 0 identity");
    return failures;
}

int selftest_polynomial() {
    const auto b = polynomial_bound(2.0, 0.05, 1.0, 1.5, 1.0);
    int failures = 0;
    failures += check(std::abs(b.z_crit - 2.5) < 1e-12, "selftest: polynomial z*");
    failures += check(std::abs(b.value_at_crit + 0.25) < 1e-12,
                      "selftest: polynomial value at z*");
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet-Bloch spectral instability toolkit"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "scenario config file (JSON)");
    app.add_option("--out", args.out_dir, "output directory");
    app.add_option("--seed", args.seed_override, "override the scenario seed");
    app.add_option("--jobs", args.jobs, "worker thread count");
    app.add_option("--dt", args.dt_override, "override experiment.dt");
    app.add_option("--override", args.overrides,
                   "dotted.key=value config override (repeatable)");

    auto* sc_spectrum = app.add_subcommand("spectrum", "Bloch eigensweep, lambda0, Sigma_U");
    auto* sc_lambdam = app.add_subcommand("lambdam", "activation scan for the perturbation");
    auto* sc_hypothesis = app.add_subcommand("hypothesis", "eigenvalue-count partition");
    auto* sc_linear = app.add_subcommand("linear", "two-sided linear growth diagnostics");
    auto* sc_instability = app.add_subcommand("instability", "nonlinear instability run");
    auto* sc_dissipative = app.add_subcommand("dissipative", "damping estimate experiment");
    auto* sc_selftest = app.add_subcommand("selftest", "built-in oracle checks");
    for (auto* sub : app.get_subcommands({})) sub->fallthrough(true);

    CLI11_PARSE(app, argc, argv);
    if (args.jobs > 0) set_worker_count(args.jobs);

    try {
        if (sc_selftest->parsed()) return cmd_selftest();
        if (args.config_path.empty())
            throw ConfigError("--config is required for this subcommand");
        const ScenarioConfig cfg = load_with_overrides(args);
        const fs::path out = resolve_out_dir(args, cfg);
        if (sc_spectrum->parsed()) return cmd_spectrum(cfg, out);
        if (sc_lambdam->parsed()) return cmd_lambdam(cfg, out);
        if (sc_hypothesis->parsed()) return cmd_hypothesis(cfg, out);
        if (sc_linear->parsed()) return cmd_linear(cfg, out);
        if (sc_instability->parsed()) return cmd_instability(cfg, out);
        if (sc_dissipative->parsed()) return cmd_dissipative(cfg, out);
        throw ConfigError("unknown subcommand");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
