#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bloch/operator_model.hpp"
#include "bloch/projections.hpp"
#include "bloch/spectra.hpp"

namespace bloch {

// Time series of one evolution run. Norms are recorded every accepted step;
// state snapshots are decimated by the configured stride.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> l2, h1, h2;
    std::vector<double> state_times;
    std::vector<SampledFunction> states;
    bool overflow = false;
    double dt = 0.0;

    double norm_at(int k, Norm which) const {
        return which == Norm::l2 ? l2[k] : which == Norm::h1 ? h1[k] : h2[k];
    }
};

struct EvolveOptions {
    int truncation = 0;      // Galerkin window for the split stepper; 0 = N_x/2
    int state_stride = 0;    // 0 = keep only first/last states
    double overflow_cap = 1e12;
};

// exp(Lt)u0 through the Bloch decomposition: one dense matrix exponential per
// Floquet class applied to the class coefficients. Content outside the
// Galerkin window |j| <= truncation is truncated (t = 0 returns u0 exactly).
SampledFunction linear_evolve(const PeriodicOperator& op, const SampledFunction& u0,
                              double t, int truncation);

// Norm series of exp(Lt)u0 at times k*dt, k = 0..steps, by repeated
// application of the fixed-step class exponentials.
Trajectory linear_norm_series(const PeriodicOperator& op, const SampledFunction& u0,
                              double dt, int steps, const EvolveOptions& opts = {});

// Nonlinear evolution of u_t = Lu + N(u) from delta*u0. Constant-coefficient
// scalar operators step with fourth-order exponential time differencing on the
// big-box symbol (contour-averaged coefficient functions); otherwise Strang
// splitting between the class exponentials and an explicit nonlinear stage.
// Quadratic products are 2/3-dealiased. Blow-up past the overflow cap ends the
// trajectory with the overflow flag; NaN is a hard error.
Trajectory nonlinear_evolve(const PeriodicOperator& op, const Nonlinearity& nonlin,
                            const SampledFunction& u0, double delta, double t_end,
                            double dt, const EvolveOptions& opts = {});

struct GrowthDiagnostics {
    double omega = 0.0;
    double lambda_m = 0.0;
    double window_a = 0.0, window_b = 0.0;
    double rate_projected = 0.0;  // fitted slope of log ||P exp(Lt) u0||
    double rate_full = 0.0;       // fitted slope of log ||exp(Lt) u0||
    double c_lower = 0.0;         // min over window of ||exp(Lt)u0|| e^{-omega t}
    double c_upper = 0.0;         // max over window of ||exp(Lt)u0|| e^{-lambda_m t}
    bool lower_ok = false;        // omega - tol <= rate_projected
    bool upper_ok = false;        // rate_full <= lambda_m + tol
    Trajectory series_full, series_projected;
};

// Evolve u0 and its activated projection linearly, fit exponential rates over
// the pre-overflow window, and check the two-sided growth estimate.
GrowthDiagnostics growth_sandwich(const PeriodicOperator& op, const SampledFunction& u0,
                                  const ProjectionReport& report,
                                  const SpectrumSampling& s, double omega,
                                  double horizon, double dt, double rate_tol = 0.01,
                                  const EvolveOptions& opts = {});

// Running sup of norm(s) * e^{-rate s} over s <= t; nondecreasing.
std::vector<double> rho_series(const Trajectory& traj, double rate,
                               Norm which = Norm::l2);

struct PolynomialBound {
    double a_coeff = 0.0;       // (2 eta)^{p-1} / (p lambda_M - lambda_0)
    double z_crit = 0.0;        // critical point of C - z + a z^p
    double value_at_crit = 0.0;
    bool has_root = false;      // g(z_crit) < 0
    double root = 0.0;          // smallest positive root when it exists
};

// Arithmetic of the growth-control polynomial g(z) = C - z + a z^p.
// Requires p*lambda_M > lambda_0.
PolynomialBound polynomial_bound(double p, double eta, double lambda_m, double lambda0,
                                 double c);

struct DissipativeBound {
    double comparison_level = 0.0;  // L = C + 1
    double h_at_level = 0.0;        // h(L)
    bool root_certified = false;    // perturbation-vs-linear comparison < 1
    bool has_root = false;
    double root = 0.0;
};

// h(z) = a_p eta^{p-1} z^p + a_{p-1} eta^{p-2} delta z^{p-1} - z + C on [0, C+1].
DissipativeBound dissipative_bound(double p, double eta, double delta, double a_p,
                                   double a_pm1, double c);

struct DeltaRun {
    double delta = 0.0;
    double time_t = 0.0;     // T = ln(2 eta / delta) / lambda_M
    double norm_at_t = 0.0;  // ||u_delta(T)||_{L^2}
    double rho_max = 0.0;    // max over the run of rho(t)
    double z_at_t = 0.0;     // rho(T)/delta
    bool pass = false;
    Trajectory traj;
};

struct InstabilityVerdict {
    RunStatus status = RunStatus::ok;
    double eta = 0.0, p = 0.0;
    double lambda_m = 0.0, lambda0 = 0.0;
    double u0_norm = 0.0;        // the run normalizes u0; scale recorded here
    double c_linear_min = 0.0;   // min_t ||exp(Lt)u0hat|| e^{-lambda_M t}
    double c_linear_max = 0.0;   // max_t, the measured linear upper constant
    double c_lower = 0.0;        // 2 * c_linear_min
    double c_upper = 0.0;        // C_N 2^p z_max^p / (p lambda_M - lambda_0)
    double epsilon = 0.0;        // c_lower*eta - c_upper*eta^p
    std::vector<DeltaRun> runs;
    bool unstable = false;  // all sampled deltas pass
    PolynomialBound bound;  // with C = c_linear_max, for the rho-control check
};

// Full instability run: per delta, evolve delta*u0/||u0|| nonlinearly to
// T(delta) and compare the endpoint norm against the measured
// delta-independent floor epsilon = C_lower*eta - C_upper*eta^p.
InstabilityVerdict instability_experiment(const PeriodicOperator& op,
                                          const Nonlinearity& nonlin,
                                          const SampledFunction& u0, double eta,
                                          const std::vector<double>& deltas,
                                          const ProjectionReport& report, double dt,
                                          const EvolveOptions& opts = {});

struct DampingFit {
    bool ok = false;
    double c = 0.0;             // smallest C satisfying the estimate at samples
    double residual_max = 0.0;  // max violation at the fitted C
    double theta = 0.0;
};

// Fit the smallest C >= 0 with
//   ||u(t)||_{H^2} <= e^{-theta t} ||u(0)||_{H^2} + C int_0^t e^{-theta(t-s)} ||u(s)||_{H^1} ds
// over the trajectory samples (trapezoid integral). ok=false when no C below
// the cap works.
DampingFit damping_check(const Trajectory& traj, double theta, double cap = 1e6);

}  // namespace bloch
