#include "bloch/evolution.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "bloch/fft.hpp"
#include "bloch/parallel.hpp"

namespace bloch {

namespace {

using CoefStack = std::vector<Eigen::VectorXcd>;  // per component, big-box bins

CoefStack spectrum_of(const SampledFunction& f) { return f.spectrum(); }

double coef_norm(const CoefStack& coefs, const SpatialGrid& grid, Norm which) {
    const int n = grid.total_points();
    const int s = which == Norm::l2 ? 0 : which == Norm::h1 ? 1 : 2;
    double acc = 0.0;
    for (const auto& c : coefs)
        for (int m = 0; m < n; ++m) {
            const double k2 = grid.kappa(m) * grid.kappa(m);
            double w = 1.0, p = 1.0;
            for (int j = 1; j <= s; ++j) {
                p *= k2;
                w += p;
            }
            acc += w * std::norm(c[m]);
        }
    return std::sqrt(2.0 * pi * grid.periods * acc);
}

// Dense exponential of every class Bloch matrix at a fixed time step, applied
// directly to big-box spectral coefficients. Class content outside the
// Galerkin window is truncated.
class ClasswiseExp {
public:
    ClasswiseExp(const PeriodicOperator& op, const SpatialGrid& grid, int truncation,
                 double dt)
        : grid_(grid), d_(op.components()), m_(truncation) {
        const int classes = grid.periods;
        exps_.resize(classes);
        gather_.resize(classes);
        drop_.resize(classes);
        parallel_for(classes, [&](int r) {
            const BlochMatrix bm = assemble_bloch_matrix(op, grid.xi(r), m_);
            exps_[r] = (bm.entries * dt).exp();
        });
        const int nx = grid.points_per_period;
        const int n = grid.total_points();
        for (int r = 0; r < classes; ++r) {
            const int rho = r - grid.periods / 2;
            const int lo = -nx / 2 + (rho < 0 ? 1 : 0);
            for (int j = lo; j < lo + nx; ++j) {
                const int s = j * grid.periods + rho;
                const int bin = ((s % n) + n) % n;
                if (j >= -m_ && j <= m_)
                    gather_[r].push_back({(j + m_) * d_, bin});
                else
                    drop_[r].push_back(bin);
            }
        }
    }

    // max over classes of the Gershgorin bound on Re(spectrum)
    static double growth_bound(const PeriodicOperator& op, const SpatialGrid& grid,
                               int truncation) {
        double bound = -std::numeric_limits<double>::infinity();
        for (int r = 0; r < grid.periods; ++r) {
            const BlochMatrix bm = assemble_bloch_matrix(op, grid.xi(r), truncation);
            for (int i = 0; i < bm.dim(); ++i) {
                double row = bm.entries(i, i).real();
                for (int j = 0; j < bm.dim(); ++j)
                    if (j != i) row += std::abs(bm.entries(i, j));
                bound = std::max(bound, row);
            }
        }
        return bound;
    }

    void apply(CoefStack& coefs) const {
        Eigen::VectorXcd v(d_ * (2 * m_ + 1)), w;
        for (int r = 0; r < grid_.periods; ++r) {
            v.setZero();
            for (const auto& [slot, bin] : gather_[r])
                for (int c = 0; c < d_; ++c) v[slot + c] = coefs[c][bin];
            w = exps_[r] * v;
            for (const auto& [slot, bin] : gather_[r])
                for (int c = 0; c < d_; ++c) coefs[c][bin] = w[slot + c];
            for (int bin : drop_[r])
                for (int c = 0; c < d_; ++c) coefs[c][bin] = 0.0;
        }
    }

private:
    SpatialGrid grid_;
    int d_, m_;
    std::vector<Eigen::MatrixXcd> exps_;
    std::vector<std::vector<std::pair<int, int>>> gather_;  // (slot, bin)
    std::vector<std::vector<int>> drop_;
};

// Dealiased pointwise nonlinearity, spectral coefficients in and out.
class NonlinearTerm {
public:
    NonlinearTerm(const Nonlinearity& nl, const SpatialGrid& grid, int components)
        : nl_(nl), grid_(grid), d_(components) {
        const int n = grid.total_points();
        mask_ = Eigen::VectorXd::Ones(n);
        if (nl.kind != Nonlinearity::Kind::none) {
            if (nl.kind == Nonlinearity::Kind::advective && components != 1)
                throw DomainError("advective nonlinearity requires a scalar system");
            const double frac = 2.0 / (nl.exponent + 1.0);
            const int keep = static_cast<int>(std::floor(n / 2 * frac));
            for (int m = 0; m < n; ++m)
                if (std::abs(fft::signed_index(m, n)) > keep) mask_[m] = 0.0;
        }
        scratch_in_.resize(n);
        scratch_out_.resize(n);
    }

    bool active() const { return nl_.kind != Nonlinearity::Kind::none; }

    void apply(const CoefStack& in, CoefStack& out) {
        const int n = grid_.total_points();
        if (out.size() != in.size()) out.assign(in.size(), Eigen::VectorXcd::Zero(n));
        if (!active()) {
            for (auto& o : out) o.setZero();
            return;
        }
        if (nl_.kind == Nonlinearity::Kind::power) {
            for (int c = 0; c < d_; ++c) {
                to_phys(in[c]);
                for (int i = 0; i < n; ++i) {
                    const cplx u = scratch_out_[i];
                    scratch_in_[i] =
                        nl_.scale * std::pow(std::abs(u), nl_.exponent - 1.0) * u;
                }
                to_coef(out[c]);
            }
            return;
        }
        // advective: N(u) = -u u_x
        to_phys(in[0]);
        phys_u_ = scratch_out_;
        Eigen::VectorXcd dcoef(n);
        for (int m = 0; m < n; ++m) {
            cplx w = 1i * grid_.kappa(m);
            if (fft::signed_index(m, n) == -n / 2) w = 0.0;
            dcoef[m] = w * in[0][m];
        }
        to_phys(dcoef);
        for (int i = 0; i < n; ++i) scratch_in_[i] = -phys_u_[i] * scratch_out_[i];
        to_coef(out[0]);
    }

private:
    void to_phys(const Eigen::VectorXcd& coef) {
        const int n = grid_.total_points();
        for (int m = 0; m < n; ++m) scratch_in_[m] = mask_[m] * coef[m];
        fft::inverse(scratch_in_, scratch_out_);
    }
    void to_coef(Eigen::VectorXcd& coef) {
        const int n = grid_.total_points();
        fft::forward(scratch_in_, scratch_out_);
        for (int m = 0; m < n; ++m) coef[m] = mask_[m] * scratch_out_[m] / double(n);
    }

    Nonlinearity nl_;
    SpatialGrid grid_;
    int d_;
    Eigen::VectorXd mask_;
    std::vector<cplx> scratch_in_, scratch_out_, phys_u_;
};

// Fourth-order exponential time differencing on the big-box symbol
// (constant-coefficient scalar operators). The stiff coefficient functions are
// evaluated by averaging over a unit circle around each dt*symbol value.
class Etdrk4 {
public:
    Etdrk4(const PeriodicOperator& op, const SpatialGrid& grid, const Nonlinearity& nl,
           double dt)
        : nterm_(nl, grid, 1) {
        const int n = grid.total_points();
        e_.resize(n);
        e2_.resize(n);
        q_.resize(n);
        f1_.resize(n);
        f2_.resize(n);
        f3_.resize(n);
        const int pts = 64;
        for (int m = 0; m < n; ++m) {
            const cplx z0 = dt * symbol_eval(op, grid.kappa(m));
            e_[m] = std::exp(z0);
            e2_[m] = std::exp(0.5 * z0);
            cplx q = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
            for (int k = 0; k < pts; ++k) {
                const cplx z = z0 + std::exp(2.0 * pi * 1i * (k + 0.5) / double(pts));
                const cplx ez = std::exp(z), z2 = z * z, z3 = z2 * z;
                q += (std::exp(0.5 * z) - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z2)) / z3;
                f2 += (2.0 + z + ez * (-2.0 + z)) / z3;
                f3 += (-4.0 - 3.0 * z - z2 + ez * (4.0 - z)) / z3;
            }
            q_[m] = dt * q / double(pts);
            f1_[m] = dt * f1 / double(pts);
            f2_[m] = dt * f2 / double(pts);
            f3_[m] = dt * f3 / double(pts);
        }
    }

    void step(CoefStack& coefs) {
        auto& u = coefs[0];
        nterm_.apply({u}, nu_);
        stage(a_, e2_, u, q_, nu_[0]);
        nterm_.apply(a_stack(), na_);
        stage(b_, e2_, u, q_, na_[0]);
        nterm_.apply(b_stack(), nb_);
        tmp_ = 2.0 * nb_[0] - nu_[0];
        stage(c_, e2_, a_, q_, tmp_);
        nterm_.apply(c_stack(), nc_);
        u = e_.cwiseProduct(u) + f1_.cwiseProduct(nu_[0]) +
            2.0 * f2_.cwiseProduct(na_[0] + nb_[0]) + f3_.cwiseProduct(nc_[0]);
    }

private:
    static void stage(Eigen::VectorXcd& out, const Eigen::VectorXcd& e2,
                      const Eigen::VectorXcd& base, const Eigen::VectorXcd& q,
                      const Eigen::VectorXcd& nl) {
        out = e2.cwiseProduct(base) + q.cwiseProduct(nl);
    }
    CoefStack a_stack() { return {a_}; }
    CoefStack b_stack() { return {b_}; }
    CoefStack c_stack() { return {c_}; }

    NonlinearTerm nterm_;
    Eigen::VectorXcd e_, e2_, q_, f1_, f2_, f3_;
    Eigen::VectorXcd a_, b_, c_, tmp_;
    CoefStack nu_, na_, nb_, nc_;
};

// Strang splitting: explicit RK4 on the nonlinearity over dt/2, class
// exponential over dt, RK4 over dt/2.
class StrangSplit {
public:
    StrangSplit(const PeriodicOperator& op, const SpatialGrid& grid,
                const Nonlinearity& nl, int truncation, double dt)
        : linear_(op, grid, truncation, dt), nterm_(nl, grid, op.components()),
          half_(0.5 * dt) {}

    void step(CoefStack& coefs) {
        nonlinear_half(coefs);
        linear_.apply(coefs);
        nonlinear_half(coefs);
    }

private:
    void nonlinear_half(CoefStack& u) {
        if (!nterm_.active()) return;
        const double h = half_;
        nterm_.apply(u, k1_);
        axpy(tmp_, u, k1_, 0.5 * h);
        nterm_.apply(tmp_, k2_);
        axpy(tmp_, u, k2_, 0.5 * h);
        nterm_.apply(tmp_, k3_);
        axpy(tmp_, u, k3_, h);
        nterm_.apply(tmp_, k4_);
        for (size_t c = 0; c < u.size(); ++c)
            u[c] += (h / 6.0) * (k1_[c] + 2.0 * k2_[c] + 2.0 * k3_[c] + k4_[c]);
    }

    static void axpy(CoefStack& out, const CoefStack& base, const CoefStack& k,
                     double scale) {
        out.resize(base.size());
        for (size_t c = 0; c < base.size(); ++c) out[c] = base[c] + scale * k[c];
    }

    ClasswiseExp linear_;
    NonlinearTerm nterm_;
    double half_;
    CoefStack k1_, k2_, k3_, k4_, tmp_;
};

int default_truncation(const SpatialGrid& grid, int requested) {
    return requested > 0 ? requested : grid.points_per_period / 2;
}

void record(Trajectory& traj, const CoefStack& coefs, const SpatialGrid& grid,
            double t) {
    traj.times.push_back(t);
    traj.l2.push_back(coef_norm(coefs, grid, Norm::l2));
    traj.h1.push_back(coef_norm(coefs, grid, Norm::h1));
    traj.h2.push_back(coef_norm(coefs, grid, Norm::h2));
}

void snapshot(Trajectory& traj, const CoefStack& coefs, const SpatialGrid& grid,
              double t) {
    traj.state_times.push_back(t);
    traj.states.push_back(SampledFunction::from_spectrum(grid, coefs));
}

double least_squares_slope(const std::vector<double>& t, const std::vector<double>& y,
                           int first, int last) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const int n = last - first + 1;
    for (int i = first; i <= last; ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw DiagnosticsError("rate fit: degenerate time window");
    return (n * sty - st * sy) / denom;
}

}  // namespace

SampledFunction linear_evolve(const PeriodicOperator& op, const SampledFunction& u0,
                              double t, int truncation) {
    if (t < 0.0) throw DomainError("linear_evolve: negative time");
    if (t == 0.0) return u0;
    const SpatialGrid& grid = u0.grid();
    const double bound = ClasswiseExp::growth_bound(op, grid, truncation);
    if (bound > 0.0 && std::log(std::max(u0.norm(), 1e-300)) + bound * t > std::log(1e12))
        throw OverflowError("linear_evolve: predicted norm exceeds the overflow cap");

    ClasswiseExp prop(op, grid, truncation, t);
    CoefStack coefs = spectrum_of(u0);
    prop.apply(coefs);
    const double out_norm = coef_norm(coefs, grid, Norm::l2);
    if (out_norm > 1e12) throw OverflowError("linear_evolve: norm exceeds the overflow cap");
    if (!std::isfinite(out_norm)) throw SolverError("linear_evolve: non-finite result");
    return SampledFunction::from_spectrum(grid, coefs);
}

Trajectory linear_norm_series(const PeriodicOperator& op, const SampledFunction& u0,
                              double dt, int steps, const EvolveOptions& opts) {
    const SpatialGrid& grid = u0.grid();
    const int m = default_truncation(grid, opts.truncation);
    ClasswiseExp prop(op, grid, m, dt);
    CoefStack coefs = spectrum_of(u0);

    Trajectory traj;
    traj.dt = dt;
    record(traj, coefs, grid, 0.0);
    for (int k = 1; k <= steps; ++k) {
        prop.apply(coefs);
        record(traj, coefs, grid, k * dt);
        const double n = traj.l2.back();
        if (!std::isfinite(n)) throw SolverError("linear_norm_series: non-finite norm");
        if (n > opts.overflow_cap) {
            traj.overflow = true;
            break;
        }
    }
    return traj;
}

Trajectory nonlinear_evolve(const PeriodicOperator& op, const Nonlinearity& nonlin,
                            const SampledFunction& u0, double delta, double t_end,
                            double dt, const EvolveOptions& opts) {
    if (t_end < 0.0 || dt <= 0.0)
        throw DomainError("nonlinear_evolve: need t_end >= 0 and dt > 0");
    const SpatialGrid& grid = u0.grid();
    const int m = default_truncation(grid, opts.truncation);

    const int steps = t_end == 0.0 ? 0 : std::max(1, int(std::ceil(t_end / dt - 1e-12)));
    const double h = steps == 0 ? dt : t_end / steps;

    CoefStack coefs = spectrum_of(u0);
    for (auto& c : coefs) c *= delta;

    Trajectory traj;
    traj.dt = h;
    record(traj, coefs, grid, 0.0);
    snapshot(traj, coefs, grid, 0.0);

    const bool diagonal = op.is_constant() && op.components() == 1;
    std::unique_ptr<Etdrk4> etd;
    std::unique_ptr<StrangSplit> split;
    if (diagonal)
        etd = std::make_unique<Etdrk4>(op, grid, nonlin, h);
    else
        split = std::make_unique<StrangSplit>(op, grid, nonlin, m, h);

    for (int k = 1; k <= steps; ++k) {
        if (diagonal)
            etd->step(coefs);
        else
            split->step(coefs);
        const double t = k * h;
        record(traj, coefs, grid, t);
        const double n = traj.l2.back();
        if (std::isnan(n)) throw SolverError("nonlinear_evolve: NaN in trajectory");
        const bool last = k == steps;
        if (opts.state_stride > 0 ? (k % opts.state_stride == 0 || last) : last)
            snapshot(traj, coefs, grid, t);
        if (n > opts.overflow_cap) {
            traj.overflow = true;
            if (traj.state_times.back() != t) snapshot(traj, coefs, grid, t);
            break;
        }
    }
    return traj;
}

GrowthDiagnostics growth_sandwich(const PeriodicOperator& op, const SampledFunction& u0,
                                  const ProjectionReport& report,
                                  const SpectrumSampling& s, double omega,
                                  double horizon, double dt, double rate_tol,
                                  const EvolveOptions& opts) {
    if (omega >= report.lambda_m)
        throw DomainError("growth_sandwich: omega must lie below the activated rate");
    const SampledFunction w0 = project_onto_activated(u0, report, s);
    const int steps = std::max(1, int(std::ceil(horizon / dt - 1e-12)));
    const double h = horizon / steps;

    GrowthDiagnostics diag;
    diag.omega = omega;
    diag.lambda_m = report.lambda_m;
    diag.series_full = linear_norm_series(op, u0, h, steps, opts);
    diag.series_projected = linear_norm_series(op, w0, h, steps, opts);

    const size_t len =
        std::min(diag.series_full.times.size(), diag.series_projected.times.size());
    const int last = static_cast<int>(len) - 1;
    const double t_last = diag.series_full.times[last];
    int first = 0;
    while (first < last && diag.series_full.times[first] < 0.25 * t_last) ++first;
    if (last - first + 1 < 10)
        throw DiagnosticsError("growth_sandwich: fit window has fewer than 10 samples");
    diag.window_a = diag.series_full.times[first];
    diag.window_b = t_last;

    std::vector<double> log_full(len), log_proj(len);
    for (size_t i = 0; i < len; ++i) {
        log_full[i] = std::log(std::max(diag.series_full.l2[i], 1e-300));
        log_proj[i] = std::log(std::max(diag.series_projected.l2[i], 1e-300));
    }
    diag.rate_full = least_squares_slope(diag.series_full.times, log_full, first, last);
    diag.rate_projected =
        least_squares_slope(diag.series_projected.times, log_proj, first, last);

    diag.c_lower = std::numeric_limits<double>::infinity();
    diag.c_upper = 0.0;
    for (int i = first; i <= last; ++i) {
        const double t = diag.series_full.times[i];
        diag.c_lower =
            std::min(diag.c_lower, diag.series_full.l2[i] * std::exp(-omega * t));
        diag.c_upper = std::max(diag.c_upper,
                                diag.series_full.l2[i] * std::exp(-report.lambda_m * t));
    }
    diag.lower_ok = omega - rate_tol <= diag.rate_projected;
    diag.upper_ok = diag.rate_full <= report.lambda_m + rate_tol;
    return diag;
}

std::vector<double> rho_series(const Trajectory& traj, double rate, Norm which) {
    std::vector<double> rho(traj.times.size());
    double sup = 0.0;
    for (size_t k = 0; k < traj.times.size(); ++k) {
        sup = std::max(sup, traj.norm_at(static_cast<int>(k), which) *
                                std::exp(-rate * traj.times[k]));
        rho[k] = sup;
    }
    return rho;
}

PolynomialBound polynomial_bound(double p, double eta, double lambda_m, double lambda0,
                                 double c) {
    if (p <= 1.0 || eta <= 0.0) throw DomainError("polynomial_bound: need p > 1, eta > 0");
    if (c <= 0.0) throw DomainError("polynomial_bound: need C > 0");
    const double margin = p * lambda_m - lambda0;
    if (margin <= 0.0)
        throw HypothesisError("polynomial_bound: p*lambda_M - lambda_0 must be positive");

    PolynomialBound b;
    b.a_coeff = std::pow(2.0 * eta, p - 1.0) / margin;
    b.z_crit = std::pow(margin / p, 1.0 / (p - 1.0)) / (2.0 * eta);
    auto g = [&](double z) { return c - z + b.a_coeff * std::pow(z, p); };
    b.value_at_crit = g(b.z_crit);
    b.has_root = b.value_at_crit < 0.0;
    if (b.has_root) {
        // g decreases monotonically on (0, z_crit): bisect for the unique root
        double lo = 0.0, hi = b.z_crit;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (g(mid) > 0.0 ? lo : hi) = mid;
        }
        b.root = 0.5 * (lo + hi);
    }
    return b;
}

DissipativeBound dissipative_bound(double p, double eta, double delta, double a_p,
                                   double a_pm1, double c) {
    if (p <= 1.0 || eta <= 0.0 || delta <= 0.0 || a_p <= 0.0 || a_pm1 <= 0.0 || c <= 0.0)
        throw DomainError("dissipative_bound: constants must be positive, p > 1");
    DissipativeBound b;
    b.comparison_level = c + 1.0;
    auto h = [&](double z) {
        return a_p * std::pow(eta, p - 1.0) * std::pow(z, p) +
               a_pm1 * std::pow(eta, p - 2.0) * delta * std::pow(z, p - 1.0) - z + c;
    };
    b.h_at_level = h(b.comparison_level);
    b.root_certified =
        a_p * std::pow(eta, p - 1.0) * std::pow(b.comparison_level, p) +
            a_pm1 * std::pow(eta, p - 2.0) * delta *
                std::pow(b.comparison_level, p - 1.0) <
        1.0;

    const int scan = 4096;
    double prev = h(0.0);
    for (int i = 1; i <= scan; ++i) {
        const double z = b.comparison_level * i / scan;
        const double cur = h(z);
        if (prev > 0.0 && cur <= 0.0) {
            double lo = b.comparison_level * (i - 1) / scan, hi = z;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (h(mid) > 0.0 ? lo : hi) = mid;
            }
            b.has_root = true;
            b.root = 0.5 * (lo + hi);
            break;
        }
        prev = cur;
    }
    return b;
}

InstabilityVerdict instability_experiment(const PeriodicOperator& op,
                                          const Nonlinearity& nonlin,
                                          const SampledFunction& u0, double eta,
                                          const std::vector<double>& deltas,
                                          const ProjectionReport& report, double dt,
                                          const EvolveOptions& opts) {
    if (nonlin.kind != Nonlinearity::Kind::power)
        throw DomainError("instability_experiment: requires a power nonlinearity");
    InstabilityVerdict v;
    v.eta = eta;
    v.p = nonlin.exponent;
    v.lambda_m = report.lambda_m;
    v.lambda0 = report.lambda0;

    if (!report.activated || report.lambda_m <= report.lambda0 / nonlin.exponent) {
        v.status = RunStatus::hypotheses_unmet;
        return v;
    }
    if (eta <= 0.0) throw DomainError("instability_experiment: eta must be positive");
    for (double d : deltas)
        if (d <= 0.0 || d >= eta)
            throw DomainError("instability_experiment: deltas must satisfy 0 < delta < eta");

    v.u0_norm = u0.norm();
    if (v.u0_norm == 0.0) throw DomainError("instability_experiment: u0 vanishes");
    SampledFunction u0n = u0;
    u0n *= 1.0 / v.u0_norm;

    double t_max = 0.0;
    for (double d : deltas)
        t_max = std::max(t_max, std::log(2.0 * eta / d) / report.lambda_m);

    // measured linear constants at rate lambda_M over [0, T_max]
    {
        const int steps = std::max(1, int(std::ceil(t_max / dt - 1e-12)));
        const Trajectory lin =
            linear_norm_series(op, u0n, t_max / steps, steps, opts);
        v.c_linear_min = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < lin.times.size(); ++k) {
            const double ratio = lin.l2[k] * std::exp(-report.lambda_m * lin.times[k]);
            v.c_linear_min = std::min(v.c_linear_min, ratio);
            v.c_linear_max = std::max(v.c_linear_max, ratio);
        }
    }

    double z_max = 0.0;
    for (double d : deltas) {
        DeltaRun run;
        run.delta = d;
        run.time_t = std::log(2.0 * eta / d) / report.lambda_m;
        run.traj = nonlinear_evolve(op, nonlin, u0n, d, run.time_t, dt, opts);
        const auto rho = rho_series(run.traj, report.lambda_m);
        run.rho_max = rho.back();
        run.z_at_t = rho.back() / d;
        run.norm_at_t = run.traj.l2.back();
        z_max = std::max(z_max, run.z_at_t);
        v.runs.push_back(std::move(run));
    }

    const double margin = nonlin.exponent * report.lambda_m - report.lambda0;
    v.c_lower = 2.0 * v.c_linear_min;
    v.c_upper =
        nonlin.scale * std::pow(2.0, nonlin.exponent) * std::pow(z_max, nonlin.exponent) /
        margin;
    v.epsilon = v.c_lower * eta - v.c_upper * std::pow(eta, nonlin.exponent);
    if (v.epsilon <= 0.0)
        throw ConfigError(
            "instability_experiment: eta too large, measured epsilon is nonpositive");

    v.unstable = true;
    for (auto& run : v.runs) {
        run.pass = run.norm_at_t >= v.epsilon;
        v.unstable = v.unstable && run.pass;
    }
    v.bound = polynomial_bound(nonlin.exponent, eta, report.lambda_m, report.lambda0,
                               v.c_linear_max);
    return v;
}

DampingFit damping_check(const Trajectory& traj, double theta, double cap) {
    if (traj.times.size() < 2)
        throw DiagnosticsError("damping_check: trajectory too short");
    DampingFit fit;
    fit.theta = theta;

    const size_t n = traj.times.size();
    std::vector<double> integral(n, 0.0);
    for (size_t k = 1; k < n; ++k) {
        const double dt = traj.times[k] - traj.times[k - 1];
        const double decay = std::exp(-theta * dt);
        integral[k] =
            decay * integral[k - 1] + 0.5 * dt * (traj.h1[k] + decay * traj.h1[k - 1]);
    }

    const double h2_0 = traj.h2[0];
    double c = 0.0;
    for (size_t k = 1; k < n; ++k) {
        const double excess = traj.h2[k] - std::exp(-theta * traj.times[k]) * h2_0;
        if (excess <= 0.0) continue;
        if (integral[k] <= 0.0) return fit;  // no finite C can absorb the excess
        c = std::max(c, excess / integral[k]);
    }
    if (c > cap) return fit;

    fit.ok = true;
    fit.c = c;
    fit.residual_max = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < n; ++k) {
        const double lhs = traj.h2[k];
        const double rhs = std::exp(-theta * traj.times[k]) * h2_0 + c * integral[k];
        fit.residual_max = std::max(fit.residual_max, lhs - rhs);
    }
    return fit;
}

}  // namespace bloch
