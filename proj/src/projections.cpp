#include "bloch/projections.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace bloch {

Contour Contour::circle(cplx center, double radius, int nodes) {
    if (radius <= 0.0) throw DomainError("Contour: circle radius must be positive");
    if (nodes < 64) throw DomainError("Contour: need at least 64 quadrature nodes");
    Contour c;
    c.shape = Shape::circle;
    c.center = center;
    c.radius = radius;
    c.nodes = nodes;
    return c;
}

Contour Contour::rectangle(double re_lo, double re_hi, double im_lo, double im_hi,
                           int nodes) {
    if (re_lo >= re_hi || im_lo >= im_hi)
        throw DomainError("Contour: degenerate rectangle");
    if (nodes < 64) throw DomainError("Contour: need at least 64 quadrature nodes");
    Contour c;
    c.shape = Shape::rectangle;
    c.re_lo = re_lo;
    c.re_hi = re_hi;
    c.im_lo = im_lo;
    c.im_hi = im_hi;
    c.nodes = nodes;
    return c;
}

void Contour::quadrature(std::vector<cplx>& zeta, std::vector<cplx>& weight) const {
    zeta.clear();
    weight.clear();
    if (shape == Shape::circle) {
        // (1/(2 pi i)) int f dzeta = (1/N) sum_q r e^{i theta_q} f(zeta_q)
        for (int q = 0; q < nodes; ++q) {
            const double theta = 2.0 * pi * q / nodes;
            const cplx dir = std::exp(1i * theta);
            zeta.push_back(center + radius * dir);
            weight.push_back(radius * dir / double(nodes));
        }
        return;
    }
    const cplx corners[4] = {{re_lo, im_lo}, {re_hi, im_lo}, {re_hi, im_hi}, {re_lo, im_hi}};
    const int per_edge = std::max(1, nodes / 4);
    for (int e = 0; e < 4; ++e) {
        const cplx a = corners[e];
        const cplx b = corners[(e + 1) % 4];
        const cplx step = (b - a) / double(per_edge);
        for (int q = 0; q < per_edge; ++q) {
            zeta.push_back(a + (q + 0.5) * step);
            weight.push_back(step / (2.0 * pi * 1i));
        }
    }
}

double Contour::distance(cplx z) const {
    if (shape == Shape::circle) return std::abs(std::abs(z - center) - radius);
    // distance to the rectangle boundary
    const double dx = std::max({re_lo - z.real(), 0.0, z.real() - re_hi});
    const double dy = std::max({im_lo - z.imag(), 0.0, z.imag() - im_hi});
    if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
    const double inner = std::min(
        std::min(z.real() - re_lo, re_hi - z.real()),
        std::min(z.imag() - im_lo, im_hi - z.imag()));
    return inner;
}

bool Contour::encloses(cplx z) const {
    if (shape == Shape::circle) return std::abs(z - center) < radius;
    return z.real() > re_lo && z.real() < re_hi && z.imag() > im_lo && z.imag() < im_hi;
}

Eigen::VectorXcd riesz_project(const PeriodicOperator& op, double xi, int truncation,
                               const Contour& gamma, const Eigen::VectorXcd& v,
                               double eps_gap) {
    const BlochMatrix bm = assemble_bloch_matrix(op, xi, truncation);
    if (v.size() != bm.dim()) throw ShapeError("riesz_project: vector length mismatch");

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(bm.entries, false);
    if (solver.info() != Eigen::Success)
        throw SolverError("riesz_project: eigensolver failed at xi = " + std::to_string(xi));
    for (const auto& l : solver.eigenvalues())
        if (gamma.distance(l) < eps_gap) {
            throw ContourError("riesz_project: eigenvalue " + std::to_string(l.real()) +
                               (l.imag() < 0 ? " - " : " + ") +
                               std::to_string(std::abs(l.imag())) +
                               "i lies within eps_gap of the contour");
        }

    std::vector<cplx> zeta, weight;
    gamma.quadrature(zeta, weight);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(v.size());
    Eigen::MatrixXcd shifted(bm.dim(), bm.dim());
    for (size_t q = 0; q < zeta.size(); ++q) {
        shifted = -bm.entries;
        shifted.diagonal().array() += zeta[q];
        acc += weight[q] * shifted.partialPivLu().solve(v);
    }
    return acc;
}

std::vector<std::vector<int>> eigen_clusters(const XiEigenSystem& sys, double tol) {
    const int n = static_cast<int>(sys.eigenvalues.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(sys.eigenvalues[i] - sys.eigenvalues[j]) < tol)
                parent[find(i)] = find(j);
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::erase_if(groups, [](const auto& g) { return g.empty(); });
    return groups;
}

Eigen::MatrixXcd cluster_projector(const XiEigenSystem& sys, int eigen_index, double tol) {
    for (const auto& g : eigen_clusters(sys, tol)) {
        if (std::find(g.begin(), g.end(), eigen_index) == g.end()) continue;
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(sys.right.rows(), sys.right.rows());
        for (int i : g) p += sys.right.col(i) * sys.dual.row(i);
        return p;
    }
    throw DomainError("cluster_projector: eigen index out of range");
}

Eigen::MatrixXd activation_masses(const BlochField& u0_field, const SpectrumSampling& s,
                                  double cluster_tol) {
    const int nxi = s.grid.count();
    if (u0_field.xi_count() != nxi)
        throw ShapeError("activation_masses: xi grids of field and sampling differ");
    const int n = s.eigen_count();
    Eigen::MatrixXd masses(nxi, n);
    for (int m = 0; m < nxi; ++m) {
        const auto& sys = s.points[m];
        const Eigen::VectorXcd u = u0_field.slice_galerkin(m, s.truncation);
        const Eigen::VectorXcd coords = sys.dual * u;
        for (const auto& g : eigen_clusters(sys, cluster_tol)) {
            Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(u.size());
            for (int i : g) proj += sys.right.col(i) * coords[i];
            const double mass = std::sqrt(2.0 * pi) * proj.norm();
            for (int i : g) masses(m, i) = mass;
        }
    }
    return masses;
}

namespace {

double projector_two_norm(const Eigen::MatrixXcd& p) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(p);
    return svd.singularValues()[0];
}

// Circle around the branch eigenvalues over [first, last], kept eps_gap clear
// of every foreign eigenvalue; shrinks the interval when separation fails.
struct ContourFit {
    Contour contour;
    int first, last;
    std::vector<std::string> warnings;
};

ContourFit fit_branch_contour(const SpectrumSampling& s, const Branch& branch,
                              int attain, int first, int last, double eps_gap,
                              int nodes) {
    ContourFit fit{Contour{}, first, last, {}};
    while (true) {
        cplx center = 0.0;
        for (int m = fit.first; m <= fit.last; ++m) center += branch.lambda[m];
        center /= double(fit.last - fit.first + 1);

        double r_branch = 0.0;
        double d_foreign = std::numeric_limits<double>::infinity();
        for (int m = fit.first; m <= fit.last; ++m) {
            r_branch = std::max(r_branch, std::abs(branch.lambda[m] - center));
            const auto& ev = s.points[m].eigenvalues;
            for (int i = 0; i < ev.size(); ++i)
                if (i != branch.eigen_index[m])
                    d_foreign = std::min(d_foreign, std::abs(ev[i] - center));
        }
        if (d_foreign - r_branch > 2.0 * eps_gap) {
            fit.contour = Contour::circle(center, 0.5 * (r_branch + d_foreign), nodes);
            return fit;
        }
        if (fit.first == fit.last) {
            // clustered eigenvalue; report a degenerate-contour warning
            const double radius = std::max(0.5 * d_foreign, 4.0 * eps_gap);
            fit.contour = Contour::circle(center, radius, nodes);
            fit.warnings.push_back(
                "attaining eigenvalue is not isolated at eps_gap; contour degenerate");
            return fit;
        }
        // drop the interval end farther from the attaining point
        if (attain - fit.first >= fit.last - attain)
            ++fit.first;
        else
            --fit.last;
    }
}

}  // namespace

ProjectionReport activation_report(const SampledFunction& u0, const SpectrumSampling& s,
                                   const std::vector<Branch>& branches, double tau_act,
                                   double p, double eps_gap) {
    const BlochField field = bloch_transform(u0);
    const Eigen::MatrixXd masses = activation_masses(field, s, eps_gap);
    const int nxi = s.grid.count();
    const int n = s.eigen_count();

    ProjectionReport rep;
    rep.tau_act = tau_act;
    rep.lambda0 = spectral_abscissa(s).value;
    rep.growth_floor = rep.lambda0 / p;
    rep.lambda_m = -std::numeric_limits<double>::infinity();

    for (int m = 0; m < nxi; ++m)
        for (int i = 0; i < n; ++i) {
            if (masses(m, i) <= tau_act) continue;
            rep.any_mass = true;
            const double re = s.points[m].eigenvalues[i].real();
            if (re > rep.lambda_m) {
                rep.lambda_m = re;
                rep.xi_index = m;
                rep.eigen_index = i;
            }
        }
    if (!rep.any_mass) {
        rep.warnings.push_back("no (xi, eigenvalue) pair carries mass above tau_act");
        return rep;
    }
    rep.activated = rep.lambda_m > rep.growth_floor;

    // branch through the attaining pair
    const Branch* attaining = nullptr;
    for (const auto& b : branches)
        if (b.eigen_index[rep.xi_index] == rep.eigen_index) {
            attaining = &b;
            break;
        }
    if (attaining == nullptr)
        throw DomainError("activation_report: branches do not cover the attaining pair");
    rep.branch_id = attaining->id;

    // maximal interval around the attaining xi with branch mass above tau_act
    int first = rep.xi_index, last = rep.xi_index;
    while (first > 0 && masses(first - 1, attaining->eigen_index[first - 1]) > tau_act)
        --first;
    while (last + 1 < nxi && masses(last + 1, attaining->eigen_index[last + 1]) > tau_act)
        ++last;

    ContourFit fit = fit_branch_contour(s, *attaining, rep.xi_index, first, last,
                                        eps_gap, 128);
    rep.interval_first = fit.first;
    rep.interval_last = fit.last;
    rep.interval_xi_lo = s.grid.value(fit.first);
    rep.interval_xi_hi =
        fit.last + 1 < nxi ? s.grid.value(fit.last + 1) : 0.5;
    rep.contour = fit.contour;
    rep.warnings.insert(rep.warnings.end(), fit.warnings.begin(), fit.warnings.end());

    rep.activation_mass_inf = std::numeric_limits<double>::infinity();
    rep.projector_norm_sup = 0.0;
    for (int m = fit.first; m <= fit.last; ++m) {
        rep.interval_eigen_index.push_back(attaining->eigen_index[m]);
        rep.activation_mass_inf =
            std::min(rep.activation_mass_inf, masses(m, attaining->eigen_index[m]));
        rep.projector_norm_sup = std::max(
            rep.projector_norm_sup,
            projector_two_norm(
                cluster_projector(s.points[m], attaining->eigen_index[m], eps_gap)));
        if (attaining->crossing_suspect[m])
            rep.warnings.push_back("crossing-suspect branch step inside I at xi = " +
                                   std::to_string(s.grid.value(m)));
    }
    return rep;
}

SampledFunction project_onto_activated(const SampledFunction& u0,
                                       const ProjectionReport& report,
                                       const SpectrumSampling& s, double eps_gap) {
    if (!report.any_mass || report.interval_eigen_index.empty())
        throw DomainError("project_onto_activated: report has an empty interval");
    const BlochField field = bloch_transform(u0);
    BlochField out(field.grid(), field.components());

    for (int m = report.interval_first; m <= report.interval_last; ++m) {
        const auto& sys = s.points[m];
        const int idx = report.interval_eigen_index[m - report.interval_first];
        const Eigen::VectorXcd u = field.slice_galerkin(m, s.truncation);
        const Eigen::VectorXcd coords = sys.dual * u;
        Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(u.size());
        for (const auto& g : eigen_clusters(sys, eps_gap)) {
            if (std::find(g.begin(), g.end(), idx) == g.end()) continue;
            for (int i : g) proj += sys.right.col(i) * coords[i];
            break;
        }
        out.set_slice_galerkin(m, s.truncation, proj);
    }
    return inverse_bloch(out);
}

ComplementResult complement_projection(const SampledFunction& u0,
                                       const SpectrumSampling& s, double threshold,
                                       double eps_gap) {
    const BlochField field = bloch_transform(u0);
    BlochField out = field;
    ComplementResult res{SampledFunction(), {}};

    const EigencountPartition part = eigencount_partition(s, threshold, eps_gap);
    res.warnings = part.warnings;

    for (int m = 0; m < s.grid.count(); ++m) {
        const auto& sys = s.points[m];
        std::vector<int> above;
        for (int i = 0; i < sys.eigenvalues.size(); ++i)
            if (sys.eigenvalues[i].real() > threshold) above.push_back(i);
        if (above.empty()) continue;

        // expand to full clusters so the projector stays well-conditioned
        std::vector<bool> keep(sys.eigenvalues.size(), false);
        for (const auto& g : eigen_clusters(sys, eps_gap)) {
            const size_t hits = std::count_if(g.begin(), g.end(), [&](int i) {
                return std::find(above.begin(), above.end(), i) != above.end();
            });
            if (hits == 0) continue;
            for (int i : g) keep[i] = true;
            if (hits < g.size())
                res.warnings.push_back(
                    "cluster straddles the removal threshold at xi = " +
                    std::to_string(s.grid.value(m)));
        }

        const Eigen::VectorXcd u = field.slice_galerkin(m, s.truncation);
        const Eigen::VectorXcd coords = sys.dual * u;
        Eigen::VectorXcd removed = Eigen::VectorXcd::Zero(u.size());
        for (int i = 0; i < sys.eigenvalues.size(); ++i)
            if (keep[i]) removed += sys.right.col(i) * coords[i];
        out.add_slice_galerkin(m, s.truncation, removed, -1.0);
    }
    res.field = inverse_bloch(out);
    return res;
}

PreparedData branch_wave_packet(const SpatialGrid& grid, const SpectrumSampling& s,
                                const Branch& branch, int first_xi, int last_xi) {
    if (grid.periods != s.grid.count())
        throw ShapeError("branch_wave_packet: sampling xi grid must match the box");
    if (first_xi < 0 || last_xi >= s.grid.count() || first_xi > last_xi)
        throw DomainError("branch_wave_packet: empty or out-of-range xi interval");

    PreparedData out{SampledFunction(), {}};
    BlochField field(grid, s.components);

    Eigen::VectorXcd prev;
    for (int m = first_xi; m <= last_xi; ++m) {
        Eigen::VectorXcd v = s.points[m].right.col(branch.eigen_index[m]);
        if (branch.crossing_suspect[m])
            out.warnings.push_back("crossing-suspect branch step inside I at xi = " +
                                   std::to_string(s.grid.value(m)));
        if (prev.size() > 0) {
            const cplx overlap = prev.dot(v);
            if (std::abs(overlap) < 1e-8 * prev.norm() * v.norm())
                throw Error("branch_wave_packet: degenerate eigenvector continuation at "
                            "xi = " + std::to_string(s.grid.value(m)));
            v *= std::conj(overlap) / std::abs(overlap);
        }
        field.set_slice_galerkin(m, s.truncation, v);
        prev = v;
    }
    out.f0 = inverse_bloch(field);
    return out;
}

}  // namespace bloch
