#include "bloch/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bloch/parallel.hpp"

namespace bloch {

XiGrid::XiGrid(int count) : count_(count) {
    if (count < 1) throw DomainError("XiGrid: count must be positive");
}

double Branch::max_re() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& l : lambda) m = std::max(m, l.real());
    return m;
}

SpectrumSampling bloch_spectrum(const PeriodicOperator& op, const XiGrid& grid,
                                int truncation) {
    SpectrumSampling s{grid, truncation, op.components(), {}};
    s.points.resize(grid.count());
    std::vector<std::string> failures(grid.count());

    parallel_for(grid.count(), [&](int m) {
        const double xi = grid.value(m);
        const BlochMatrix bm = assemble_bloch_matrix(op, xi, truncation);
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(bm.entries, true);
        if (solver.info() != Eigen::Success) {
            failures[m] = "eigensolver failed at xi = " + std::to_string(xi);
            return;
        }
        const int n = bm.dim();
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        const auto& ev = solver.eigenvalues();
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (ev[a].real() != ev[b].real()) return ev[a].real() > ev[b].real();
            return ev[a].imag() < ev[b].imag();
        });

        XiEigenSystem sys;
        sys.xi = xi;
        sys.eigenvalues.resize(n);
        sys.right.resize(n, n);
        for (int i = 0; i < n; ++i) {
            sys.eigenvalues[i] = ev[order[i]];
            // unit discrete L^2(per) norm: sqrt(2*pi)*|coeffs| = 1
            Eigen::VectorXcd v = solver.eigenvectors().col(order[i]);
            sys.right.col(i) = v / (std::sqrt(2.0 * pi) * v.norm());
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.right);
        sys.dual = lu.solve(Eigen::MatrixXcd::Identity(n, n));
        s.points[m] = std::move(sys);
    });

    for (const auto& f : failures)
        if (!f.empty()) throw SolverError("bloch_spectrum: " + f);
    return s;
}

namespace {

// Median distance to the nearest other eigenvalue within one xi column.
// Exact degeneracies (gap zero) are excluded so the scale survives symmetric
// spectra whose eigenvalues come in coincident pairs.
double median_nearest_gap(const Eigen::VectorXcd& ev) {
    const int n = static_cast<int>(ev.size());
    if (n < 2) return 0.0;
    std::vector<double> gaps;
    gaps.reserve(n);
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (j != i) best = std::min(best, std::abs(ev[i] - ev[j]));
        if (best > 0.0) gaps.push_back(best);
    }
    if (gaps.empty()) return 1.0;
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

}  // namespace

std::vector<Branch> track_branches(const SpectrumSampling& s,
                                   double continuity_multiplier) {
    const int nxi = s.grid.count();
    if (nxi < 16) throw DomainError("track_branches: need at least 16 xi samples");
    const int n = s.eigen_count();

    std::vector<Branch> branches(n);
    for (int b = 0; b < n; ++b) {
        branches[b].id = b;
        branches[b].eigen_index.assign(nxi, 0);
        branches[b].lambda.assign(nxi, 0.0);
        branches[b].crossing_suspect.assign(nxi, false);
        branches[b].eigen_index[0] = b;
        branches[b].lambda[0] = s.points[0].eigenvalues[b];
    }

    // Greedy minimal-cost assignment between consecutive columns. Eigenvalue
    // distance alone cannot separate the near-degenerate value pairs a
    // non-monotone symbol produces, so the cost adds an eigenvector-overlap
    // penalty on the same scale as the local eigenvalue gaps.
    std::vector<int> match(n);
    for (int m = 0; m + 1 < nxi; ++m) {
        const auto& prev = s.points[m].eigenvalues;
        const auto& next = s.points[m + 1].eigenvalues;
        const Eigen::MatrixXd overlap =
            (2.0 * pi) *
            (s.points[m].right.adjoint() * s.points[m + 1].right).cwiseAbs();
        const double gap_scale = 10.0 * median_nearest_gap(next);
        struct Pair {
            double dist;
            int i, j;
        };
        std::vector<Pair> pairs;
        pairs.reserve(size_t(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pairs.push_back({std::abs(prev[i] - next[j]) +
                                     gap_scale * (1.0 - std::min(overlap(i, j), 1.0)),
                                 i, j});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            if (a.i != b.i) return a.i < b.i;
            return a.j < b.j;
        });
        std::vector<bool> used_i(n, false), used_j(n, false);
        int assigned = 0;
        for (const auto& p : pairs) {
            if (used_i[p.i] || used_j[p.j]) continue;
            used_i[p.i] = used_j[p.j] = true;
            match[p.i] = p.j;
            if (++assigned == n) break;
        }

        const double tau = continuity_multiplier * median_nearest_gap(next);
        for (auto& b : branches) {
            const int i = b.eigen_index[m];
            const int j = match[i];
            b.eigen_index[m + 1] = j;
            b.lambda[m + 1] = next[j];
            if (tau > 0.0 && std::abs(next[j] - prev[i]) > tau)
                b.crossing_suspect[m + 1] = true;
        }
    }
    return branches;
}

SpectralAbscissa spectral_abscissa(const SpectrumSampling& s) {
    SpectralAbscissa best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < s.grid.count(); ++m) {
        const auto& ev = s.points[m].eigenvalues;
        for (int i = 0; i < ev.size(); ++i)
            if (ev[i].real() > best.value) best = {ev[i].real(), m, i};
    }
    return best;
}

UnstableSet unstable_set(const SpectrumSampling& s, double p,
                         const std::vector<Branch>& branches) {
    if (p <= 1.0) throw DomainError("unstable_set: p must exceed 1");
    UnstableSet u;
    u.lambda0 = spectral_abscissa(s).value;
    u.threshold = u.lambda0 / p;
    for (const auto& b : branches) {
        int start = -1;
        for (int m = 0; m <= s.grid.count(); ++m) {
            const bool above =
                m < s.grid.count() && b.lambda[m].real() > u.threshold;
            if (above && start < 0) start = m;
            if (!above && start >= 0) {
                u.members.push_back({b.id, start, m - 1});
                start = -1;
            }
        }
    }
    return u;
}

EigencountPartition eigencount_partition(const SpectrumSampling& s, double threshold,
                                         double eps_gap) {
    const int nxi = s.grid.count();
    EigencountPartition part;
    part.threshold = threshold;

    std::vector<int> count(nxi, 0);
    std::vector<bool> marginal(nxi, false);
    double re_hi = threshold, im_lo = 0.0, im_hi = 0.0;
    for (int m = 0; m < nxi; ++m) {
        for (const auto& l : s.points[m].eigenvalues) {
            if (l.real() > threshold) {
                ++count[m];
                part.enclosed_any = true;
                re_hi = std::max(re_hi, l.real());
                im_lo = std::min(im_lo, l.imag());
                im_hi = std::max(im_hi, l.imag());
            }
            if (std::abs(l.real() - threshold) < eps_gap) marginal[m] = true;
        }
    }

    int start = 0;
    for (int m = 1; m <= nxi; ++m) {
        if (m < nxi && count[m] == count[start]) continue;
        EigencountPartition::Interval iv;
        iv.first_xi = start;
        iv.last_xi = m - 1;
        iv.xi_lo = s.grid.value(start);
        iv.xi_hi = m < nxi ? s.grid.value(m) : 0.5;
        iv.count = count[start];
        iv.marginal = false;
        for (int k = start; k < m; ++k) iv.marginal = iv.marginal || marginal[k];
        if (iv.marginal)
            part.warnings.push_back("marginal eigenvalue count near threshold on xi in [" +
                                    std::to_string(iv.xi_lo) + ", " +
                                    std::to_string(iv.xi_hi) + ")");
        part.intervals.push_back(iv);
        start = m;
    }

    if (part.enclosed_any) {
        const double pad = std::max(eps_gap, 1e-3 * (re_hi - threshold + 1.0));
        part.rect_re_lo = threshold;
        part.rect_re_hi = re_hi + pad;
        part.rect_im_lo = im_lo - pad;
        part.rect_im_hi = im_hi + pad;
    }
    return part;
}

}  // namespace bloch
