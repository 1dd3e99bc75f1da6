#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bloch/projections.hpp"
#include "oracles.hpp"

using namespace bloch;

namespace {

// eigenbasis projector onto all eigenvalues enclosed by the contour
Eigen::MatrixXcd eigenbasis_projector(const Eigen::MatrixXcd& mat, const Contour& gamma) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mat, true);
    const Eigen::MatrixXcd v = es.eigenvectors();
    const Eigen::MatrixXcd w = v.partialPivLu().solve(
        Eigen::MatrixXcd::Identity(mat.rows(), mat.cols()));
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(mat.rows(), mat.cols());
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (gamma.encloses(es.eigenvalues()[i])) p += v.col(i) * w.row(i);
    return p;
}

struct PreparedCase {
    SpatialGrid grid;
    PeriodicOperator op;
    SpectrumSampling sampling;
    std::vector<Branch> branches;
    SampledFunction packet;
    int first, last;
};

PreparedCase make_prepared_case() {
    PreparedCase c{SpatialGrid(32, 32),
                   oracles::kdvks_zero_op(1.0),
                   {},
                   {},
                   {},
                   0,
                   0};
    c.sampling = bloch_spectrum(c.op, XiGrid::of_box(c.grid), 6);
    c.branches = track_branches(c.sampling);
    const Branch* top = nullptr;
    for (const auto& b : c.branches)
        if (top == nullptr || b.max_re() > top->max_re()) top = &b;
    int attain = 0;
    for (size_t m = 0; m < top->lambda.size(); ++m)
        if (top->lambda[m].real() > top->lambda[attain].real())
            attain = static_cast<int>(m);
    c.first = c.last = attain;
    const double floor_re = top->lambda[attain].real() - 0.02;
    while (c.first > 0 && top->lambda[c.first - 1].real() >= floor_re) --c.first;
    while (c.last + 1 < int(top->lambda.size()) &&
           top->lambda[c.last + 1].real() >= floor_re)
        ++c.last;
    c.packet = branch_wave_packet(c.grid, c.sampling, *top, c.first, c.last).f0;
    return c;
}

}  // namespace

TEST_CASE("contour projection extracts a coordinate eigenspace") {
    // constant coefficients: the Bloch matrix is diagonal, eigenvectors are
    // coordinate vectors
    const auto op = oracles::heat_op();
    const double xi = 0.25;
    const int m = 4;
    const BlochMatrix bm = assemble_bloch_matrix(op, xi, m);
    const cplx lambda0 = bm.entries(bm.index(0), bm.index(0));

    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(bm.dim());
    v[bm.index(0)] = 1.0;
    v[bm.index(1)] = 1.0;
    const auto gamma = Contour::circle(lambda0, 0.05, 128);
    const Eigen::VectorXcd proj = riesz_project(op, xi, m, gamma, v);
    Eigen::VectorXcd expect = Eigen::VectorXcd::Zero(bm.dim());
    expect[bm.index(0)] = 1.0;
    CHECK((proj - expect).norm() < 1e-10);
}

TEST_CASE("contour projection is idempotent and matches the eigenbasis") {
    const SpatialGrid grid(16, 32);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    int cases = 0;
    for (const auto& op :
         {oracles::mathieu_op(1.0), oracles::random_variable_op(8),
          oracles::kdvks_zero_op(0.3)}) {
        for (double xi : {-0.375, 0.125, 0.3125}) {
            const int m = 8;
            const BlochMatrix bm = assemble_bloch_matrix(op, xi, m);
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(bm.entries, false);
            // enclose the most unstable eigenvalue
            int top = 0;
            for (int i = 1; i < es.eigenvalues().size(); ++i)
                if (es.eigenvalues()[i].real() > es.eigenvalues()[top].real()) top = i;
            double gap = 1e300;
            for (int i = 0; i < es.eigenvalues().size(); ++i)
                if (i != top)
                    gap = std::min(gap,
                                   std::abs(es.eigenvalues()[i] - es.eigenvalues()[top]));
            const auto gamma =
                Contour::circle(es.eigenvalues()[top], gap / 3.0, 128);

            Eigen::VectorXcd v(bm.dim());
            for (int i = 0; i < v.size(); ++i) v[i] = cplx(uni(rng), uni(rng));

            const Eigen::VectorXcd once = riesz_project(op, xi, m, gamma, v);
            const Eigen::VectorXcd twice = riesz_project(op, xi, m, gamma, once);
            CHECK((twice - once).norm() < 1e-10 * std::max(1.0, once.norm()));

            const Eigen::VectorXcd oracle = eigenbasis_projector(bm.entries, gamma) * v;
            CHECK((once - oracle).norm() < 1e-8 * std::max(1.0, v.norm()));
            ++cases;
        }
    }
    CHECK(cases == 9);
}

TEST_CASE("rectangle contours integrate the same projector") {
    const auto op = oracles::mathieu_op(1.0);
    const double xi = 0.125;
    const int m = 8;
    const BlochMatrix bm = assemble_bloch_matrix(op, xi, m);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(bm.entries, true);
    int top = 0;
    for (int i = 1; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i].real() > es.eigenvalues()[top].real()) top = i;
    double gap = 1e300;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (i != top)
            gap = std::min(gap, std::abs(es.eigenvalues()[i] - es.eigenvalues()[top]));
    const cplx center = es.eigenvalues()[top];
    const double half = gap / 3.0;
    const auto rect = Contour::rectangle(center.real() - half, center.real() + half,
                                         center.imag() - half, center.imag() + half,
                                         4096);

    Eigen::VectorXcd v(bm.dim());
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < v.size(); ++i) v[i] = cplx(uni(rng), uni(rng));

    const Eigen::VectorXcd via_rect = riesz_project(op, xi, m, rect, v);
    const Eigen::VectorXcd via_circle =
        riesz_project(op, xi, m, Contour::circle(center, half, 256), v);
    CHECK((via_rect - via_circle).norm() < 1e-6 * v.norm());
}

TEST_CASE("contour validation rejects eigenvalues near the curve") {
    const auto op = oracles::heat_op();
    const BlochMatrix bm = assemble_bloch_matrix(op, 0.25, 4);
    const cplx lambda0 = bm.entries(bm.index(0), bm.index(0));
    const cplx lambda1 = bm.entries(bm.index(1), bm.index(1));
    // circle through another eigenvalue
    const auto gamma = Contour::circle(lambda0, std::abs(lambda1 - lambda0), 128);
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(bm.dim());
    CHECK_THROWS_AS(riesz_project(op, 0.25, 4, gamma, v, 1e-6), ContourError);
    CHECK_THROWS_AS(Contour::circle(1.0, 0.1, 32), DomainError);
}

TEST_CASE("activation of a single mode is the sampled symbol") {
    const SpatialGrid grid(16, 32);
    const auto op = oracles::heat_op(1.0);
    const auto s = bloch_spectrum(op, XiGrid::of_box(grid), 8);
    const auto branches = track_branches(s);

    const int xi_class = 11;  // xi = 3/16
    const SampledFunction u0 = SampledFunction::mode(grid, 1, 0, 1, xi_class);
    const auto rep =
        activation_report(u0, s, branches, 1e-8 * u0.norm(), 2.0, 1e-6);
    const double kappa = 1.0 + grid.xi(xi_class);
    CHECK(rep.any_mass);
    CHECK(rep.lambda_m == doctest::Approx(1.0 - kappa * kappa).epsilon(1e-12));
    CHECK(rep.activated == (1.0 - kappa * kappa > 0.5));
    CHECK(rep.lambda_m <= rep.lambda0 + 1e-10);
}

TEST_CASE("high-frequency data under a stable operator is not activated") {
    const SpatialGrid grid(16, 32);
    const auto op = oracles::heat_op();
    const auto s = bloch_spectrum(op, XiGrid::of_box(grid), 8);
    const auto branches = track_branches(s);
    const SampledFunction u0 = SampledFunction::mode(grid, 1, 0, 5, 3);
    const auto rep = activation_report(u0, s, branches, 1e-8 * u0.norm(), 2.0);
    CHECK(rep.any_mass);
    CHECK_FALSE(rep.activated);
    CHECK(rep.lambda_m < 0.0);
}

TEST_CASE("prepared packet activates its construction branch") {
    const auto c = make_prepared_case();
    const auto rep = activation_report(c.packet, c.sampling, c.branches,
                                       1e-8 * c.packet.norm(), 2.0);
    REQUIRE(rep.activated);
    // lambda_M equals the branch maximum over the construction interval
    double expect = -1e300;
    for (const auto& b : c.branches)
        if (b.id == rep.branch_id)
            for (int m = c.first; m <= c.last; ++m)
                expect = std::max(expect, b.lambda[m].real());
    CHECK(rep.lambda_m == doctest::Approx(expect).epsilon(1e-10));
    CHECK(rep.activation_mass_inf > 0.9);  // unit eigenvector slices
    CHECK(rep.projector_norm_sup >= 1.0 - 1e-9);

    SUBCASE("projection leaves the packet invariant") {
        const SampledFunction p1 =
            project_onto_activated(c.packet, rep, c.sampling);
        CHECK(p1.distance(c.packet) < 1e-8 * c.packet.norm());
        const SampledFunction p2 = project_onto_activated(p1, rep, c.sampling);
        CHECK(p2.distance(p1) < 1e-9 * p1.norm());
    }

    SUBCASE("projection annihilates data supported off the interval") {
        // place a mode at a xi class outside I on a different branch
        const int outside = (rep.interval_first + c.sampling.grid.count() / 2) %
                            c.sampling.grid.count();
        const SampledFunction far = SampledFunction::mode(c.grid, 1, 0, 3, outside);
        const SampledFunction proj = project_onto_activated(far, rep, c.sampling);
        CHECK(proj.norm() < 1e-10 * far.norm());
    }

    SUBCASE("projection norm bound uses the reported factor") {
        const SampledFunction g = oracles::random_band_limited(c.grid, 3.0, 77);
        const SampledFunction pg = project_onto_activated(g, rep, c.sampling);
        CHECK(pg.norm() <= rep.projector_norm_sup * g.norm() * (1.0 + 1e-9));
    }
}

TEST_CASE("raising the activation threshold never raises lambda_M") {
    const auto c = make_prepared_case();
    SampledFunction mixed = c.packet;
    mixed += 0.05 * SampledFunction::mode(c.grid, 1, 0, 2, 5);
    double prev = 1e300;
    for (double tau : {1e-10, 1e-6, 1e-2, 0.5}) {
        const auto rep = activation_report(mixed, c.sampling, c.branches,
                                           tau * mixed.norm(), 2.0);
        if (!rep.any_mass) break;
        CHECK(rep.lambda_m <= prev + 1e-14);
        prev = rep.lambda_m;
    }
}

TEST_CASE("complement projection") {
    const SpatialGrid grid(16, 32);
    const auto op = oracles::heat_op(1.0);
    const auto s = bloch_spectrum(op, XiGrid::of_box(grid), 8);

    SUBCASE("removing spectrum above lambda_M leaves a consistent u0 unchanged") {
        const auto branches = track_branches(s);
        const SampledFunction u0 = SampledFunction::mode(grid, 1, 0, 0, 8);  // xi = 0
        const auto rep = activation_report(u0, s, branches, 1e-8 * u0.norm(), 2.0);
        // u0 is the most unstable mode, so nothing lies strictly above lambda_M
        const auto res = complement_projection(u0, s, rep.lambda_m, 1e-6);
        CHECK(res.field.distance(u0) < 1e-6 * u0.norm());
    }

    SUBCASE("an eigenmode strictly above the threshold is annihilated") {
        const SampledFunction u0 = SampledFunction::mode(grid, 1, 0, 0, 8);
        const auto res = complement_projection(u0, s, 0.5, 1e-6);
        CHECK(res.field.norm() < 1e-10 * u0.norm());
    }

    SUBCASE("zero maps to zero") {
        SampledFunction z(grid, 1);
        CHECK(complement_projection(z, s, 0.0).field.norm() == 0.0);
    }
}

TEST_CASE("wave packet of a constant-coefficient branch is a fourier packet") {
    const auto c = make_prepared_case();
    CHECK(c.packet.norm() > 0.0);
    // spectrum concentrated on the construction harmonic: dominant bins only
    // at kappa = k* + xi for xi in I
    const auto coef = c.packet.spectrum();
    const auto field = bloch_transform(c.packet);
    double inside = 0.0, outside = 0.0;
    for (int r = 0; r < field.xi_count(); ++r) {
        const double mass = field.slice_norm(r);
        if (r >= c.first && r <= c.last)
            inside += mass * mass;
        else
            outside += mass * mass;
    }
    CHECK(outside < 1e-20 * inside);
    (void)coef;
}

TEST_CASE("empty interval is rejected") {
    const auto c = make_prepared_case();
    ProjectionReport rep;  // no interval
    CHECK_THROWS_AS(project_onto_activated(c.packet, rep, c.sampling), DomainError);
    const Branch& b = c.branches.front();
    CHECK_THROWS_AS(branch_wave_packet(c.grid, c.sampling, b, 5, 4), DomainError);
}
