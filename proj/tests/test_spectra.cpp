#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bloch/spectra.hpp"
#include "oracles.hpp"

using namespace bloch;

TEST_CASE("heat eigenvalues are exactly the sampled symbol") {
    const auto s = bloch_spectrum(oracles::heat_op(), XiGrid(16), 6);
    for (int m = 0; m < 16; ++m) {
        const double xi = s.grid.value(m);
        for (int k = -6; k <= 6; ++k) {
            double best = 1e300;
            for (const auto& l : s.points[m].eigenvalues)
                best = std::min(best, std::abs(l - cplx(-(k + xi) * (k + xi), 0.0)));
            CHECK(best < 1e-12 * std::max(1.0, (k + xi) * (k + xi)));
        }
    }
}

TEST_CASE("dissipative hump spectrum matches the symbol oracle") {
    const auto op = oracles::kdvks_zero_op(0.1);
    const auto s = bloch_spectrum(op, XiGrid(32), 6);
    for (int m = 0; m < 32; ++m)
        for (int k = -6; k <= 6; ++k) {
            const cplx expect = symbol_eval(op, k + s.grid.value(m));
            double best = 1e300;
            for (const auto& l : s.points[m].eigenvalues)
                best = std::min(best, std::abs(l - expect));
            CHECK(best < 1e-10 * std::max(1.0, std::abs(expect)));
        }
}

TEST_CASE("mathieu band edges converge under truncation refinement") {
    auto edge = [&](int m) {
        const auto s = bloch_spectrum(oracles::mathieu_op(1.0), XiGrid(16), m);
        // eigenvalues sorted by descending real part; the top of the spectrum
        return s.points[8].eigenvalues[0];  // xi = 0
    };
    CHECK(std::abs(edge(32) - edge(64)) < 1e-10);
}

TEST_CASE("branches of a constant-coefficient operator follow the symbol") {
    const auto op = oracles::kdvks_zero_op(0.2);
    const auto s = bloch_spectrum(op, XiGrid(32), 4);
    const auto branches = track_branches(s);
    REQUIRE(branches.size() == 9);
    for (const auto& b : branches) {
        // identify the harmonic from the first grid point, verify the rest
        const double xi0 = s.grid.value(0);
        int harmonic = 0;
        double best = 1e300;
        for (int k = -4; k <= 4; ++k)
            if (std::abs(b.lambda[0] - symbol_eval(op, k + xi0)) < best) {
                best = std::abs(b.lambda[0] - symbol_eval(op, k + xi0));
                harmonic = k;
            }
        for (int m = 0; m < 32; ++m) {
            const cplx expect = symbol_eval(op, harmonic + s.grid.value(m));
            CHECK(std::abs(b.lambda[m] - expect) <
                  1e-9 * std::max(1.0, std::abs(expect)));
            CHECK_FALSE(b.crossing_suspect[m]);
        }
    }
}

TEST_CASE("branch values agree when the grid is doubled") {
    const auto op = oracles::mathieu_op(0.7);
    const auto coarse = bloch_spectrum(op, XiGrid(16), 8);
    const auto fine = bloch_spectrum(op, XiGrid(32), 8);
    // shared xi values are the even indices of the fine grid
    for (int m = 0; m < 16; ++m) {
        REQUIRE(coarse.grid.value(m) == doctest::Approx(fine.grid.value(2 * m)));
        for (int i = 0; i < coarse.eigen_count(); ++i) {
            double best = 1e300;
            for (int j = 0; j < fine.eigen_count(); ++j)
                best = std::min(best, std::abs(coarse.points[m].eigenvalues[i] -
                                               fine.points[2 * m].eigenvalues[j]));
            CHECK(best < 1e-12 * std::max(1.0, std::abs(coarse.points[m].eigenvalues[i])));
        }
    }
}

TEST_CASE("spectral abscissa") {
    const auto heat = bloch_spectrum(oracles::heat_op(), XiGrid(16), 6);
    const auto a = spectral_abscissa(heat);
    CHECK(std::abs(a.value) < 1e-12);
    CHECK(heat.grid.value(a.xi_index) == doctest::Approx(0.0));

    const auto shifted = bloch_spectrum(oracles::heat_op(0.7), XiGrid(16), 6);
    CHECK(spectral_abscissa(shifted).value == doctest::Approx(0.7).epsilon(1e-12));

    // straddles kappa = 1/sqrt(2) closely at 512 samples
    const auto kdvks = bloch_spectrum(oracles::kdvks_zero_op(0.1), XiGrid(512), 4);
    CHECK(std::abs(spectral_abscissa(kdvks).value - 0.025) < 1e-6);
}

TEST_CASE("abscissa shifts exactly with a constant") {
    const auto op = oracles::random_variable_op(17);
    const auto s0 = bloch_spectrum(op, XiGrid(16), 8);
    const auto s1 = bloch_spectrum(op.shifted(0.35), XiGrid(16), 8);
    CHECK(spectral_abscissa(s1).value ==
          doctest::Approx(spectral_abscissa(s0).value + 0.35).epsilon(1e-10));
}

TEST_CASE("unstable set membership") {
    const auto heat = bloch_spectrum(oracles::heat_op(), XiGrid(16), 6);
    const auto heat_branches = track_branches(heat);
    const auto empty = unstable_set(heat, 2.0, heat_branches);
    CHECK(empty.lambda0 == doctest::Approx(0.0));
    CHECK(empty.empty());

    const auto s = bloch_spectrum(oracles::heat_op(1.0), XiGrid(64), 6);
    const auto branches = track_branches(s);
    const auto u = unstable_set(s, 2.0, branches);
    CHECK(u.threshold == doctest::Approx(0.5));
    REQUIRE_FALSE(u.empty());
    // closed form: 1 - (k + xi)^2 > 1/2  <=>  |k + xi| < 1/sqrt(2)
    for (const auto& seg : u.members)
        for (int m = seg.first_xi; m <= seg.last_xi; ++m) {
            const auto lambda = branches[seg.branch_id].lambda[m];
            CHECK(lambda.real() > 0.5);
        }
    // total count of (xi, eigenvalue) samples above threshold matches closed form
    int direct = 0;
    for (int m = 0; m < 64; ++m)
        for (int k = -6; k <= 6; ++k)
            if (1.0 - std::pow(k + s.grid.value(m), 2.0) > 0.5) ++direct;
    int via_segments = 0;
    for (const auto& seg : u.members) via_segments += seg.last_xi - seg.first_xi + 1;
    CHECK(direct == via_segments);
}

TEST_CASE("eigencount partition matches the closed form for shifted heat") {
    const auto s = bloch_spectrum(oracles::heat_op(1.0), XiGrid(64), 6);
    const auto part = eigencount_partition(s, 0.75, 1e-6);

    for (const auto& iv : part.intervals)
        for (int m = iv.first_xi; m <= iv.last_xi; ++m) {
            int expect = 0;
            for (int k = -6; k <= 6; ++k)
                if (1.0 - std::pow(k + s.grid.value(m), 2.0) > 0.75) ++expect;
            CHECK(iv.count == expect);
        }
    CHECK(part.intervals.size() >= 2);
    CHECK(part.intervals.size() <= 3);
    CHECK(part.enclosed_any);
    CHECK(part.rect_re_lo == doctest::Approx(0.75));
    // the xi = -1/2 sample sits exactly on the threshold
    CHECK(part.intervals.front().marginal);
    CHECK_FALSE(part.warnings.empty());
}

TEST_CASE("empty super-threshold set gives one interval of count zero") {
    const auto s = bloch_spectrum(oracles::heat_op(), XiGrid(32), 6);
    const auto part = eigencount_partition(s, 0.1, 1e-6);
    REQUIRE(part.intervals.size() == 1);
    CHECK(part.intervals[0].count == 0);
    CHECK(part.intervals[0].xi_lo == doctest::Approx(-0.5));
    CHECK(part.intervals[0].xi_hi == doctest::Approx(0.5));
    CHECK_FALSE(part.enclosed_any);
}

TEST_CASE("partition counts are stable under grid doubling") {
    const auto op = oracles::kdvks_zero_op(0.1);
    const auto coarse = eigencount_partition(bloch_spectrum(op, XiGrid(64), 6), 0.02);
    const auto fine = eigencount_partition(bloch_spectrum(op, XiGrid(128), 6), 0.02);
    // compare the count at shared xi values
    auto count_at = [](const EigencountPartition& p, double xi) {
        for (const auto& iv : p.intervals)
            if (xi >= iv.xi_lo && xi < iv.xi_hi) return iv.count;
        return -1;
    };
    for (int m = 0; m < 64; ++m) {
        const double xi = -0.5 + m / 64.0;
        CHECK(count_at(coarse, xi) == count_at(fine, xi));
    }
}

TEST_CASE("preconditions") {
    const auto s = bloch_spectrum(oracles::heat_op(), XiGrid(8), 4);
    CHECK_THROWS_AS(track_branches(s), DomainError);
    const auto s2 = bloch_spectrum(oracles::heat_op(), XiGrid(16), 4);
    CHECK_THROWS_AS(unstable_set(s2, 1.0, track_branches(s2)), DomainError);
}
