#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bloch/report_io.hpp"
#include "bloch/scenario.hpp"
#include "oracles.hpp"

using namespace bloch;
using nlohmann::json;

namespace {

json minimal_doc() {
    return json::parse(R"({
        "name": "t",
        "mode": "reaction_diffusion",
        "operator": {
            "order": 2,
            "coefficients": [{"order": 2, "modes": [[0, 1.0, 0.0]]}]
        },
        "nonlinearity": {"kind": "power", "p": 2.0, "c_n": 1.0},
        "grids": {"periods": 4, "points_per_period": 32, "truncation": 4},
        "initial_perturbation": {"recipe": "random_band", "kappa_max": 2.0, "seed": 7},
        "seed": 7
    })");
}

}  // namespace

TEST_CASE("a minimal scenario parses and resolves defaults") {
    const auto cfg = parse_scenario(minimal_doc());
    CHECK(cfg.grid.periods == 4);
    CHECK(cfg.xi_count == 4);
    CHECK(cfg.tau_act_rel == 1e-8);
    CHECK(cfg.p() == 2.0);
    CHECK(cfg.resolved.contains("experiment"));
}

TEST_CASE("unknown keys are rejected with their path") {
    auto doc = minimal_doc();
    doc["grids"]["xyz"] = 1;
    try {
        parse_scenario(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("grids.xyz") != std::string::npos);
    }
}

TEST_CASE("mode-specific blocks are mutually exclusive") {
    auto doc = minimal_doc();
    doc["kdvks"] = {{"beta", 0.1}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);

    json kdoc = json::parse(R"({
        "name": "k", "mode": "kdvks",
        "kdvks": {"beta": 0.1},
        "grids": {"periods": 4, "points_per_period": 32, "truncation": 4}
    })");
    const auto cfg = parse_scenario(kdoc);
    CHECK(cfg.op.order() == 4);
    CHECK(cfg.nonlinearity.kind == Nonlinearity::Kind::advective);
    CHECK(cfg.theta == doctest::Approx(0.1));

    kdoc["operator"] = minimal_doc()["operator"];
    CHECK_THROWS_AS(parse_scenario(kdoc), ConfigError);

    kdoc.erase("operator");
    kdoc["experiment"] = {{"theta", 0.2}};
    CHECK_THROWS_AS(parse_scenario(kdoc), ConfigError);  // theta above beta
}

TEST_CASE("kdvks operator carries the profile advection terms") {
    json kdoc = json::parse(R"({
        "name": "k", "mode": "kdvks",
        "kdvks": {"beta": 0.1, "phi_modes": [[1, 0.1, 0.0], [-1, 0.1, 0.0]]},
        "grids": {"periods": 4, "points_per_period": 32, "truncation": 4}
    })");
    const auto cfg = parse_scenario(kdoc);
    // L = -d3 - beta(d2 + d4) - phi d - phi'
    bool saw_phi = false, saw_dphi = false;
    for (const auto& term : cfg.op.terms()) {
        if (term.order == 1) {
            CHECK(term.entries[0].mode(1) == cplx(-0.1, 0.0));
            saw_phi = true;
        }
        if (term.order == 0) {
            // phi = 0.2 cos x: mode(1) of phi' is 0.1i, negation gives -0.1i
            CHECK(term.entries[0].mode(1) == cplx(0.0, -0.1));
            saw_dphi = true;
        }
    }
    CHECK(saw_phi);
    CHECK(saw_dphi);
}

TEST_CASE("validation failures name the offending rule") {
    auto doc = minimal_doc();
    doc["grids"]["truncation"] = 0;
    doc["operator"]["coefficients"].push_back(
        {{"order", 0}, {"modes", {{1, 1.0, 0.0}, {-1, 1.0, 0.0}}}});
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);

    auto bad = minimal_doc();
    bad["grids"]["periods"] = 3;
    CHECK_THROWS_AS(parse_scenario(bad), ConfigError);

    auto badnl = minimal_doc();
    badnl["nonlinearity"] = {{"kind", "banana"}};
    CHECK_THROWS_AS(parse_scenario(badnl), ConfigError);
}

TEST_CASE("overrides rewrite nested keys") {
    auto doc = minimal_doc();
    apply_override(doc, "grids.periods=8");
    apply_override(doc, "nonlinearity.kind=advective");
    CHECK(doc["grids"]["periods"] == 8);
    CHECK(doc["nonlinearity"]["kind"] == "advective");
    CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST_CASE("seeded recipes are bit identical across runs") {
    const auto cfg = parse_scenario(minimal_doc());
    const SampledFunction a = build_initial_perturbation(cfg, nullptr, nullptr);
    const SampledFunction b = build_initial_perturbation(cfg, nullptr, nullptr);
    for (int n = 0; n < cfg.grid.total_points(); ++n)
        CHECK(a.comp(0)[n] == b.comp(0)[n]);
}

TEST_CASE("mode recipe builds the requested big-box mode") {
    auto doc = minimal_doc();
    doc["initial_perturbation"] = {{"recipe", "modes"},
                                   {"modes", {{1, 2, 0.5, 0.0}}}};
    const auto cfg = parse_scenario(doc);
    const SampledFunction f = build_initial_perturbation(cfg, nullptr, nullptr);
    const SampledFunction expect =
        SampledFunction::mode(cfg.grid, 1, 0, 1, 2, 0.5);
    CHECK(f.distance(expect) < 1e-14);
}

TEST_CASE("raw sample files round trip") {
    const auto cfg = parse_scenario(minimal_doc());
    const SampledFunction f = build_initial_perturbation(cfg, nullptr, nullptr);

    const std::string path = "/tmp/blochtk_test_u0.csv";
    {
        std::ofstream out(path);
        for (int n = 0; n < cfg.grid.total_points(); ++n)
            out << format_double(f.comp(0)[n].real()) << ','
                << format_double(f.comp(0)[n].imag()) << '\n';
    }
    auto doc = minimal_doc();
    doc["initial_perturbation"] = {{"recipe", "file"}, {"path", path}};
    const auto cfg2 = parse_scenario(doc);
    const SampledFunction g = build_initial_perturbation(cfg2, nullptr, nullptr);
    CHECK(f.distance(g) < 1e-15);
    std::remove(path.c_str());

    // wrong shape
    {
        std::ofstream out(path);
        out << "1.0,0.0\n";
    }
    CHECK_THROWS_AS(build_initial_perturbation(cfg2, nullptr, nullptr), ShapeError);
    std::remove(path.c_str());
}

TEST_CASE("prepared recipe delegates to the wave packet construction") {
    json doc = json::parse(R"({
        "name": "k", "mode": "kdvks",
        "kdvks": {"beta": 1.0},
        "grids": {"periods": 32, "points_per_period": 32, "truncation": 6},
        "initial_perturbation": {"recipe": "prepared", "re_drop": 0.02}
    })");
    const auto cfg = parse_scenario(doc);
    const auto s = bloch_spectrum(cfg.op, XiGrid::of_box(cfg.grid), cfg.truncation);
    const auto branches = track_branches(s);
    PreparedSelection sel;
    const SampledFunction f = build_initial_perturbation(cfg, &s, &branches, &sel);
    CHECK(f.norm() > 0.0);
    CHECK(sel.branch_id >= 0);
    CHECK(sel.last_xi >= sel.first_xi);
    CHECK_THROWS_AS(build_initial_perturbation(cfg, nullptr, nullptr), DomainError);
}

TEST_CASE("multi-component operators parse from block lists") {
    json doc = json::parse(R"({
        "name": "sys", "mode": "reaction_diffusion",
        "operator": {
            "order": 2, "components": 2,
            "coefficients": [
                {"order": 2, "blocks": [[[0, 1.0, 0.0]], [], [], [[0, 1.0, 0.0]]]},
                {"order": 0, "blocks": [[[0, 0.5, 0.0]], [[0, 0.3, 0.0]],
                                         [[0, 0.3, 0.0]], []]}
            ]
        },
        "nonlinearity": {"kind": "power", "p": 2.0, "c_n": 1.0},
        "grids": {"periods": 4, "points_per_period": 32, "truncation": 4}
    })");
    const auto cfg = parse_scenario(doc);
    CHECK(cfg.op.components() == 2);
    const auto s = bloch_spectrum(cfg.op, XiGrid(16), 4);
    CHECK(s.eigen_count() == 18);
    // top eigenvalue at xi = 0 is (a + sqrt(a^2 + 4 b^2))/2 at kappa = 0
    const double expect = 0.5 * (0.5 + std::sqrt(0.25 + 0.36));
    CHECK(spectral_abscissa(s).value == doctest::Approx(expect).epsilon(1e-12));

    doc["operator"]["coefficients"][0]["blocks"] = {{{0, 1.0, 0.0}}};
    CHECK_THROWS_AS(parse_scenario(doc), ConfigError);
}

TEST_CASE("abscissa is converged in the truncation for every bundled scenario") {
    for (const char* name :
         {"heat.json", "heat_shift.json", "mathieu.json", "kdvks_zero.json",
          "kdvks_unstable.json", "kdvks_damping.json", "double_hump.json"}) {
        const auto cfg = load_scenario(std::string(SCENARIO_DIR) + "/" + name);
        // spectrum resolution capped for the refinement sweep
        const XiGrid grid(std::min(cfg.xi_count, 128));
        const double coarse =
            spectral_abscissa(bloch_spectrum(cfg.op, grid, cfg.truncation)).value;
        const double fine =
            spectral_abscissa(bloch_spectrum(cfg.op, grid, 2 * cfg.truncation)).value;
        INFO(name);
        CHECK(std::abs(fine - coarse) < 1e-8);
    }
}

TEST_CASE("csv writers are deterministic") {
    const auto op = oracles::mathieu_op(0.5);
    const auto s = bloch_spectrum(op, XiGrid(16), 6);
    const auto branches = track_branches(s);
    const std::string p1 = "/tmp/blochtk_spec_a.csv", p2 = "/tmp/blochtk_spec_b.csv";
    write_spectrum_csv(p1, s, branches);
    write_spectrum_csv(p2, s, branches);
    std::ifstream f1(p1), f2(p2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().rfind("xi,branch_id,re_lambda,im_lambda,crossing_flag\n", 0) == 0);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
