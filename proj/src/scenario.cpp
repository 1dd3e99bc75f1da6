#include "bloch/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "bloch/fft.hpp"

namespace bloch {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + path + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ConfigError("config: unknown key '" + path + "." + key + "'");
    }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing key '" + path + "." + key + "'");
    }
    if (!obj[key].is_number())
        throw ConfigError("config: '" + path + "." + key + "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            std::optional<int> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing key '" + path + "." + key + "'");
    }
    if (!obj[key].is_number_integer())
        throw ConfigError("config: '" + path + "." + key + "' must be an integer");
    return obj[key].get<int>();
}

PeriodicCoefficient coefficient_from_modes(const json& modes, const std::string& path) {
    if (!modes.is_array()) throw ConfigError("config: " + path + " must be an array");
    std::map<int, cplx> out;
    for (const auto& m : modes) {
        if (!m.is_array() || m.size() != 3)
            throw ConfigError("config: " + path + " entries must be [k, re, im]");
        out[m[0].get<int>()] += cplx(m[1].get<double>(), m[2].get<double>());
    }
    try {
        return PeriodicCoefficient(std::move(out));
    } catch (const DomainError& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
}

PeriodicOperator parse_operator(const json& spec, const std::string& path) {
    check_keys(spec, path, {"order", "components", "coefficients"});
    const int order = get_int(spec, path, "order");
    const int d = get_int(spec, path, "components", 1);
    if (!spec.contains("coefficients") || !spec["coefficients"].is_array())
        throw ConfigError("config: " + path + ".coefficients must be an array");

    std::vector<OperatorTerm> terms;
    for (const auto& t : spec["coefficients"]) {
        const std::string tpath = path + ".coefficients[]";
        OperatorTerm term;
        term.order = get_int(t, tpath, "order");
        if (d == 1) {
            check_keys(t, tpath, {"order", "modes"});
            if (!t.contains("modes"))
                throw ConfigError("config: missing key '" + tpath + ".modes'");
            term.entries.push_back(coefficient_from_modes(t["modes"], tpath + ".modes"));
        } else {
            check_keys(t, tpath, {"order", "blocks"});
            if (!t.contains("blocks") || !t["blocks"].is_array() ||
                t["blocks"].size() != size_t(d) * d)
                throw ConfigError("config: '" + tpath + ".blocks' must list d*d mode arrays");
            for (const auto& b : t["blocks"])
                term.entries.push_back(coefficient_from_modes(b, tpath + ".blocks[]"));
        }
        terms.push_back(std::move(term));
    }
    try {
        return PeriodicOperator(order, d, std::move(terms));
    } catch (const Error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
}

// The dissipative perturbation operator about a periodic profile phi:
// L = -d^3 - beta (d^2 + d^4) - phi d - phi'.
PeriodicOperator kdvks_operator(double beta, const PeriodicCoefficient& phi) {
    auto negated = [](const PeriodicCoefficient& c) {
        std::map<int, cplx> m = c.modes();
        for (auto& [k, v] : m) v = -v;
        return PeriodicCoefficient(std::move(m));
    };
    std::vector<OperatorTerm> terms;
    terms.push_back({4, {PeriodicCoefficient::constant(-beta)}});
    terms.push_back({3, {PeriodicCoefficient::constant(-1.0)}});
    terms.push_back({2, {PeriodicCoefficient::constant(-beta)}});
    if (!phi.modes().empty()) {
        terms.push_back({1, {negated(phi)}});
        terms.push_back({0, {negated(phi.derivative())}});
    }
    return PeriodicOperator(4, 1, std::move(terms));
}

Nonlinearity parse_nonlinearity(const json& spec, const std::string& path) {
    check_keys(spec, path, {"kind", "p", "c_n"});
    const std::string kind = spec.value("kind", "");
    if (kind == "none") return Nonlinearity::none();
    if (kind == "advective") return Nonlinearity::advective();
    if (kind == "power")
        return Nonlinearity::power(get_number(spec, path, "p"),
                                   get_number(spec, path, "c_n", 1.0));
    throw ConfigError("config: " + path + ".kind must be none, power or advective");
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc) {
    check_keys(doc, "$",
               {"name", "mode", "kdvks", "operator", "nonlinearity", "grids",
                "projection", "experiment", "initial_perturbation", "seed",
                "output_dir"});

    ScenarioConfig cfg;
    cfg.name = doc.value("name", "scenario");
    cfg.mode = doc.value("mode", "reaction_diffusion");
    if (cfg.mode != "reaction_diffusion" && cfg.mode != "kdvks")
        throw ConfigError("config: mode must be reaction_diffusion or kdvks");

    if (cfg.mode == "kdvks") {
        if (doc.contains("operator"))
            throw ConfigError("config: kdvks mode builds its own operator; "
                              "remove the operator block");
        if (!doc.contains("kdvks"))
            throw ConfigError("config: missing key '$.kdvks'");
        const json& k = doc["kdvks"];
        check_keys(k, "kdvks", {"beta", "phi_modes"});
        cfg.beta = get_number(k, "kdvks", "beta");
        if (cfg.beta <= 0.0) throw ConfigError("config: kdvks.beta must be positive");
        PeriodicCoefficient phi = k.contains("phi_modes")
                                      ? coefficient_from_modes(k["phi_modes"],
                                                               "kdvks.phi_modes")
                                      : PeriodicCoefficient();
        cfg.op = kdvks_operator(cfg.beta, phi);
        cfg.nonlinearity = doc.contains("nonlinearity")
                               ? parse_nonlinearity(doc["nonlinearity"], "nonlinearity")
                               : Nonlinearity::advective();
    } else {
        if (doc.contains("kdvks"))
            throw ConfigError("config: kdvks block requires mode = kdvks");
        if (!doc.contains("operator"))
            throw ConfigError("config: missing key '$.operator'");
        cfg.op = parse_operator(doc["operator"], "operator");
        if (!doc.contains("nonlinearity"))
            throw ConfigError("config: missing key '$.nonlinearity'");
        cfg.nonlinearity = parse_nonlinearity(doc["nonlinearity"], "nonlinearity");
    }

    if (!doc.contains("grids")) throw ConfigError("config: missing key '$.grids'");
    const json& g = doc["grids"];
    check_keys(g, "grids",
               {"periods", "points_per_period", "truncation", "evolve_truncation",
                "xi_count"});
    try {
        cfg.grid = SpatialGrid(get_int(g, "grids", "periods"),
                               get_int(g, "grids", "points_per_period"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: grids: ") + e.what());
    }
    cfg.truncation = get_int(g, "grids", "truncation");
    if (cfg.truncation < cfg.op.coefficient_bandwidth())
        throw ConfigError("config: grids.truncation is below the coefficient bandwidth");
    cfg.evolve_truncation = get_int(g, "grids", "evolve_truncation", 0);
    cfg.xi_count = get_int(g, "grids", "xi_count", cfg.grid.periods);
    if (cfg.xi_count < 1) throw ConfigError("config: grids.xi_count must be positive");

    const json proj = doc.value("projection", json::object());
    check_keys(proj, "projection", {"tau_act_rel", "eps_gap", "contour_nodes"});
    cfg.tau_act_rel = get_number(proj, "projection", "tau_act_rel", 1e-8);
    cfg.eps_gap = get_number(proj, "projection", "eps_gap", 1e-6);
    cfg.contour_nodes = get_int(proj, "projection", "contour_nodes", 128);
    if (cfg.tau_act_rel <= 0.0 || cfg.eps_gap <= 0.0)
        throw ConfigError("config: projection thresholds must be positive");
    if (cfg.contour_nodes < 64)
        throw ConfigError("config: projection.contour_nodes must be at least 64");

    const json exp = doc.value("experiment", json::object());
    check_keys(exp, "experiment",
               {"eta", "deltas", "omega_offset", "horizon", "dt", "state_stride",
                "theta", "re_drop"});
    cfg.eta = get_number(exp, "experiment", "eta", 0.0);
    if (exp.contains("deltas")) {
        for (const auto& d : exp["deltas"]) cfg.deltas.push_back(d.get<double>());
        for (double d : cfg.deltas)
            if (d <= 0.0) throw ConfigError("config: experiment.deltas must be positive");
    }
    cfg.omega_offset = get_number(exp, "experiment", "omega_offset", 0.05);
    cfg.horizon = get_number(exp, "experiment", "horizon", 0.0);
    cfg.dt = get_number(exp, "experiment", "dt", 0.0);
    cfg.state_stride = get_int(exp, "experiment", "state_stride", 0);
    cfg.theta = get_number(exp, "experiment", "theta",
                           cfg.mode == "kdvks" ? cfg.beta : 0.0);
    if (cfg.mode == "kdvks" && cfg.theta > cfg.beta + 1e-15)
        throw ConfigError("config: experiment.theta must not exceed kdvks.beta");
    cfg.re_drop = get_number(exp, "experiment", "re_drop", 0.02);

    cfg.u0_spec = doc.value("initial_perturbation", json::object());
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    cfg.output_dir = doc.value("output_dir", "");

    cfg.resolved = doc;
    cfg.resolved["name"] = cfg.name;
    cfg.resolved["mode"] = cfg.mode;
    cfg.resolved["grids"] = {{"periods", cfg.grid.periods},
                             {"points_per_period", cfg.grid.points_per_period},
                             {"truncation", cfg.truncation},
                             {"evolve_truncation", cfg.evolve_truncation},
                             {"xi_count", cfg.xi_count}};
    cfg.resolved["projection"] = {{"tau_act_rel", cfg.tau_act_rel},
                                  {"eps_gap", cfg.eps_gap},
                                  {"contour_nodes", cfg.contour_nodes}};
    cfg.resolved["experiment"] = {
        {"eta", cfg.eta},         {"deltas", cfg.deltas},
        {"omega_offset", cfg.omega_offset}, {"horizon", cfg.horizon},
        {"dt", cfg.dt},           {"state_stride", cfg.state_stride},
        {"theta", cfg.theta},     {"re_drop", cfg.re_drop}};
    cfg.resolved["seed"] = cfg.seed;
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: parse failure in '" + path + "': " + e.what());
    }
    return parse_scenario(doc);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like dotted.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &doc;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override has an empty path segment");
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::exception&) {
                parsed = value;  // bare strings allowed
            }
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

SampledFunction build_initial_perturbation(const ScenarioConfig& cfg,
                                           const SpectrumSampling* s,
                                           const std::vector<Branch>* branches,
                                           PreparedSelection* selection) {
    const json& spec = cfg.u0_spec;
    check_keys(spec, "initial_perturbation",
               {"recipe", "re_drop", "re_target", "modes", "kappa_max", "seed", "path",
                "amplitude"});
    const std::string recipe = spec.value("recipe", "prepared");
    const int d = cfg.op.components();

    if (recipe == "prepared") {
        if (s == nullptr || branches == nullptr)
            throw DomainError("prepared recipe needs the spectrum sampling");
        const double drop = spec.value("re_drop", cfg.re_drop);
        // most unstable branch by default; re_target selects the branch whose
        // peak growth rate is closest to the given value
        const Branch* top = nullptr;
        if (spec.contains("re_target")) {
            const double target = spec["re_target"].get<double>();
            for (const auto& b : *branches)
                if (top == nullptr ||
                    std::abs(b.max_re() - target) < std::abs(top->max_re() - target))
                    top = &b;
        } else {
            for (const auto& b : *branches)
                if (top == nullptr || b.max_re() > top->max_re()) top = &b;
        }
        int attain = 0;
        for (size_t m = 1; m < top->lambda.size(); ++m)
            if (top->lambda[m].real() > top->lambda[attain].real())
                attain = static_cast<int>(m);
        const double floor_re = top->lambda[attain].real() - drop;
        int first = attain, last = attain;
        while (first > 0 && top->lambda[first - 1].real() >= floor_re) --first;
        while (last + 1 < int(top->lambda.size()) &&
               top->lambda[last + 1].real() >= floor_re)
            ++last;
        if (selection != nullptr) *selection = {top->id, first, last};
        return branch_wave_packet(cfg.grid, *s, *top, first, last).f0;
    }

    if (recipe == "modes") {
        if (!spec.contains("modes") || !spec["modes"].is_array())
            throw ConfigError("config: initial_perturbation.modes must be an array");
        SampledFunction f(cfg.grid, d);
        for (const auto& m : spec["modes"]) {
            if (!m.is_array() || m.size() != 4)
                throw ConfigError(
                    "config: mode entries must be [harmonic, xi_class, re, im]");
            f += SampledFunction::mode(cfg.grid, d, 0, m[0].get<int>(), m[1].get<int>(),
                                       cplx(m[2].get<double>(), m[3].get<double>()));
        }
        return f;
    }

    if (recipe == "random_band") {
        const double kappa_max = spec.value("kappa_max", 2.0);
        const std::uint64_t seed = spec.value("seed", cfg.seed);
        const double amplitude = spec.value("amplitude", 1.0);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int n = cfg.grid.total_points();
        std::vector<Eigen::VectorXcd> coef(d, Eigen::VectorXcd::Zero(n));
        for (int c = 0; c < d; ++c) {
            for (int m = 0; m < n; ++m) {
                const int sidx = fft::signed_index(m, n);
                if (sidx < 0) continue;  // fill by conjugate symmetry below
                if (std::abs(cfg.grid.kappa(m)) > kappa_max) continue;
                const cplx z(gauss(rng), sidx == 0 ? 0.0 : gauss(rng));
                coef[c][m] = z;
                if (sidx > 0 && sidx < n / 2)
                    coef[c][fft::bin_of(-sidx, n)] = std::conj(z);
            }
            // real-valued sample: scale to the requested amplitude
        }
        SampledFunction f = SampledFunction::from_spectrum(cfg.grid, coef);
        const double norm = f.norm();
        if (norm > 0.0) f *= amplitude / norm;
        return f;
    }

    if (recipe == "file") {
        if (!spec.contains("path"))
            throw ConfigError("config: initial_perturbation.path is required");
        std::ifstream in(spec["path"].get<std::string>());
        if (!in)
            throw ConfigError("config: cannot open raw samples file '" +
                              spec["path"].get<std::string>() + "'");
        SampledFunction f(cfg.grid, d);
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (row >= cfg.grid.total_points())
                throw ShapeError("raw samples file has more rows than grid points");
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream fields(line);
            for (int c = 0; c < d; ++c) {
                double re, im;
                if (!(fields >> re >> im))
                    throw ShapeError("raw samples file needs 2*components columns");
                f.comp(c)[row] = cplx(re, im);
            }
            ++row;
        }
        if (row != cfg.grid.total_points())
            throw ShapeError("raw samples file has fewer rows than grid points");
        return f;
    }

    throw ConfigError("config: unknown initial_perturbation.recipe '" + recipe + "'");
}

}  // namespace bloch
