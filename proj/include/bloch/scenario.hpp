#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bloch/evolution.hpp"
#include "bloch/operator_model.hpp"
#include "bloch/projections.hpp"

namespace bloch {

// Parsed and validated scenario file. Unknown keys anywhere in the document
// are rejected; every resolved value is kept for provenance in `resolved`.
struct ScenarioConfig {
    std::string name;
    std::string mode;  // "reaction_diffusion" or "kdvks"
    double beta = 0.0;  // kdvks dissipation strength

    PeriodicOperator op;
    Nonlinearity nonlinearity;

    SpatialGrid grid;
    int truncation = 0;         // Galerkin window for spectra and projections
    int evolve_truncation = 0;  // window for time stepping; 0 = N_x/2
    int xi_count = 0;           // spectrum sweep resolution

    double tau_act_rel = 1e-8;
    double eps_gap = 1e-6;
    int contour_nodes = 128;

    double eta = 0.0;
    std::vector<double> deltas;
    double omega_offset = 0.05;
    double horizon = 0.0;
    double dt = 0.0;
    int state_stride = 0;
    double theta = 0.0;
    double re_drop = 0.02;  // prepared-recipe interval depth

    std::uint64_t seed = 0;
    std::string output_dir;

    nlohmann::json u0_spec;
    nlohmann::json resolved;

    double p() const { return nonlinearity.exponent; }
    EvolveOptions evolve_options() const {
        EvolveOptions o;
        o.truncation = evolve_truncation;
        o.state_stride = state_stride;
        return o;
    }
};

ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);

// Apply "dotted.path=value" to the raw document (CLI --override).
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct PreparedSelection {
    int branch_id = -1;
    int first_xi = 0, last_xi = 0;
};

// Construct the configured initial perturbation. The prepared recipe needs the
// spectrum sampling and its branches; other recipes ignore them.
SampledFunction build_initial_perturbation(const ScenarioConfig& cfg,
                                           const SpectrumSampling* s,
                                           const std::vector<Branch>* branches,
                                           PreparedSelection* selection = nullptr);

}  // namespace bloch
