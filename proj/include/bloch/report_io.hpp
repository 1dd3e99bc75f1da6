#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bloch/evolution.hpp"
#include "bloch/projections.hpp"
#include "bloch/spectra.hpp"

namespace bloch {

// Deterministic CSV/JSON/SVG writers behind the CLI. All floating-point
// fields print with %.17g so identical runs produce byte-identical files.

std::string format_double(double v);

void write_spectrum_csv(const std::string& path, const SpectrumSampling& s,
                        const std::vector<Branch>& branches);

void write_masses_csv(const std::string& path, const SpectrumSampling& s,
                      const std::vector<Branch>& branches,
                      const Eigen::MatrixXd& masses);

void write_partition_csv(const std::string& path, const SpectrumSampling& s,
                         const EigencountPartition& part);

void write_bloch_norms_csv(const std::string& path, const BlochField& field);

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::vector<double>& rho);

void write_growth_csv(const std::string& path, const Trajectory& full,
                      const Trajectory& projected);

nlohmann::json to_json(const ProjectionReport& rep);
nlohmann::json to_json(const EigencountPartition& part);
nlohmann::json to_json(const GrowthDiagnostics& diag);
nlohmann::json to_json(const InstabilityVerdict& verdict);
nlohmann::json to_json(const PolynomialBound& bound);
nlohmann::json to_json(const DissipativeBound& bound);
nlohmann::json to_json(const DampingFit& fit);

void write_summary(const std::string& path, const nlohmann::json& config,
                   const nlohmann::json& results);

// Minimal line plot: one polyline per series over shared x values, plus an
// optional reference line drawn as y = intercept + slope * x.
struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool with_reference = false,
                    double ref_slope = 0.0, double ref_intercept = 0.0);

}  // namespace bloch
