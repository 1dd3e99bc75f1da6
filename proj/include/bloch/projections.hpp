#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bloch/bloch_transform.hpp"
#include "bloch/spectra.hpp"

namespace bloch {

// Closed integration contour in the spectral plane. Quadrature nodes/weights
// realize (1/(2*pi*i)) * closed integral: circles use the trapezoid rule
// (spectrally accurate), rectangles a per-edge midpoint rule.
struct Contour {
    enum class Shape { circle, rectangle };

    Shape shape = Shape::circle;
    cplx center = 0.0;
    double radius = 0.0;
    double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
    int nodes = 128;

    static Contour circle(cplx center, double radius, int nodes = 128);
    static Contour rectangle(double re_lo, double re_hi, double im_lo, double im_hi,
                             int nodes = 128);

    void quadrature(std::vector<cplx>& zeta, std::vector<cplx>& weight) const;
    double distance(cplx z) const;
    bool encloses(cplx z) const;
};

// Riesz projection of v onto the spectral subspace of the Bloch matrix
// enclosed by gamma, by resolvent quadrature (one dense solve per node).
// Throws ContourError when an eigenvalue sits within eps_gap of the contour.
Eigen::VectorXcd riesz_project(const PeriodicOperator& op, double xi, int truncation,
                               const Contour& gamma, const Eigen::VectorXcd& v,
                               double eps_gap = 1e-6);

// Eigenvalue clusters of one xi column (single-linkage at tolerance tol);
// cluster projectors stay well-defined near eigenvalue collisions.
std::vector<std::vector<int>> eigen_clusters(const XiEigenSystem& sys, double tol);

// Spectral projector onto the cluster containing eigen index i.
Eigen::MatrixXcd cluster_projector(const XiEigenSystem& sys, int eigen_index, double tol);

// Activation masses ||P_i u_slice||_{L^2(per)} for every (xi, eigenvalue)
// pair; rows follow the xi grid, columns the sorted eigenvalues.
Eigen::MatrixXd activation_masses(const BlochField& u0_field, const SpectrumSampling& s,
                                  double cluster_tol = 1e-6);

struct ProjectionReport {
    bool any_mass = false;    // some (xi, eigenvalue) pair exceeds tau_act
    bool activated = false;   // ... with Re lambda > lambda0/p
    double lambda_m = 0.0;    // max Re over pairs above tau_act
    double lambda0 = 0.0;
    double growth_floor = 0.0;  // lambda0 / p
    int xi_index = 0;
    int eigen_index = 0;
    int branch_id = 0;
    int interval_first = 0, interval_last = 0;  // inclusive xi-index range I
    std::vector<int> interval_eigen_index;      // branch eigen index per xi in I
    double interval_xi_lo = 0.0, interval_xi_hi = 0.0;
    Contour contour;
    double activation_mass_inf = 0.0;  // inf over I of the branch mass
    double tau_act = 0.0;
    double projector_norm_sup = 0.0;  // sup over I of ||P(xi)||_2, reported not assumed
    std::vector<std::string> warnings;
};

// Scan all (xi, eigenvalue) pairs of the sampling for activation by u0 and
// report the maximal activated growth rate with its branch, interval and
// contour. Branches must come from track_branches(s).
ProjectionReport activation_report(const SampledFunction& u0, const SpectrumSampling& s,
                                   const std::vector<Branch>& branches, double tau_act,
                                   double p, double eps_gap = 1e-6);

// Assembled projection onto the activated branch over the report interval:
// slice-wise cluster projector inside I, zero outside, pulled back to the box.
SampledFunction project_onto_activated(const SampledFunction& u0,
                                       const ProjectionReport& report,
                                       const SpectrumSampling& s,
                                       double eps_gap = 1e-6);

struct ComplementResult {
    SampledFunction field;
    std::vector<std::string> warnings;
};

// (I - P')u0 where P' removes, per xi, every eigenvalue with Re > threshold.
ComplementResult complement_projection(const SampledFunction& u0,
                                       const SpectrumSampling& s, double threshold,
                                       double eps_gap = 1e-6);

struct PreparedData {
    SampledFunction f0;
    std::vector<std::string> warnings;
};

// Wave packet built from one eigenvector branch over a xi-index interval:
// eigenvector slices with phases aligned by maximal overlap, zero outside,
// pulled back through the inverse Bloch transform.
PreparedData branch_wave_packet(const SpatialGrid& grid, const SpectrumSampling& s,
                                const Branch& branch, int first_xi, int last_xi);

}  // namespace bloch
