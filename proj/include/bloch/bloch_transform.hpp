#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bloch/spatial_grid.hpp"
#include "bloch/types.hpp"

namespace bloch {

// Bloch decomposition of a big-box function: one 2*pi-periodic slice per
// Floquet exponent xi_r realized by the box. Slices are stored as Fourier
// coefficients over integer harmonics j in [-N_x/2, N_x/2); the transform is
// an exact re-indexing of the big-box DFT, so the pair
// (bloch_transform, inverse_bloch) is a bijection up to roundoff.
//
// Normalization: with hat(f)(kappa_m) = alpha * DFT_m, alpha = periods/sqrt(2*pi),
// the slice is check(f)(xi, x) = sum_j hat(f)(xi + j) e^{ijx} and the discrete
// Parseval identity ||f||^2 = 2*pi * sum_r (1/periods) ||check(f)(xi_r,.)||^2
// holds exactly for band-limited data.
class BlochField {
public:
    BlochField() = default;
    BlochField(SpatialGrid grid, int components);

    const SpatialGrid& grid() const { return grid_; }
    int components() const { return static_cast<int>(coef_.size()); }
    int xi_count() const { return grid_.periods; }
    double xi(int r) const { return grid_.xi(r); }

    // Valid integer harmonics of class r run over [harmonic_lo(r),
    // harmonic_lo(r) + points_per_period - 1]; classes with negative Floquet
    // residue carry +N_x/2 instead of -N_x/2.
    int harmonic_lo(int r) const {
        return -grid_.points_per_period / 2 + (r < grid_.periods / 2 ? 1 : 0);
    }
    bool has_harmonic(int r, int j) const {
        return j >= harmonic_lo(r) && j < harmonic_lo(r) + grid_.points_per_period;
    }

    // coefficient of harmonic j in slice r, component c
    cplx& coef(int c, int r, int j) { return coef_[c](r, column(j)); }
    cplx coef(int c, int r, int j) const { return coef_[c](r, column(j)); }

    Eigen::MatrixXcd& comp(int c) { return coef_[c]; }
    const Eigen::MatrixXcd& comp(int c) const { return coef_[c]; }

    // L^2 norm of slice r over one period (all components).
    double slice_norm(int r) const;

    // Slice values on the one-period grid, component c.
    Eigen::VectorXcd slice_values(int c, int r) const;

    // Stacked (mode-major, component-minor) slice coefficients for harmonics
    // |j| <= m, zero-filled where the slice has no such harmonic; the layout
    // matches BlochMatrix indexing.
    Eigen::VectorXcd slice_galerkin(int r, int m) const;
    void set_slice_galerkin(int r, int m, const Eigen::VectorXcd& v);
    // accumulate scale*v over the Galerkin window, other harmonics untouched
    void add_slice_galerkin(int r, int m, const Eigen::VectorXcd& v, cplx scale = 1.0);

    double max_harmonic_dropped(int m) const;

private:
    // harmonics are stored modulo N_x; per class the map j -> column is 1:1
    int column(int j) const {
        const int nx = grid_.points_per_period;
        return ((j + nx / 2) % nx + nx) % nx;
    }

    SpatialGrid grid_;
    std::vector<Eigen::MatrixXcd> coef_;  // per comp: periods x points_per_period
};

BlochField bloch_transform(const SampledFunction& f);
SampledFunction inverse_bloch(const BlochField& field);

// Relative Parseval defect |  ||f||^2 - 2*pi*sum_r w_r ||slice_r||^2  | / max(||f||^2, floor).
double isometry_defect(const SampledFunction& f);

}  // namespace bloch
