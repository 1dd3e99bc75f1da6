#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bloch/types.hpp"

namespace bloch {

// Big periodic box [0, 2*pi*periods) sampled uniformly. The box realizes
// exactly `periods` Floquet exponents xi_r = (r - periods/2)/periods, a
// half-open uniform grid on [-1/2, 1/2) including the left endpoint.
struct SpatialGrid {
    int periods = 0;            // number of 2*pi periods in the box
    int points_per_period = 0;  // per-period resolution, power of two >= 32

    SpatialGrid() = default;
    SpatialGrid(int n_per, int n_x);

    int total_points() const { return periods * points_per_period; }
    double length() const { return 2.0 * pi * periods; }
    double dx() const { return 2.0 * pi / points_per_period; }
    double x(int n) const { return n * dx(); }

    // Frequency of big-box DFT bin m: kappa = (signed harmonic)/periods.
    double kappa(int m) const;

    // Floquet exponent of class r (r = 0..periods-1).
    double xi(int r) const { return (r - periods / 2) / double(periods); }

    // class/harmonic decomposition of a signed big-box harmonic:
    // s = j*periods + rho with rho in [-periods/2, periods/2).
    int class_of(int s) const;
    int harmonic_of(int s) const;

    bool operator==(const SpatialGrid&) const = default;
};

// Which Sobolev norm a diagnostic uses.
enum class Norm { l2, h1, h2 };

// Complex-valued function sampled on a SpatialGrid, one row per component.
// Norms use the quadrature ||f||^2 = dx * sum |f|^2; Sobolev norms are the
// derivative sums computed spectrally.
class SampledFunction {
public:
    SampledFunction() = default;
    SampledFunction(SpatialGrid grid, int components);

    const SpatialGrid& grid() const { return grid_; }
    int components() const { return static_cast<int>(comps_.size()); }

    Eigen::VectorXcd& comp(int c) { return comps_[c]; }
    const Eigen::VectorXcd& comp(int c) const { return comps_[c]; }

    // Normalized DFT per component: coef[m] = (1/N) sum_n f_n e^{-i kappa_m x_n}.
    std::vector<Eigen::VectorXcd> spectrum() const;
    static SampledFunction from_spectrum(const SpatialGrid& grid,
                                         const std::vector<Eigen::VectorXcd>& coef);

    double norm(Norm which = Norm::l2) const;
    double max_abs() const;

    // Relative spectral mass carried by the top `margin_bins` harmonics
    // (both ends); the aliasing detector of operator application.
    double top_band_mass(int margin_bins) const;

    SampledFunction& operator+=(const SampledFunction& other);
    SampledFunction& operator*=(cplx scale);
    friend SampledFunction operator+(SampledFunction a, const SampledFunction& b) {
        a += b;
        return a;
    }
    friend SampledFunction operator*(cplx s, SampledFunction f) {
        f *= s;
        return f;
    }

    double distance(const SampledFunction& other, Norm which = Norm::l2) const;

    // Single big-box mode e^{i(k + xi_r)x} on component c.
    static SampledFunction mode(const SpatialGrid& grid, int components, int c,
                                int harmonic, int xi_class, cplx amplitude = 1.0);

private:
    SpatialGrid grid_;
    std::vector<Eigen::VectorXcd> comps_;
};

}  // namespace bloch
