#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bloch/operator_model.hpp"
#include "bloch/types.hpp"

namespace bloch {

// Uniform Floquet grid on [-1/2, 1/2): xi_m = -1/2 + m/count. With count equal
// to a box's period count the values coincide with the box's own exponents.
struct XiGrid {
    XiGrid() : count_(1) {}
    explicit XiGrid(int count);
    static XiGrid of_box(const SpatialGrid& grid) { return XiGrid(grid.periods); }

    int count() const { return count_; }
    double value(int m) const { return -0.5 + m / double(count_); }

private:
    int count_;
};

// Full eigendecomposition of one Bloch matrix. Eigenvalues are sorted by
// descending real part (imaginary part ascending as tie-break); the columns of
// `right` follow that order and carry unit discrete L^2 norm; `dual` holds the
// inverse of `right`, so right * diag(sel) * dual is a spectral projector.
struct XiEigenSystem {
    double xi = 0.0;
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd dual;
};

struct SpectrumSampling {
    XiGrid grid;
    int truncation = 0;
    int components = 1;
    std::vector<XiEigenSystem> points;

    int eigen_count() const { return components * (2 * truncation + 1); }
};

// Continuation of one eigenvalue across the xi grid: per grid point the
// eigenvalue, its index into the sorted spectrum, and a flag marking steps
// whose jump exceeded the continuity threshold.
struct Branch {
    int id = 0;
    std::vector<int> eigen_index;
    std::vector<cplx> lambda;
    std::vector<bool> crossing_suspect;

    double max_re() const;
};

struct SpectralAbscissa {
    double value = 0.0;
    int xi_index = 0;
    int eigen_index = 0;
};

// Branch segments whose real part exceeds lambda0/p.
struct UnstableSet {
    double lambda0 = 0.0;
    double threshold = 0.0;  // lambda0 / p
    struct Segment {
        int branch_id;
        int first_xi, last_xi;  // inclusive grid-index range
    };
    std::vector<Segment> members;

    bool empty() const { return members.empty(); }
};

// Partition of the xi grid into maximal intervals on which the number of
// eigenvalues (with multiplicity) above a real-part threshold is constant,
// plus a rectangle contour enclosing that super-threshold spectrum.
struct EigencountPartition {
    double threshold = 0.0;  // the lambda_M slice level
    struct Interval {
        int first_xi, last_xi;  // inclusive
        double xi_lo, xi_hi;    // [xi_lo, xi_hi)
        int count;
        bool marginal;  // an eigenvalue sits within eps_gap of the threshold
    };
    std::vector<Interval> intervals;
    std::vector<std::string> warnings;
    // rectangle contour around the enclosed spectrum; meaningful when total > 0
    double rect_re_lo = 0.0, rect_re_hi = 0.0, rect_im_lo = 0.0, rect_im_hi = 0.0;
    bool enclosed_any = false;
};

SpectrumSampling bloch_spectrum(const PeriodicOperator& op, const XiGrid& grid,
                                int truncation);

std::vector<Branch> track_branches(const SpectrumSampling& s,
                                   double continuity_multiplier = 10.0);

// sup Re over all sampled eigenvalues and where it is attained.
SpectralAbscissa spectral_abscissa(const SpectrumSampling& s);

UnstableSet unstable_set(const SpectrumSampling& s, double p,
                         const std::vector<Branch>& branches);

EigencountPartition eigencount_partition(const SpectrumSampling& s, double threshold,
                                         double eps_gap = 1e-6);

}  // namespace bloch
