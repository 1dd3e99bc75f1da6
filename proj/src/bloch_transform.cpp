#include "bloch/bloch_transform.hpp"

#include <cmath>

#include "bloch/fft.hpp"

namespace bloch {

namespace {

double alpha_scale(const SpatialGrid& grid) { return grid.periods / std::sqrt(2.0 * pi); }

}  // namespace

BlochField::BlochField(SpatialGrid grid, int components) : grid_(grid) {
    coef_.assign(components,
                 Eigen::MatrixXcd::Zero(grid.periods, grid.points_per_period));
}

double BlochField::slice_norm(int r) const {
    double acc = 0.0;
    for (const auto& c : coef_) acc += c.row(r).squaredNorm();
    return std::sqrt(2.0 * pi * acc);
}

Eigen::VectorXcd BlochField::slice_values(int c, int r) const {
    const int nx = grid_.points_per_period;
    std::vector<cplx> coefs(nx), vals(nx);
    for (int j = harmonic_lo(r); j < harmonic_lo(r) + nx; ++j)
        coefs[((j % nx) + nx) % nx] = coef(c, r, j);
    fft::inverse(coefs, vals);
    return Eigen::Map<Eigen::VectorXcd>(vals.data(), nx);
}

Eigen::VectorXcd BlochField::slice_galerkin(int r, int m) const {
    const int d = components();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d * (2 * m + 1));
    for (int j = -m; j <= m; ++j) {
        if (!has_harmonic(r, j)) continue;
        for (int c = 0; c < d; ++c) v[(j + m) * d + c] = coef(c, r, j);
    }
    return v;
}

void BlochField::set_slice_galerkin(int r, int m, const Eigen::VectorXcd& v) {
    const int d = components();
    if (v.size() != d * (2 * m + 1))
        throw ShapeError("set_slice_galerkin: stacked vector has wrong length");
    for (int c = 0; c < d; ++c) coef_[c].row(r).setZero();
    for (int j = -m; j <= m; ++j) {
        if (!has_harmonic(r, j)) continue;
        for (int c = 0; c < d; ++c) coef(c, r, j) = v[(j + m) * d + c];
    }
}

void BlochField::add_slice_galerkin(int r, int m, const Eigen::VectorXcd& v, cplx scale) {
    const int d = components();
    if (v.size() != d * (2 * m + 1))
        throw ShapeError("add_slice_galerkin: stacked vector has wrong length");
    for (int j = -m; j <= m; ++j) {
        if (!has_harmonic(r, j)) continue;
        for (int c = 0; c < d; ++c) coef(c, r, j) += scale * v[(j + m) * d + c];
    }
}

double BlochField::max_harmonic_dropped(int m) const {
    const int nx = grid_.points_per_period;
    double acc = 0.0;
    for (int c = 0; c < components(); ++c)
        for (int r = 0; r < grid_.periods; ++r)
            for (int j = harmonic_lo(r); j < harmonic_lo(r) + nx; ++j)
                if (std::abs(j) > m) acc = std::max(acc, std::abs(coef(c, r, j)));
    return acc;
}

BlochField bloch_transform(const SampledFunction& f) {
    const SpatialGrid& grid = f.grid();
    const int n = grid.total_points();
    const double alpha = alpha_scale(grid);

    BlochField field(grid, f.components());
    const auto coef = f.spectrum();
    for (int c = 0; c < f.components(); ++c) {
        for (int m = 0; m < n; ++m) {
            const int s = fft::signed_index(m, n);
            field.coef(c, grid.class_of(s), grid.harmonic_of(s)) = alpha * coef[c][m];
        }
    }
    return field;
}

SampledFunction inverse_bloch(const BlochField& field) {
    const SpatialGrid& grid = field.grid();
    const int n = grid.total_points();
    const int nx = grid.points_per_period;
    const double alpha = alpha_scale(grid);

    std::vector<Eigen::VectorXcd> coef(field.components(), Eigen::VectorXcd::Zero(n));
    for (int c = 0; c < field.components(); ++c)
        for (int r = 0; r < grid.periods; ++r)
            for (int j = field.harmonic_lo(r); j < field.harmonic_lo(r) + nx; ++j) {
                const int s = j * grid.periods + (r - grid.periods / 2);
                coef[c][((s % n) + n) % n] = field.coef(c, r, j) / alpha;
            }
    return SampledFunction::from_spectrum(grid, coef);
}

double isometry_defect(const SampledFunction& f) {
    const BlochField field = bloch_transform(f);
    const double w = 1.0 / f.grid().periods;
    double sum = 0.0;
    for (int r = 0; r < field.xi_count(); ++r) {
        const double s = field.slice_norm(r);
        sum += w * s * s;
    }
    const double n2 = f.norm() * f.norm();
    const double floor = 1e-30;
    return std::abs(n2 - 2.0 * pi * sum) / std::max(n2, floor);
}

}  // namespace bloch
