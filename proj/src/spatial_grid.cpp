#include "bloch/spatial_grid.hpp"

#include <cmath>

#include "bloch/fft.hpp"

namespace bloch {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpatialGrid::SpatialGrid(int n_per, int n_x) : periods(n_per), points_per_period(n_x) {
    if (n_per < 2 || n_per % 2 != 0)
        throw DomainError("SpatialGrid: periods must be even and >= 2");
    if (n_x < 32 || !power_of_two(n_x))
        throw DomainError("SpatialGrid: points_per_period must be a power of two >= 32");
}

double SpatialGrid::kappa(int m) const {
    return fft::signed_index(m, total_points()) / double(periods);
}

int SpatialGrid::class_of(int s) const {
    const int half = periods / 2;
    int rho = (s + half) % periods;
    if (rho < 0) rho += periods;
    return rho;  // 0..periods-1, xi = (rho - half)/periods
}

int SpatialGrid::harmonic_of(int s) const {
    const int half = periods / 2;
    const int rho_signed = class_of(s) - half;
    return (s - rho_signed) / periods;
}

SampledFunction::SampledFunction(SpatialGrid grid, int components) : grid_(grid) {
    comps_.assign(components, Eigen::VectorXcd::Zero(grid.total_points()));
}

std::vector<Eigen::VectorXcd> SampledFunction::spectrum() const {
    const int n = grid_.total_points();
    std::vector<Eigen::VectorXcd> out;
    out.reserve(comps_.size());
    std::vector<cplx> in(n), coef(n);
    for (const auto& comp : comps_) {
        for (int i = 0; i < n; ++i) in[i] = comp[i];
        fft::forward(in, coef);
        Eigen::VectorXcd v(n);
        for (int i = 0; i < n; ++i) v[i] = coef[i] / double(n);
        out.push_back(std::move(v));
    }
    return out;
}

SampledFunction SampledFunction::from_spectrum(const SpatialGrid& grid,
                                               const std::vector<Eigen::VectorXcd>& coef) {
    const int n = grid.total_points();
    SampledFunction f(grid, static_cast<int>(coef.size()));
    std::vector<cplx> in(n), vals(n);
    for (size_t c = 0; c < coef.size(); ++c) {
        if (coef[c].size() != n) throw ShapeError("from_spectrum: coefficient length mismatch");
        for (int i = 0; i < n; ++i) in[i] = coef[c][i];
        fft::inverse(in, vals);
        for (int i = 0; i < n; ++i) f.comp(static_cast<int>(c))[i] = vals[i];
    }
    return f;
}

double SampledFunction::norm(Norm which) const {
    if (comps_.empty()) return 0.0;
    if (which == Norm::l2) {
        double acc = 0.0;
        for (const auto& comp : comps_) acc += comp.squaredNorm();
        return std::sqrt(grid_.dx() * acc);
    }
    // Sobolev norms: ||f||_{H^s}^2 = sum_{j<=s} ||d^j f||_{L^2}^2, spectrally.
    const int s = which == Norm::h1 ? 1 : 2;
    const auto coef = spectrum();
    const int n = grid_.total_points();
    double acc = 0.0;
    for (const auto& c : coef) {
        for (int m = 0; m < n; ++m) {
            const double k2 = grid_.kappa(m) * grid_.kappa(m);
            double w = 1.0;
            double p = 1.0;
            for (int j = 1; j <= s; ++j) {
                p *= k2;
                w += p;
            }
            acc += w * std::norm(c[m]);
        }
    }
    return std::sqrt(2.0 * pi * grid_.periods * acc);
}

double SampledFunction::max_abs() const {
    double m = 0.0;
    for (const auto& comp : comps_) m = std::max(m, comp.cwiseAbs().maxCoeff());
    return m;
}

double SampledFunction::top_band_mass(int margin_bins) const {
    const int n = grid_.total_points();
    if (margin_bins <= 0) return 0.0;
    const auto coef = spectrum();
    double top = 0.0, total = 0.0;
    for (const auto& c : coef) {
        for (int m = 0; m < n; ++m) {
            const int s = std::abs(fft::signed_index(m, n));
            const double mass = std::norm(c[m]);
            total += mass;
            if (s >= n / 2 - margin_bins) top += mass;
        }
    }
    return total > 0.0 ? top / total : 0.0;
}

SampledFunction& SampledFunction::operator+=(const SampledFunction& other) {
    if (!(grid_ == other.grid_) || comps_.size() != other.comps_.size())
        throw ShapeError("SampledFunction: shape mismatch in +=");
    for (size_t c = 0; c < comps_.size(); ++c) comps_[c] += other.comps_[c];
    return *this;
}

SampledFunction& SampledFunction::operator*=(cplx scale) {
    for (auto& comp : comps_) comp *= scale;
    return *this;
}

double SampledFunction::distance(const SampledFunction& other, Norm which) const {
    SampledFunction diff = *this;
    diff *= -1.0;
    diff += other;
    return diff.norm(which);
}

SampledFunction SampledFunction::mode(const SpatialGrid& grid, int components, int c,
                                      int harmonic, int xi_class, cplx amplitude) {
    if (xi_class < 0 || xi_class >= grid.periods)
        throw DomainError("mode: xi class out of range");
    SampledFunction f(grid, components);
    const double kappa = harmonic + grid.xi(xi_class);
    for (int n = 0; n < grid.total_points(); ++n)
        f.comp(c)[n] = amplitude * std::exp(1i * kappa * grid.x(n));
    return f;
}

}  // namespace bloch
