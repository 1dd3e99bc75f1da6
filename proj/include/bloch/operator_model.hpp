#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "bloch/spatial_grid.hpp"
#include "bloch/types.hpp"

namespace bloch {

// Finite Fourier series a(x) = sum_k mode(k) e^{ikx} of a 2*pi-periodic
// coefficient. A real coefficient must satisfy mode(-k) = conj(mode(k)).
class PeriodicCoefficient {
public:
    PeriodicCoefficient() = default;
    explicit PeriodicCoefficient(std::map<int, cplx> modes, bool is_real = true);

    static PeriodicCoefficient constant(double value);
    // 2*amp*cos(kx), the canonical real two-mode coefficient.
    static PeriodicCoefficient cosine(int k, double amp);

    cplx mode(int k) const;
    const std::map<int, cplx>& modes() const { return modes_; }
    bool is_real() const { return is_real_; }
    int bandwidth() const;
    bool is_constant() const { return bandwidth() == 0; }

    PeriodicCoefficient derivative() const;

    // Exact pointwise values on a grid of the big box (or one period).
    Eigen::VectorXcd values(int n_points, double dx) const;

private:
    std::map<int, cplx> modes_;
    bool is_real_ = true;
};

// One derivative order of the operator: a d x d matrix of periodic
// coefficients (row-major), scalar when d = 1.
struct OperatorTerm {
    int order = 0;
    std::vector<PeriodicCoefficient> entries;  // d*d entries

    const PeriodicCoefficient& entry(int row, int col, int d) const {
        return entries[row * d + col];
    }
};

// L = sum_j a_j(x) d^j/dx^j of even order 2n with 2*pi-periodic coefficients.
class PeriodicOperator {
public:
    PeriodicOperator() = default;
    PeriodicOperator(int order, int components, std::vector<OperatorTerm> terms);

    int order() const { return order_; }
    int components() const { return components_; }
    const std::vector<OperatorTerm>& terms() const { return terms_; }

    int coefficient_bandwidth() const;  // K_c
    bool is_constant() const;
    bool is_real() const;

    // Adds c to the zero-order constant part (spectrum shift by c).
    PeriodicOperator shifted(double c) const;

private:
    void validate() const;

    int order_ = 0;
    int components_ = 1;
    std::vector<OperatorTerm> terms_;
};

// Fourier-Galerkin truncation of the Bloch operator at a fixed Floquet
// exponent. Block row k, block column k' (k, k' in -M..M) holds
// sum_j A_j(k - k') (i(k' + xi))^j; band width is the coefficient bandwidth.
struct BlochMatrix {
    double xi = 0.0;
    int truncation = 0;  // M
    int components = 1;
    Eigen::MatrixXcd entries;  // d(2M+1) x d(2M+1)

    int dim() const { return static_cast<int>(entries.rows()); }
    // flat index of (mode k, component c)
    int index(int k, int c = 0) const { return (k + truncation) * components + c; }
};

BlochMatrix assemble_bloch_matrix(const PeriodicOperator& op, double xi, int truncation);

// Constant-coefficient scalar symbol sum_j a_j (i kappa)^j; the analytic
// oracle for constant-coefficient spectra.
cplx symbol_eval(const PeriodicOperator& op, double kappa);

// Pseudospectral application of L on the big box: spectral differentiation,
// pointwise coefficient multiplication. Trips a ResolutionError when the
// input carries significant mass in the top coefficient-bandwidth band.
SampledFunction apply_operator(const PeriodicOperator& op, const SampledFunction& u);

// Supported nonlinearities of the evolution equation.
struct Nonlinearity {
    enum class Kind { none, power, advective };

    Kind kind = Kind::none;
    double exponent = 2.0;  // p > 1 (power kind)
    double scale = 1.0;     // C_N (power kind)

    static Nonlinearity none() { return {}; }
    static Nonlinearity power(double p, double c_n = 1.0);
    static Nonlinearity advective();
};

}  // namespace bloch
