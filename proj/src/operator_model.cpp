#include "bloch/operator_model.hpp"

#include <cmath>

#include "bloch/fft.hpp"

namespace bloch {

namespace {

cplx ipow(cplx base, int n) {
    cplx r = 1.0;
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

}  // namespace

PeriodicCoefficient::PeriodicCoefficient(std::map<int, cplx> modes, bool is_real)
    : modes_(std::move(modes)), is_real_(is_real) {
    // drop exact zeros so bandwidth() reflects actual content
    for (auto it = modes_.begin(); it != modes_.end();)
        it = it->second == 0.0 ? modes_.erase(it) : std::next(it);
    if (is_real_) {
        const double tol = 1e-14;
        for (const auto& [k, v] : modes_) {
            const cplx other = mode(-k);
            if (std::abs(std::conj(v) - other) > tol * (1.0 + std::abs(v)))
                throw DomainError("PeriodicCoefficient: real coefficient requires "
                                  "mode(-k) = conj(mode(k))");
        }
        if (std::abs(mode(0).imag()) > tol)
            throw DomainError("PeriodicCoefficient: real coefficient requires real mode(0)");
    }
}

PeriodicCoefficient PeriodicCoefficient::constant(double value) {
    if (value == 0.0) return PeriodicCoefficient({}, true);
    return PeriodicCoefficient({{0, value}}, true);
}

PeriodicCoefficient PeriodicCoefficient::cosine(int k, double amp) {
    return PeriodicCoefficient({{k, amp}, {-k, amp}}, true);
}

cplx PeriodicCoefficient::mode(int k) const {
    auto it = modes_.find(k);
    return it == modes_.end() ? cplx(0.0) : it->second;
}

int PeriodicCoefficient::bandwidth() const {
    int b = 0;
    for (const auto& [k, v] : modes_) b = std::max(b, std::abs(k));
    return b;
}

PeriodicCoefficient PeriodicCoefficient::derivative() const {
    std::map<int, cplx> d;
    for (const auto& [k, v] : modes_)
        if (k != 0) d[k] = 1i * double(k) * v;
    return PeriodicCoefficient(std::move(d), is_real_);
}

Eigen::VectorXcd PeriodicCoefficient::values(int n_points, double dx) const {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n_points);
    for (const auto& [k, a] : modes_)
        for (int n = 0; n < n_points; ++n) v[n] += a * std::exp(1i * double(k) * (n * dx));
    return v;
}

PeriodicOperator::PeriodicOperator(int order, int components, std::vector<OperatorTerm> terms)
    : order_(order), components_(components), terms_(std::move(terms)) {
    validate();
}

void PeriodicOperator::validate() const {
    if (order_ < 2 || order_ % 2 != 0)
        throw DomainError("PeriodicOperator: order must be even and >= 2");
    if (components_ < 1) throw DomainError("PeriodicOperator: components must be >= 1");
    const size_t dd = size_t(components_) * components_;
    bool leading_nonzero = false;
    for (const auto& term : terms_) {
        if (term.order < 0 || term.order > order_)
            throw DomainError("PeriodicOperator: derivative order out of range");
        if (term.entries.size() != dd)
            throw ShapeError("PeriodicOperator: coefficient block must have d*d entries");
        if (term.order == order_)
            for (const auto& e : term.entries)
                if (!e.modes().empty()) leading_nonzero = true;
    }
    if (!leading_nonzero)
        throw DomainError("PeriodicOperator: highest-order coefficient is identically zero");

    // Sectoriality heuristic, scalar constant-leading-coefficient case only:
    // Re[a_{2n} (i kappa)^{2n}] must be negative for large |kappa|.
    if (components_ == 1) {
        for (const auto& term : terms_) {
            if (term.order != order_ || !term.entries[0].is_constant()) continue;
            const cplx lead = term.entries[0].mode(0);
            for (double kappa : {8.0, 16.0, 32.0, 64.0, 128.0}) {
                if ((lead * ipow(1i * kappa, order_)).real() >= 0.0)
                    throw ConfigError(
                        "PeriodicOperator: leading symbol has nonnegative real part at "
                        "kappa = " + std::to_string(kappa) + " (not sectorial)");
            }
        }
    }
}

int PeriodicOperator::coefficient_bandwidth() const {
    int b = 0;
    for (const auto& term : terms_)
        for (const auto& e : term.entries) b = std::max(b, e.bandwidth());
    return b;
}

bool PeriodicOperator::is_constant() const { return coefficient_bandwidth() == 0; }

bool PeriodicOperator::is_real() const {
    for (const auto& term : terms_)
        for (const auto& e : term.entries)
            if (!e.is_real()) return false;
    return true;
}

PeriodicOperator PeriodicOperator::shifted(double c) const {
    std::vector<OperatorTerm> terms = terms_;
    for (auto& term : terms) {
        if (term.order != 0) continue;
        for (int i = 0; i < components_; ++i) {
            auto modes = term.entries[size_t(i) * components_ + i].modes();
            modes[0] += c;
            term.entries[size_t(i) * components_ + i] =
                PeriodicCoefficient(std::move(modes));
        }
        return PeriodicOperator(order_, components_, std::move(terms));
    }
    OperatorTerm zero;
    zero.order = 0;
    zero.entries.assign(size_t(components_) * components_, PeriodicCoefficient());
    for (int i = 0; i < components_; ++i)
        zero.entries[size_t(i) * components_ + i] = PeriodicCoefficient::constant(c);
    terms.push_back(std::move(zero));
    return PeriodicOperator(order_, components_, std::move(terms));
}

BlochMatrix assemble_bloch_matrix(const PeriodicOperator& op, double xi, int truncation) {
    if (xi < -0.5 || xi >= 0.5)
        throw DomainError("assemble_bloch_matrix: xi must lie in [-1/2, 1/2)");
    if (truncation < op.coefficient_bandwidth())
        throw TruncationError(
            "assemble_bloch_matrix: truncation below coefficient bandwidth would drop "
            "harmonics");

    const int d = op.components();
    const int m = truncation;
    const int dim = d * (2 * m + 1);
    BlochMatrix bm;
    bm.xi = xi;
    bm.truncation = m;
    bm.components = d;
    bm.entries = Eigen::MatrixXcd::Zero(dim, dim);

    for (const auto& term : op.terms()) {
        for (int col = -m; col <= m; ++col) {
            const cplx deriv = ipow(1i * (col + xi), term.order);
            for (int row = -m; row <= m; ++row) {
                const int harm = row - col;
                if (std::abs(harm) > op.coefficient_bandwidth()) continue;
                for (int c1 = 0; c1 < d; ++c1)
                    for (int c2 = 0; c2 < d; ++c2) {
                        const cplx a = term.entry(c1, c2, d).mode(harm);
                        if (a != 0.0)
                            bm.entries(bm.index(row, c1), bm.index(col, c2)) += a * deriv;
                    }
            }
        }
    }
    return bm;
}

cplx symbol_eval(const PeriodicOperator& op, double kappa) {
    if (op.components() != 1 || !op.is_constant())
        throw OracleError("symbol_eval: only scalar constant-coefficient operators");
    cplx acc = 0.0;
    for (const auto& term : op.terms())
        acc += term.entries[0].mode(0) * ipow(1i * kappa, term.order);
    return acc;
}

SampledFunction apply_operator(const PeriodicOperator& op, const SampledFunction& u) {
    if (u.components() != op.components())
        throw ShapeError("apply_operator: component count mismatch");
    const SpatialGrid& grid = u.grid();
    const int n = grid.total_points();
    const int kc = op.coefficient_bandwidth();
    if (kc > 0 && u.top_band_mass(kc * grid.periods) > 1e-8)
        throw ResolutionError(
            "apply_operator: input carries spectral mass in the top coefficient band "
            "(grid too coarse)");

    const auto coef = u.spectrum();
    const int d = op.components();
    SampledFunction out(grid, d);
    std::vector<cplx> dcoef(n), dvals(n);

    for (const auto& term : op.terms()) {
        // spectral derivative of each component once per term
        std::vector<Eigen::VectorXcd> deriv(d);
        for (int c = 0; c < d; ++c) {
            for (int m = 0; m < n; ++m) {
                cplx w = ipow(1i * grid.kappa(m), term.order);
                // unpaired Nyquist mode has no symmetric partner for odd derivatives
                if (term.order % 2 == 1 && fft::signed_index(m, n) == -n / 2) w = 0.0;
                dcoef[m] = w * coef[c][m];
            }
            fft::inverse(dcoef, dvals);
            deriv[c] = Eigen::Map<Eigen::VectorXcd>(dvals.data(), n);
        }
        for (int c1 = 0; c1 < d; ++c1)
            for (int c2 = 0; c2 < d; ++c2) {
                const auto& a = term.entry(c1, c2, d);
                if (a.modes().empty()) continue;
                if (a.is_constant())
                    out.comp(c1) += a.mode(0) * deriv[c2];
                else
                    out.comp(c1) += a.values(n, grid.dx()).cwiseProduct(deriv[c2]);
            }
    }
    return out;
}

Nonlinearity Nonlinearity::power(double p, double c_n) {
    if (p <= 1.0) throw DomainError("Nonlinearity::power: exponent must exceed 1");
    Nonlinearity n;
    n.kind = Kind::power;
    n.exponent = p;
    n.scale = c_n;
    return n;
}

Nonlinearity Nonlinearity::advective() {
    Nonlinearity n;
    n.kind = Kind::advective;
    n.exponent = 2.0;
    return n;
}

}  // namespace bloch
