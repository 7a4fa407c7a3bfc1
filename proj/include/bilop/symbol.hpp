#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bilop/common.hpp"
#include "bilop/expr.hpp"

namespace bilop {

/// Declared Hormander class parameters (m, rho, delta).
struct SymbolClass {
    double m = 0.0;
    double rho = 1.0;
    double delta = 0.0;
};

/// Orders of differentiation in x, xi and eta. In 1D only component 0 of
/// each block is used.
struct DerivOrder {
    std::array<int, 2> alpha{};
    std::array<int, 2> beta{};
    std::array<int, 2> gamma{};

    int x_order() const { return alpha[0] + alpha[1]; }
    int freq_order() const { return beta[0] + beta[1] + gamma[0] + gamma[1]; }
    bool operator==(const DerivOrder&) const = default;
};

/// Mixed partials of a symbol at one point, for every order up to a box of
/// per-coordinate maxima. Coordinates are ordered x1, x2, xi1, xi2, eta1, eta2.
class DerivativeTable {
public:
    using Orders = std::array<int, 6>;

    explicit DerivativeTable(const Orders& max_orders);

    const Orders& max_orders() const { return max_; }
    bool contains(const DerivOrder& d) const;
    cplx at(const DerivOrder& d) const;
    cplx& at(const DerivOrder& d);
    cplx at_flat(std::size_t i) const { return values_[i]; }
    cplx& at_flat(std::size_t i) { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    std::size_t flat_index(const DerivOrder& d) const;
    DerivOrder order_of(std::size_t flat) const;

private:
    Orders max_;
    std::vector<cplx> values_;
};

/// Converts between DerivOrder and the six-coordinate layout.
DerivativeTable::Orders to_orders(const DerivOrder& d);
DerivOrder from_orders(const DerivativeTable::Orders& k);

/**
 * Symbol: an evaluable sigma(x, xi, eta) with a declared class.
 *
 * Derivatives come from one of three places. Expression-backed symbols are
 * differentiated exactly with truncated Taylor arithmetic; derived symbols
 * (the pieces produced by ftc_decompose) supply their own table; anything
 * else falls back to fourth-order central differences. Symbols are
 * immutable and safe to evaluate from several threads.
 */
class Symbol {
public:
    using Evaluator = std::function<cplx(const Vec& x, const Vec& xi, const Vec& eta)>;
    using TableProvider =
        std::function<DerivativeTable(const Vec& x, const Vec& xi, const Vec& eta, const DerivativeTable::Orders&)>;
    using Factor = std::function<cplx(const Vec&)>;

    /// sigma = a(x) b(xi) c(eta).
    struct Factors {
        Factor a, b, c;
    };

    struct Traits {
        bool x_independent = false;
        std::optional<Factors> factors;
        TableProvider table;
        std::string expression;
    };

    Symbol(std::string name, int dim, SymbolClass cls, Evaluator f);
    Symbol(std::string name, int dim, SymbolClass cls, Evaluator f, Traits traits);

    const std::string& name() const { return impl_->name; }
    int dim() const { return impl_->dim; }
    const SymbolClass& declared_class() const { return impl_->cls; }
    bool x_independent() const { return impl_->traits.x_independent; }
    const std::optional<Factors>& factors() const { return impl_->traits.factors; }
    /// Source text for expression-backed symbols, empty otherwise.
    const std::string& expression() const { return impl_->traits.expression; }

    cplx operator()(const Vec& x, const Vec& xi, const Vec& eta) const { return impl_->eval(x, xi, eta); }

    /// All partials up to the given per-coordinate orders.
    DerivativeTable derivatives(const Vec& x, const Vec& xi, const Vec& eta,
                                const DerivativeTable::Orders& max_orders) const;
    cplx derivative(const DerivOrder& d, const Vec& x, const Vec& xi, const Vec& eta) const;

    /// Central-difference estimate regardless of how the symbol is defined.
    /// Frequency steps scale with 1 + |xi| + |eta|.
    cplx fd_derivative(const DerivOrder& d, const Vec& x, const Vec& xi, const Vec& eta) const;

    Symbol renamed(std::string name) const;
    Symbol with_class(SymbolClass cls) const;
    /// Declares the product structure used by the separable fast path.
    Symbol with_factors(Factors factors) const;

private:
    struct Impl {
        std::string name;
        int dim;
        SymbolClass cls;
        Evaluator eval;
        Traits traits;
    };
    explicit Symbol(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    std::shared_ptr<const Impl> impl_;
};

/// Builds a symbol from a parsed expression. Free variables must be among
/// {x, xi, eta} in 1D or {x1, x2, xi1, xi2, eta1, eta2} in 2D.
Symbol symbol_from_expr(const expr::Expr& e, SymbolClass cls, int dim = 1, std::string name = {});

// -- seminorms ------------------------------------------------------------

struct SeminormOptions {
    int max_order = 2;
    /// Shells max(|xi|, |eta|) in [2^s, 2^(s+1)] for s = 0..max_shell.
    int max_shell = 12;
    /// Probe points per shell.
    int samples = 100;
    /// x probes are uniform in [0, period)^n.
    double period = 2.0 * pi;
    std::uint64_t seed = 1;
};

enum class Verdict { bounded, growing, indeterminate };
const char* to_string(Verdict v);

struct SeminormEntry {
    DerivOrder order;
    double ratio = 0.0;
    double slope = 0.0;
    Verdict verdict = Verdict::bounded;
    std::vector<double> shell_max;
};

struct SeminormReport {
    std::string symbol;
    int dim = 1;
    SymbolClass cls;
    SeminormOptions options;
    std::vector<SeminormEntry> entries;

    bool all_bounded() const;
};

/// Sampled sup of |d^alpha_x d^beta_xi d^gamma_eta sigma| (1+|xi|+|eta|)^-(m + delta|alpha| - rho(|beta|+|gamma|))
/// over dyadic frequency shells, with a log-log growth slope per entry.
SeminormReport estimate_seminorms(const Symbol& sigma, const SeminormOptions& options = {});

/// Columns: alpha, beta, gamma, ratio, slope, verdict. Multi-indices in 2D
/// are written as "a1 a2".
void write_csv(std::ostream& out, const SeminormReport& report);

// -- fundamental theorem of calculus decomposition ------------------------

/**
 * Splits sigma - sigma(x, 0, 0) as sum_j xi_j sigma_j + eta_j tsigma_j with
 *   sigma_j(x, xi, eta)  = int_0^1 (d_{xi_j} sigma)(x, t xi, t eta) dt,
 *   tsigma_j(x, xi, eta) = int_0^1 (d_{eta_j} sigma)(x, t xi, t eta) dt.
 * Returns {sigma_1..sigma_n, tsigma_1..tsigma_n}, each declared of class
 * (m - 1, rho, delta).
 *
 * The t-integral uses Gauss-Legendre with quad_points nodes on each of a set
 * of dyadic panels refined toward t = 0; the number of panels grows like
 * log2(1 + |xi| + |eta|) so the integrand's 1/|xi| scale is resolved.
 * Throws ToleranceError if doubling the node count moves any probe value by
 * more than 1e-8.
 */
std::vector<Symbol> ftc_decompose(const Symbol& sigma, int quad_points = 32, double period = 2.0 * pi);

/// max over random probes of
///   |sigma - sigma(x,0,0) - sum_j (xi_j sigma_j + eta_j tsigma_j)| / max(1, |sigma - sigma(x,0,0)|)
/// for pieces from ftc_decompose. Frequencies have log-uniform magnitude up to
/// max_freq and random signs; x is uniform in [0, period)^n.
double ftc_reconstruction_error(const Symbol& sigma, const std::vector<Symbol>& pieces, int probes = 200,
                                double max_freq = 4096.0, std::uint64_t seed = 17, double period = 2.0 * pi);

/// Gauss-Legendre nodes and weights on [0, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(int points);

} // namespace bilop
