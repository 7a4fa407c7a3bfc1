#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bilop/grid.hpp"
#include "bilop/symbol.hpp"

namespace bilop {

/// Cap on the work of a single application (symbol evaluations or
/// multiply-adds).
inline constexpr std::uint64_t kApplyBudget = std::uint64_t{1} << 28;
/// Cap on the number of entries of a materialized trilinear form.
inline constexpr std::uint64_t kDenseBudget = std::uint64_t{1} << 24;

/**
 * DenseForm: the coefficients W[j][p][q] of a bilinear map on grid
 * functions, T(f, g)_j = sum_{p,q} W[j][p][q] f_p g_q.
 */
class DenseForm {
public:
    explicit DenseForm(Grid grid);

    const Grid& grid() const { return grid_; }
    std::size_t nodes() const { return m_; }
    cplx& at(std::size_t j, std::size_t p, std::size_t q) { return w_[(j * m_ + p) * m_ + q]; }
    cplx at(std::size_t j, std::size_t p, std::size_t q) const { return w_[(j * m_ + p) * m_ + q]; }

    GridFunction apply(const GridFunction& f, const GridFunction& g) const;

    /// which = 1: U[p][j][q] = W[j][p][q], so <T(f,g), h> = <U(h,g), f>.
    /// which = 2: U[q][p][j] = W[j][p][q], so <T(f,g), h> = <U(f,h), g>.
    DenseForm transpose(int which) const;

private:
    Grid grid_;
    std::size_t m_;
    std::vector<cplx> w_;
};

/// Throws BudgetExceeded when a grid is too large to materialize.
void require_dense_budget(const Grid& grid);

/// A bilinear map on grid functions. Implementations are immutable.
class BilinearMap {
public:
    virtual ~BilinearMap() = default;
    virtual const Grid& grid() const = 0;
    virtual GridFunction apply(const GridFunction& f, const GridFunction& g) const = 0;
    virtual DenseForm materialize() const = 0;
    virtual std::string describe() const = 0;
};

using OperatorPtr = std::shared_ptr<const BilinearMap>;

enum class Strategy { automatic, direct, multiplier, separable };
const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/**
 * PseudoDiffOperator: T(f,g)(x_j) = L^-2n sum_{k,l} sigma(x_j, xi_k, eta_l) f^_k g^_l e^{i x_j.(xi_k + eta_l)}.
 *
 * direct evaluates the double sum at every node; multiplier (x-independent
 * symbols) folds the sum into one convolution of spectra; separable
 * (sigma = a(x) b(xi) c(eta)) is a product of two multiplier applications.
 * All three include every grid mode, the unpaired -N/2 one as well, so they
 * agree to rounding.
 */
class PseudoDiffOperator : public BilinearMap {
public:
    PseudoDiffOperator(Symbol sigma, Grid grid, Strategy strategy = Strategy::automatic);

    const Grid& grid() const override { return grid_; }
    const Symbol& symbol() const { return sigma_; }
    Strategy strategy() const { return strategy_; }

    GridFunction apply(const GridFunction& f, const GridFunction& g) const override;
    DenseForm materialize() const override;
    std::string describe() const override;

private:
    GridFunction apply_direct(const SpectralFunction& fh, const SpectralFunction& gh) const;
    GridFunction apply_multiplier(const SpectralFunction& fh, const SpectralFunction& gh) const;
    GridFunction apply_separable(const GridFunction& f, const GridFunction& g) const;
    cplx table(std::size_t j, std::size_t k, std::size_t l) const;

    Symbol sigma_;
    Grid grid_;
    Strategy strategy_;
    // sigma(xi_k, eta_l) for the multiplier strategy, index k * M + l.
    std::vector<cplx> freq_table_;
};

/// True if sigma does not depend on x, judged at 20 probes to 1e-12.
bool looks_x_independent(const Symbol& sigma, const Grid& grid);

/// [T, a]_slot: slot 1 -> T(a f, g) - a T(f, g); slot 2 -> T(f, a g) - a T(f, g).
/// The base may itself be a commutator, which gives iterated commutators.
class Commutator : public BilinearMap {
public:
    Commutator(OperatorPtr base, int slot, GridFunction a);

    const Grid& grid() const override { return base_->grid(); }
    GridFunction apply(const GridFunction& f, const GridFunction& g) const override;
    DenseForm materialize() const override;
    std::string describe() const override;

    const OperatorPtr& base() const { return base_; }
    int slot() const { return slot_; }
    const GridFunction& multiplier() const { return a_; }

private:
    OperatorPtr base_;
    int slot_;
    GridFunction a_;
};

/// A bilinear map given by its coefficients.
class DenseOperator : public BilinearMap {
public:
    DenseOperator(DenseForm form, std::string description);

    const Grid& grid() const override { return form_.grid(); }
    GridFunction apply(const GridFunction& f, const GridFunction& g) const override { return form_.apply(f, g); }
    DenseForm materialize() const override { return form_; }
    std::string describe() const override { return description_; }

private:
    DenseForm form_;
    std::string description_;
};

OperatorPtr make_operator(const Symbol& sigma, const Grid& grid, Strategy strategy = Strategy::automatic);
OperatorPtr commutator(OperatorPtr base, int slot, const GridFunction& a);

/// Transpose with respect to the bilinear pairing <u, v> = sum u v dx^n:
/// which = 1 gives U with <T(f,g), h> = <U(h,g), f>; which = 2 gives
/// <T(f,g), h> = <U(f,h), g>. Realized by materializing the form.
OperatorPtr transpose(const OperatorPtr& op, int which);

struct IdentityCheck {
    std::string identity;
    double residual = 0.0;
    bool passed = true;
};

/// Checks on random triples (u, v, w):
///   ([T,a]_1)^{*1} = -[T^{*1},a]_1
///   ([T,a]_1)^{*2} = [T^{*2},a]_1 - [T^{*2},a]_2
///   ([T,a]_2)^{*1} = [T^{*1},a]_2 - [T^{*1},a]_1
///   ([T,a]_2)^{*2} = -[T^{*2},a]_2
/// Residual is max |<lhs(u,v), w> - <rhs(u,v), w>| / max(1, |<lhs(u,v), w>|);
/// an identity fails above 1e-8.
std::vector<IdentityCheck> verify_transpose_identities(const OperatorPtr& T, const GridFunction& a, int trials = 20,
                                                       std::uint64_t seed = 1);

/// Uniform random complex samples with real and imaginary parts in [-1, 1].
GridFunction random_function(const Grid& grid, std::uint64_t seed);

} // namespace bilop
