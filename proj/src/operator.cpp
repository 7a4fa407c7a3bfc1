#include "bilop/operator.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <random>

#include "fftw_planner.hpp"

namespace bilop {
namespace {

// exp(2 pi i r / N) for r = 0..N-1.
std::vector<cplx> roots_of_unity(int n)
{
    std::vector<cplx> w(n);
    for (int r = 0; r < n; ++r) w[r] = std::polar(1.0, 2.0 * pi * r / n);
    return w;
}

// Phase index sum_a j_a k_a mod N for flat node j and flat frequency k.
int phase_index(const Grid& g, std::size_t j, std::size_t k)
{
    const auto a = g.axis_indices(j);
    const auto b = g.axis_indices(k);
    const int n = g.points();
    long s = static_cast<long>(a[0]) * b[0];
    if (g.dim() == 2) s += static_cast<long>(a[1]) * b[1];
    return static_cast<int>(s % n);
}

// Flat frequency index of k + l (mod N on every axis).
std::size_t add_frequencies(const Grid& g, std::size_t k, std::size_t l)
{
    const auto a = g.axis_indices(k);
    const auto b = g.axis_indices(l);
    const int n = g.points();
    if (g.dim() == 1) return static_cast<std::size_t>((a[0] + b[0]) % n);
    return static_cast<std::size_t>(((a[0] + b[0]) % n) * n + (a[1] + b[1]) % n);
}

// In-place forward DFT of a rank-r array with extent N on every axis.
class RankPlan {
public:
    RankPlan(int rank, int n)
    {
        std::lock_guard lock(mutex());
        std::vector<int> dims(rank, n);
        std::size_t total = 1;
        for (int i = 0; i < rank; ++i) total *= static_cast<std::size_t>(n);
        std::vector<cplx> scratch(total);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        plan_ = fftw_plan_dft(rank, dims.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan_) throw Error("FFTW could not create a plan");
    }
    ~RankPlan()
    {
        std::lock_guard lock(mutex());
        fftw_destroy_plan(plan_);
    }
    RankPlan(const RankPlan&) = delete;
    RankPlan& operator=(const RankPlan&) = delete;

    void execute(cplx* data) const
    {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(plan_, p, p);
    }

private:
    static std::mutex& mutex() { return fftw_planner_mutex(); }
    fftw_plan plan_;
};

} // namespace

// -- DenseForm ------------------------------------------------------------

void require_dense_budget(const Grid& grid)
{
    const std::uint64_t m = grid.size();
    if (m * m * m > kDenseBudget)
        throw BudgetExceeded("materializing the trilinear form needs " + std::to_string(m * m * m) +
                             " entries (limit " + std::to_string(kDenseBudget) + "); use a smaller grid");
}

DenseForm::DenseForm(Grid grid) : grid_(grid), m_(grid.size())
{
    require_dense_budget(grid_);
    w_.assign(m_ * m_ * m_, cplx{});
}

GridFunction DenseForm::apply(const GridFunction& f, const GridFunction& g) const
{
    require_same_grid(grid_, f.grid(), "dense apply (f)");
    require_same_grid(grid_, g.grid(), "dense apply (g)");
    GridFunction out(grid_);
    parallel_for(m_, [&](std::size_t j) {
        cplx acc = 0.0;
        const cplx* row = &w_[j * m_ * m_];
        for (std::size_t p = 0; p < m_; ++p) {
            if (f[p] == cplx{}) continue;
            cplx inner = 0.0;
            for (std::size_t q = 0; q < m_; ++q) inner += row[p * m_ + q] * g[q];
            acc += f[p] * inner;
        }
        out[j] = acc;
    });
    return out;
}

DenseForm DenseForm::transpose(int which) const
{
    if (which != 1 && which != 2) throw InvalidInput("transpose index must be 1 or 2");
    DenseForm out(grid_);
    for (std::size_t j = 0; j < m_; ++j)
        for (std::size_t p = 0; p < m_; ++p)
            for (std::size_t q = 0; q < m_; ++q) {
                if (which == 1)
                    out.at(p, j, q) = at(j, p, q);
                else
                    out.at(q, p, j) = at(j, p, q);
            }
    return out;
}

// -- PseudoDiffOperator ---------------------------------------------------

const char* to_string(Strategy s)
{
    switch (s) {
    case Strategy::automatic: return "auto";
    case Strategy::direct: return "direct";
    case Strategy::multiplier: return "multiplier";
    case Strategy::separable: return "separable";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s)
{
    if (s == "auto") return Strategy::automatic;
    if (s == "direct") return Strategy::direct;
    if (s == "multiplier") return Strategy::multiplier;
    if (s == "separable") return Strategy::separable;
    throw InvalidInput("unknown strategy '" + s + "' (expected auto, direct, multiplier or separable)");
}

bool looks_x_independent(const Symbol& sigma, const Grid& grid)
{
    std::mt19937_64 rng(0x1de9);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (int i = 0; i < 20; ++i) {
        const Vec x1 = grid.node(pick(rng)), x2 = grid.node(pick(rng));
        const Vec xi = grid.frequency(pick(rng)), eta = grid.frequency(pick(rng));
        const cplx a = sigma(x1, xi, eta), b = sigma(x2, xi, eta);
        if (!(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)))) return false;
    }
    return true;
}

PseudoDiffOperator::PseudoDiffOperator(Symbol sigma, Grid grid, Strategy strategy)
    : sigma_(std::move(sigma)), grid_(grid), strategy_(strategy)
{
    if (sigma_.dim() != grid_.dim())
        throw InvalidInput("symbol dimension " + std::to_string(sigma_.dim()) + " does not match grid dimension " +
                           std::to_string(grid_.dim()));

    const bool x_free = looks_x_independent(sigma_, grid_);
    if (strategy_ == Strategy::automatic)
        strategy_ = sigma_.factors() ? Strategy::separable : x_free ? Strategy::multiplier : Strategy::direct;
    if (strategy_ == Strategy::multiplier && !x_free)
        throw InvalidInput("multiplier strategy needs an x-independent symbol; '" + sigma_.name() + "' depends on x");
    if (strategy_ == Strategy::separable && !sigma_.factors())
        throw InvalidInput("separable strategy needs a symbol declared as a(x) b(xi) c(eta)");

    const std::uint64_t m = grid_.size();
    const std::uint64_t cost = strategy_ == Strategy::direct ? m * m * m : strategy_ == Strategy::multiplier ? m * m : m;
    if (cost > kApplyBudget)
        throw BudgetExceeded("applying '" + sigma_.name() + "' with strategy " + to_string(strategy_) + " costs " +
                             std::to_string(cost) + " evaluations (limit " + std::to_string(kApplyBudget) +
                             "); reduce N");

    if (strategy_ == Strategy::multiplier) {
        freq_table_.resize(m * m);
        const Vec x0 = grid_.node(0);
        parallel_for(m, [&](std::size_t k) {
            const Vec xi = grid_.frequency(k);
            for (std::size_t l = 0; l < m; ++l) freq_table_[k * m + l] = sigma_(x0, xi, grid_.frequency(l));
        });
    }
}

cplx PseudoDiffOperator::table(std::size_t j, std::size_t k, std::size_t l) const
{
    if (!freq_table_.empty()) return freq_table_[k * grid_.size() + l];
    return sigma_(grid_.node(j), grid_.frequency(k), grid_.frequency(l));
}

GridFunction PseudoDiffOperator::apply(const GridFunction& f, const GridFunction& g) const
{
    require_same_grid(grid_, f.grid(), "apply (f)");
    require_same_grid(grid_, g.grid(), "apply (g)");
    if (strategy_ == Strategy::separable) return apply_separable(f, g);
    const SpectralFunction fh = fft_forward(f), gh = fft_forward(g);
    return strategy_ == Strategy::multiplier ? apply_multiplier(fh, gh) : apply_direct(fh, gh);
}

GridFunction PseudoDiffOperator::apply_direct(const SpectralFunction& fh, const SpectralFunction& gh) const
{
    const std::size_t m = grid_.size();
    const auto w = roots_of_unity(grid_.points());
    const double scale = 1.0 / std::pow(grid_.period(), 2 * grid_.dim());
    GridFunction out(grid_);
    parallel_for(m, [&](std::size_t j) {
        const Vec x = grid_.node(j);
        std::vector<cplx> gt(m);
        for (std::size_t l = 0; l < m; ++l) gt[l] = gh[l] * w[phase_index(grid_, j, l)];
        cplx acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (fh[k] == cplx{}) continue;
            const Vec xi = grid_.frequency(k);
            cplx inner = 0.0;
            for (std::size_t l = 0; l < m; ++l)
                if (gt[l] != cplx{}) inner += sigma_(x, xi, grid_.frequency(l)) * gt[l];
            acc += fh[k] * w[phase_index(grid_, j, k)] * inner;
        }
        out[j] = scale * acc;
    });
    return out;
}

GridFunction PseudoDiffOperator::apply_multiplier(const SpectralFunction& fh, const SpectralFunction& gh) const
{
    const std::size_t m = grid_.size();
    std::vector<cplx> c(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (fh[k] == cplx{}) continue;
        for (std::size_t l = 0; l < m; ++l) c[add_frequencies(grid_, k, l)] += freq_table_[k * m + l] * fh[k] * gh[l];
    }
    const double scale = 1.0 / std::pow(grid_.period(), grid_.dim());
    for (cplx& v : c) v *= scale;
    return fft_inverse(SpectralFunction(grid_, std::move(c)));
}

GridFunction PseudoDiffOperator::apply_separable(const GridFunction& f, const GridFunction& g) const
{
    const auto& fac = *sigma_.factors();
    GridFunction out = GridFunction::sample(grid_, fac.a);
    out *= bilop::apply_multiplier(f, fac.b);
    out *= bilop::apply_multiplier(g, fac.c);
    return out;
}

DenseForm PseudoDiffOperator::materialize() const
{
    DenseForm form(grid_);
    const std::size_t m = grid_.size();
    const int n = grid_.dim();
    const auto w = roots_of_unity(grid_.points());
    const double scale = 1.0 / static_cast<double>(m * m);
    const RankPlan plan(2 * n, grid_.points());

    // W[j][p][q] = N^-2n sum_{k,l} sigma(x_j, xi_k, eta_l) e^{i xi_k (x_j - x_p)} e^{i eta_l (x_j - x_q)}:
    // a forward DFT over (k, l) of the phased symbol table.
    auto fill = [&](std::size_t j, std::vector<cplx>& s) {
        for (std::size_t k = 0; k < m; ++k) {
            const cplx pk = w[phase_index(grid_, j, k)];
            for (std::size_t l = 0; l < m; ++l) s[k * m + l] = table(j, k, l) * pk * w[phase_index(grid_, j, l)];
        }
        plan.execute(s.data());
        for (cplx& v : s) v *= scale;
    };

    if (!freq_table_.empty()) {
        // Translation invariant: W[j][p][q] = W[0][p - j][q - j].
        std::vector<cplx> s(m * m);
        fill(0, s);
        auto sub = [&](std::size_t p, std::size_t j) {
            const auto a = grid_.axis_indices(p);
            const auto b = grid_.axis_indices(j);
            const int N = grid_.points();
            const std::size_t d0 = static_cast<std::size_t>((a[0] - b[0] + N) % N);
            return n == 1 ? d0 : d0 * N + static_cast<std::size_t>((a[1] - b[1] + N) % N);
        };
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t p = 0; p < m; ++p)
                for (std::size_t q = 0; q < m; ++q) form.at(j, p, q) = s[sub(p, j) * m + sub(q, j)];
        return form;
    }

    parallel_for(m, [&](std::size_t j) {
        std::vector<cplx> s(m * m);
        fill(j, s);
        for (std::size_t i = 0; i < m * m; ++i) form.at(j, i / m, i % m) = s[i];
    });
    return form;
}

std::string PseudoDiffOperator::describe() const { return "T[" + sigma_.name() + "]"; }

// -- Commutator -----------------------------------------------------------

Commutator::Commutator(OperatorPtr base, int slot, GridFunction a) : base_(std::move(base)), slot_(slot), a_(std::move(a))
{
    if (!base_) throw InvalidInput("commutator needs a base operator");
    if (slot_ != 1 && slot_ != 2) throw InvalidInput("commutator slot must be 1 or 2");
    require_same_grid(base_->grid(), a_.grid(), "commutator multiplier");
}

GridFunction Commutator::apply(const GridFunction& f, const GridFunction& g) const
{
    GridFunction first = slot_ == 1 ? base_->apply(a_ * f, g) : base_->apply(f, a_ * g);
    return first - a_ * base_->apply(f, g);
}

DenseForm Commutator::materialize() const
{
    DenseForm form = base_->materialize();
    const std::size_t m = form.nodes();
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t p = 0; p < m; ++p)
            for (std::size_t q = 0; q < m; ++q) form.at(j, p, q) *= (slot_ == 1 ? a_[p] : a_[q]) - a_[j];
    return form;
}

std::string Commutator::describe() const { return "[" + base_->describe() + ", a]_" + std::to_string(slot_); }

DenseOperator::DenseOperator(DenseForm form, std::string description)
    : form_(std::move(form)), description_(std::move(description))
{
}

OperatorPtr make_operator(const Symbol& sigma, const Grid& grid, Strategy strategy)
{
    return std::make_shared<const PseudoDiffOperator>(sigma, grid, strategy);
}

OperatorPtr commutator(OperatorPtr base, int slot, const GridFunction& a)
{
    return std::make_shared<const Commutator>(std::move(base), slot, a);
}

OperatorPtr transpose(const OperatorPtr& op, int which)
{
    if (which != 1 && which != 2) throw InvalidInput("transpose index must be 1 or 2");
    return std::make_shared<const DenseOperator>(op->materialize().transpose(which),
                                                 "(" + op->describe() + ")^{*" + std::to_string(which) + "}");
}

GridFunction random_function(const Grid& grid, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GridFunction f(grid);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double re = u(rng);
        f[i] = {re, u(rng)};
    }
    return f;
}

std::vector<IdentityCheck> verify_transpose_identities(const OperatorPtr& T, const GridFunction& a, int trials,
                                                       std::uint64_t seed)
{
    if (trials < 10) throw InvalidInput("verify_transpose_identities needs at least 10 trials");
    const Grid& grid = T->grid();
    require_same_grid(grid, a.grid(), "identity multiplier");

    const OperatorPtr T1 = transpose(T, 1), T2 = transpose(T, 2);
    const OperatorPtr C1 = commutator(T, 1, a), C2 = commutator(T, 2, a);

    struct Identity {
        std::string name;
        OperatorPtr lhs;
        std::vector<std::pair<double, OperatorPtr>> rhs;
    };
    const std::vector<Identity> ids{
        {"([T,a]_1)^{*1} = -[T^{*1},a]_1", transpose(C1, 1), {{-1.0, commutator(T1, 1, a)}}},
        {"([T,a]_1)^{*2} = [T^{*2},a]_1 - [T^{*2},a]_2", transpose(C1, 2),
         {{1.0, commutator(T2, 1, a)}, {-1.0, commutator(T2, 2, a)}}},
        {"([T,a]_2)^{*1} = [T^{*1},a]_2 - [T^{*1},a]_1", transpose(C2, 1),
         {{1.0, commutator(T1, 2, a)}, {-1.0, commutator(T1, 1, a)}}},
        {"([T,a]_2)^{*2} = -[T^{*2},a]_2", transpose(C2, 2), {{-1.0, commutator(T2, 2, a)}}},
    };

    std::vector<IdentityCheck> out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        IdentityCheck check{ids[i].name, 0.0, true};
        for (int t = 0; t < trials; ++t) {
            const GridFunction u = random_function(grid, mix_seed(seed, 3 * t));
            const GridFunction v = random_function(grid, mix_seed(seed, 3 * t + 1));
            const GridFunction w = random_function(grid, mix_seed(seed, 3 * t + 2));
            const cplx lhs = pairing(ids[i].lhs->apply(u, v), w);
            cplx rhs = 0.0;
            for (const auto& [c, op] : ids[i].rhs) rhs += c * pairing(op->apply(u, v), w);
            check.residual = std::max(check.residual, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
        check.passed = check.residual <= 1e-8;
        out.push_back(check);
    }
    return out;
}

} // namespace bilop
