#include "bilop/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>

#include "jet.hpp"

namespace bilop {
namespace {

using Orders = DerivativeTable::Orders;

Orders clip_to_dim(Orders k, int dim)
{
    if (dim == 1) k[1] = k[3] = k[5] = 0;
    return k;
}

double freq_weight(const Vec& xi, const Vec& eta)
{
    return 1.0 + std::hypot(xi[0], xi[1]) + std::hypot(eta[0], eta[1]);
}

const detail::JetShape& cached_shape(const Orders& orders)
{
    thread_local std::map<Orders, std::unique_ptr<detail::JetShape>> cache;
    auto& slot = cache[orders];
    if (!slot) slot = std::make_unique<detail::JetShape>(orders);
    return *slot;
}

struct Stencil {
    int half;
    std::array<double, 7> weights; // offsets -half..half
};

Stencil stencil(int order)
{
    switch (order) {
    case 0: return {0, {1.0}};
    case 1: return {2, {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12}};
    case 2: return {2, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}};
    case 3: return {3, {1.0 / 8, -8.0 / 8, 13.0 / 8, 0.0, -13.0 / 8, 8.0 / 8, -1.0 / 8}};
    default: throw InvalidInput("finite differences support orders up to 3 per coordinate");
    }
}

// Step balancing truncation error h^4 against roundoff eps / h^order.
double relative_step(int order)
{
    return std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (order + 4));
}

// Copies the entries of `small` into a zero table with larger maxima.
DerivativeTable widen(const DerivativeTable& small, const Orders& max_orders)
{
    DerivativeTable out(max_orders);
    for (std::size_t i = 0; i < small.size(); ++i) out.at(small.order_of(i)) = small.at_flat(i);
    return out;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys)
{
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

std::vector<std::array<int, 2>> multi_indices(int dim, int max_order)
{
    std::vector<std::array<int, 2>> out;
    for (int a = 0; a <= max_order; ++a)
        for (int b = 0; b <= (dim == 2 ? max_order - a : 0); ++b) out.push_back({a, b});
    return out;
}

} // namespace

// -- DerivativeTable ------------------------------------------------------

DerivativeTable::DerivativeTable(const Orders& max_orders) : max_(max_orders)
{
    std::size_t n = 1;
    for (int o : max_) {
        if (o < 0) throw InvalidInput("negative derivative order");
        n *= static_cast<std::size_t>(o + 1);
    }
    values_.assign(n, cplx{});
}

Orders to_orders(const DerivOrder& d)
{
    return {d.alpha[0], d.alpha[1], d.beta[0], d.beta[1], d.gamma[0], d.gamma[1]};
}

DerivOrder from_orders(const Orders& k)
{
    DerivOrder d;
    d.alpha = {k[0], k[1]};
    d.beta = {k[2], k[3]};
    d.gamma = {k[4], k[5]};
    return d;
}

bool DerivativeTable::contains(const DerivOrder& d) const
{
    const Orders k = to_orders(d);
    for (int c = 0; c < 6; ++c)
        if (k[c] < 0 || k[c] > max_[c]) return false;
    return true;
}

std::size_t DerivativeTable::flat_index(const DerivOrder& d) const
{
    if (!contains(d)) throw InvalidInput("derivative order outside table");
    const Orders k = to_orders(d);
    std::size_t i = 0;
    for (int c = 0; c < 6; ++c) i = i * static_cast<std::size_t>(max_[c] + 1) + static_cast<std::size_t>(k[c]);
    return i;
}

DerivOrder DerivativeTable::order_of(std::size_t flat) const
{
    Orders k{};
    for (int c = 5; c >= 0; --c) {
        const std::size_t d = static_cast<std::size_t>(max_[c] + 1);
        k[c] = static_cast<int>(flat % d);
        flat /= d;
    }
    return from_orders(k);
}

cplx DerivativeTable::at(const DerivOrder& d) const { return values_[flat_index(d)]; }
cplx& DerivativeTable::at(const DerivOrder& d) { return values_[flat_index(d)]; }

// -- Symbol ---------------------------------------------------------------

Symbol::Symbol(std::string name, int dim, SymbolClass cls, Evaluator f, Traits traits)
{
    if (dim != 1 && dim != 2) throw InvalidInput("symbol dimension must be 1 or 2");
    if (!f) throw InvalidInput("symbol needs an evaluator");
    impl_ = std::make_shared<const Impl>(Impl{std::move(name), dim, cls, std::move(f), std::move(traits)});
}

Symbol::Symbol(std::string name, int dim, SymbolClass cls, Evaluator f)
    : Symbol(std::move(name), dim, cls, std::move(f), Traits{})
{
}

Symbol Symbol::renamed(std::string name) const
{
    Impl copy = *impl_;
    copy.name = std::move(name);
    return Symbol(std::make_shared<const Impl>(std::move(copy)));
}

Symbol Symbol::with_class(SymbolClass cls) const
{
    Impl copy = *impl_;
    copy.cls = cls;
    return Symbol(std::make_shared<const Impl>(std::move(copy)));
}

Symbol Symbol::with_factors(Factors factors) const
{
    Impl copy = *impl_;
    copy.traits.factors = std::move(factors);
    return Symbol(std::make_shared<const Impl>(std::move(copy)));
}

DerivativeTable Symbol::derivatives(const Vec& x, const Vec& xi, const Vec& eta, const Orders& max_orders) const
{
    const Orders requested = clip_to_dim(max_orders, dim());
    Orders computed = requested;
    if (x_independent()) computed[0] = computed[1] = 0;

    DerivativeTable table(computed);
    if (impl_->traits.table) {
        table = impl_->traits.table(x, xi, eta, computed);
    } else {
        for (std::size_t i = 0; i < table.size(); ++i) table.at_flat(i) = fd_derivative(table.order_of(i), x, xi, eta);
    }
    if (computed == max_orders) return table;
    return widen(table, max_orders);
}

cplx Symbol::derivative(const DerivOrder& d, const Vec& x, const Vec& xi, const Vec& eta) const
{
    if (d == DerivOrder{}) return (*this)(x, xi, eta);
    if (x_independent() && d.x_order() > 0) return 0.0;
    return derivatives(x, xi, eta, to_orders(d)).at(d);
}

cplx Symbol::fd_derivative(const DerivOrder& d, const Vec& x, const Vec& xi, const Vec& eta) const
{
    const Orders k = clip_to_dim(to_orders(d), dim());
    if (x_independent() && (k[0] > 0 || k[1] > 0)) return 0.0;

    std::array<double, 6> base{x[0], x[1], xi[0], xi[1], eta[0], eta[1]};
    std::array<Stencil, 6> st;
    std::array<double, 6> h{};
    const double scale = freq_weight(xi, eta);
    for (int c = 0; c < 6; ++c) {
        st[c] = stencil(k[c]);
        h[c] = relative_step(k[c]) * (c < 2 ? 1.0 : scale);
    }

    // Tensor-product sum over all offsets.
    std::array<int, 6> off{};
    for (int c = 0; c < 6; ++c) off[c] = -st[c].half;
    cplx acc = 0.0;
    for (;;) {
        double w = 1.0;
        std::array<double, 6> p = base;
        for (int c = 0; c < 6; ++c) {
            w *= st[c].weights[off[c] + st[c].half];
            p[c] += off[c] * h[c];
        }
        if (w != 0.0) acc += w * (*this)({p[0], p[1]}, {p[2], p[3]}, {p[4], p[5]});
        int c = 5;
        while (c >= 0 && off[c] == st[c].half) {
            off[c] = -st[c].half;
            --c;
        }
        if (c < 0) break;
        ++off[c];
    }
    double denom = 1.0;
    for (int c = 0; c < 6; ++c) denom *= std::pow(h[c], k[c]);
    return acc / denom;
}

Symbol symbol_from_expr(const expr::Expr& e, SymbolClass cls, int dim, std::string name)
{
    if (dim != 1 && dim != 2) throw InvalidInput("symbol dimension must be 1 or 2");
    bool uses_x = false;
    for (expr::Variable v : e.free_variables()) {
        const int c = detail::coordinate_of(v, dim);
        if (c < 0)
            throw InvalidInput("variable '" + std::string(expr::name_of(v)) + "' is not allowed in dimension " +
                               std::to_string(dim));
        uses_x = uses_x || c < 2;
    }

    auto shared = std::make_shared<const expr::Expr>(e);
    Symbol::Traits traits;
    traits.x_independent = !uses_x;
    traits.expression = e.to_string();
    traits.table = [shared, dim](const Vec& x, const Vec& xi, const Vec& eta, const Orders& orders) {
        const detail::JetShape& shape = cached_shape(orders);
        const std::array<double, 6> seeds{x[0], x[1], xi[0], xi[1], eta[0], eta[1]};
        const detail::Jet j = detail::evaluate_jet(*shared->root(), shape, seeds, dim);
        DerivativeTable table(orders);
        for (std::size_t i = 0; i < table.size(); ++i) table.at_flat(i) = j.coefficient(i) * shape.factorial(i);
        return table;
    };
    if (name.empty()) name = traits.expression;
    auto eval = [shared](const Vec& x, const Vec& xi, const Vec& eta) -> cplx {
        return shared->evaluate(expr::Bindings{x, xi, eta});
    };
    return Symbol(std::move(name), dim, cls, std::move(eval), std::move(traits));
}

// -- seminorms ------------------------------------------------------------

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::bounded: return "bounded";
    case Verdict::growing: return "growing";
    case Verdict::indeterminate: return "indeterminate";
    }
    return "?";
}

bool SeminormReport::all_bounded() const
{
    return std::all_of(entries.begin(), entries.end(), [](const SeminormEntry& e) { return e.verdict == Verdict::bounded; });
}

SeminormReport estimate_seminorms(const Symbol& sigma, const SeminormOptions& opt)
{
    if (opt.max_order < 0 || opt.max_order > 2) throw InvalidInput("seminorm max_order must be in [0, 2]");
    if (opt.samples < 100) throw InvalidInput("seminorm estimation needs at least 100 samples per shell");
    if (opt.max_shell < 0) throw InvalidInput("max_shell must be nonnegative");

    const int n = sigma.dim();
    const SymbolClass cls = sigma.declared_class();

    SeminormReport report;
    report.symbol = sigma.name();
    report.dim = n;
    report.cls = cls;
    report.options = opt;

    const auto idx = multi_indices(n, opt.max_order);
    for (const auto& a : idx)
        for (const auto& b : idx)
            for (const auto& g : idx) {
                SeminormEntry e;
                e.order.alpha = a;
                e.order.beta = b;
                e.order.gamma = g;
                report.entries.push_back(e);
            }

    const int o = opt.max_order;
    const Orders max_orders = n == 1 ? Orders{o, 0, o, 0, o, 0} : Orders{o, o, o, o, o, o};

    const std::size_t shells = static_cast<std::size_t>(opt.max_shell) + 1;
    const std::size_t m = report.entries.size();
    std::vector<std::vector<double>> shell_max(shells, std::vector<double>(m, 0.0));
    std::vector<std::vector<char>> poisoned(shells, std::vector<char>(m, 0));

    DerivativeTable layout(max_orders);
    std::vector<std::size_t> flat(m);
    for (std::size_t i = 0; i < m; ++i) flat[i] = layout.flat_index(report.entries[i].order);

    parallel_for(shells, [&](std::size_t s) {
        std::mt19937_64 rng(mix_seed(opt.seed, s));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int freq_coords = 2 * n;
        for (int i = 0; i < opt.samples; ++i) {
            const double radius = std::ldexp(std::exp2(unit(rng)), static_cast<int>(s));
            std::array<double, 4> f{};
            const int pinned = static_cast<int>(unit(rng) * freq_coords) % freq_coords;
            for (int c = 0; c < freq_coords; ++c) f[c] = (2.0 * unit(rng) - 1.0) * radius;
            f[pinned] = unit(rng) < 0.5 ? -radius : radius;

            Vec x{unit(rng) * opt.period, n == 2 ? unit(rng) * opt.period : 0.0};
            Vec xi{f[0], n == 2 ? f[1] : 0.0};
            Vec eta{n == 2 ? f[2] : f[1], n == 2 ? f[3] : 0.0};

            const DerivativeTable t = sigma.derivatives(x, xi, eta, max_orders);
            const double w = freq_weight(xi, eta);
            for (std::size_t k = 0; k < m; ++k) {
                const DerivOrder& d = report.entries[k].order;
                const double exponent = cls.m + cls.delta * d.x_order() - cls.rho * d.freq_order();
                const double v = std::abs(t.at_flat(flat[k])) * std::pow(w, -exponent);
                if (!std::isfinite(v))
                    poisoned[s][k] = 1;
                else
                    shell_max[s][k] = std::max(shell_max[s][k], v);
            }
        }
    });

    for (std::size_t k = 0; k < m; ++k) {
        SeminormEntry& e = report.entries[k];
        std::vector<double> xs, ys;
        bool bad = false;
        for (std::size_t s = 0; s < shells; ++s) {
            e.shell_max.push_back(shell_max[s][k]);
            e.ratio = std::max(e.ratio, shell_max[s][k]);
            bad = bad || poisoned[s][k];
            if (shell_max[s][k] > 0) {
                xs.push_back(static_cast<double>(s) * std::log(2.0));
                ys.push_back(std::log(shell_max[s][k]));
            }
        }
        if (bad) {
            e.verdict = Verdict::indeterminate;
            continue;
        }
        // Entries at roundoff level carry no growth information.
        e.slope = e.ratio > 1e-13 ? fit_slope(xs, ys) : 0.0;
        e.verdict = e.slope > 0.2 ? Verdict::growing : Verdict::bounded;
    }
    return report;
}

void write_csv(std::ostream& out, const SeminormReport& report)
{
    auto mi = [&](const std::array<int, 2>& a) {
        return report.dim == 1 ? std::to_string(a[0]) : std::to_string(a[0]) + " " + std::to_string(a[1]);
    };
    out << "alpha,beta,gamma,ratio,slope,verdict\n";
    out.precision(17);
    for (const auto& e : report.entries)
        out << mi(e.order.alpha) << ',' << mi(e.order.beta) << ',' << mi(e.order.gamma) << ',' << e.ratio << ','
            << e.slope << ',' << to_string(e.verdict) << '\n';
}

// -- quadrature -----------------------------------------------------------

QuadratureRule gauss_legendre(int points)
{
    if (points < 1) throw InvalidInput("quadrature needs at least one node");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(points); it != cache.end()) return it->second;
    }

    QuadratureRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    for (int i = 0; i < points; ++i) {
        double z = std::cos(pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= points; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (points == 1) p0 = 1.0;
            dp = points * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Map from [-1, 1] to [0, 1].
        rule.nodes[i] = 0.5 * (1.0 - z);
        rule.weights[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }

    std::lock_guard lock(mutex);
    cache.emplace(points, rule);
    return rule;
}

// -- FTC decomposition ----------------------------------------------------

namespace {

struct Component {
    Symbol parent;
    int coord; // 2 + j for xi_j, 4 + j for eta_j
    QuadratureRule rule;

    // Dyadic panels [0, 2^-(P-1)], ..., [1/4, 1/2], [1/2, 1].
    int panels(const Vec& xi, const Vec& eta) const
    {
        const double w = freq_weight(xi, eta);
        return 1 + static_cast<int>(std::ceil(std::log2(w)));
    }

    template <class F>
    void for_each_node(const Vec& xi, const Vec& eta, F&& f) const
    {
        const int P = panels(xi, eta);
        for (int p = 0; p < P; ++p) {
            const double lo = p == 0 ? 0.0 : std::ldexp(1.0, p - P);
            const double hi = std::ldexp(1.0, p + 1 - P);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                f(lo + (hi - lo) * rule.nodes[i], (hi - lo) * rule.weights[i]);
        }
    }

    cplx value(const Vec& x, const Vec& xi, const Vec& eta) const
    {
        Orders o{};
        o[coord] = 1;
        DerivOrder d = from_orders(o);
        cplx acc = 0.0;
        for_each_node(xi, eta, [&](double t, double w) {
            const Vec txi{t * xi[0], t * xi[1]}, teta{t * eta[0], t * eta[1]};
            acc += w * parent.derivatives(x, txi, teta, o).at(d);
        });
        return acc;
    }

    DerivativeTable table(const Vec& x, const Vec& xi, const Vec& eta, const Orders& orders) const
    {
        Orders shifted = orders;
        ++shifted[coord];
        DerivativeTable out(orders);
        DerivativeTable probe(shifted);
        std::vector<std::size_t> source(out.size());
        std::vector<int> freq_order(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            Orders k = to_orders(out.order_of(i));
            freq_order[i] = k[2] + k[3] + k[4] + k[5];
            ++k[coord];
            source[i] = probe.flat_index(from_orders(k));
        }
        // Differentiating under the integral: d^beta d^gamma of f(t xi, t eta)
        // brings out t^(|beta| + |gamma|).
        for_each_node(xi, eta, [&](double t, double w) {
            const Vec txi{t * xi[0], t * xi[1]}, teta{t * eta[0], t * eta[1]};
            const DerivativeTable p = parent.derivatives(x, txi, teta, shifted);
            for (std::size_t i = 0; i < out.size(); ++i)
                out.at_flat(i) += w * std::pow(t, freq_order[i]) * p.at_flat(source[i]);
        });
        return out;
    }
};

Symbol make_component(const Symbol& sigma, int coord, int quad_points, const std::string& name)
{
    auto c = std::make_shared<const Component>(Component{sigma, coord, gauss_legendre(quad_points)});
    Symbol::Traits traits;
    traits.x_independent = sigma.x_independent();
    traits.table = [c](const Vec& x, const Vec& xi, const Vec& eta, const Orders& o) { return c->table(x, xi, eta, o); };
    const SymbolClass parent = sigma.declared_class();
    return Symbol(name, sigma.dim(), {parent.m - 1.0, parent.rho, parent.delta},
                  [c](const Vec& x, const Vec& xi, const Vec& eta) { return c->value(x, xi, eta); }, std::move(traits));
}

} // namespace

std::vector<Symbol> ftc_decompose(const Symbol& sigma, int quad_points, double period)
{
    if (quad_points < 16) throw InvalidInput("ftc_decompose needs at least 16 quadrature points");
    const int n = sigma.dim();

    std::vector<Symbol> out;
    std::vector<Symbol> doubled;
    for (int block = 0; block < 2; ++block)
        for (int j = 0; j < n; ++j) {
            const int coord = (block == 0 ? 2 : 4) + j;
            std::string name = sigma.name() + (block == 0 ? ".sigma" : ".tsigma") + std::to_string(j + 1);
            out.push_back(make_component(sigma, coord, quad_points, name));
            doubled.push_back(make_component(sigma, coord, 2 * quad_points, name));
        }

    // Convergence guard on a fixed probe set spanning the frequency range.
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int probe = 0; probe < 24; ++probe) {
        const int s = probe % 13;
        auto coord = [&] { return (unit(rng) < 0.5 ? -1.0 : 1.0) * std::ldexp(std::exp2(unit(rng)), s) * unit(rng); };
        const Vec x{unit(rng) * period, n == 2 ? unit(rng) * period : 0.0};
        const Vec xi{coord(), n == 2 ? coord() : 0.0};
        const Vec eta{coord(), n == 2 ? coord() : 0.0};
        for (std::size_t c = 0; c < out.size(); ++c) {
            const cplx a = out[c](x, xi, eta);
            const cplx b = doubled[c](x, xi, eta);
            if (std::abs(a - b) > 1e-8 * std::max(1.0, std::abs(b))) {
                std::ostringstream msg;
                msg << "ftc_decompose: quadrature for " << out[c].name() << " did not converge at x=" << x[0]
                    << " xi=" << xi[0] << " eta=" << eta[0];
                throw ToleranceError(msg.str(), std::abs(a), std::abs(b));
            }
        }
    }
    return out;
}

double ftc_reconstruction_error(const Symbol& sigma, const std::vector<Symbol>& pieces, int probes, double max_freq,
                                std::uint64_t seed, double period)
{
    const int n = sigma.dim();
    if (pieces.size() != std::size_t(2 * n)) throw InvalidInput("ftc_reconstruction_error: expected 2n pieces");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto freq = [&] {
        const double r = std::pow(max_freq, 0.5 * (u(rng) + 1.0));
        return u(rng) * r;
    };
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        Vec x{}, xi{}, eta{};
        for (int j = 0; j < n; ++j) {
            x[j] = (u(rng) + 1.0) * period / 2;
            xi[j] = freq();
            eta[j] = freq();
        }
        const cplx lhs = sigma(x, xi, eta) - sigma(x, {}, {});
        cplx rhs = 0.0;
        for (int j = 0; j < n; ++j)
            rhs += xi[j] * pieces[std::size_t(j)](x, xi, eta) + eta[j] * pieces[std::size_t(n + j)](x, xi, eta);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return worst;
}

} // namespace bilop
