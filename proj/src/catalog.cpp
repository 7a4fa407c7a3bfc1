#include "bilop/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace bilop {
namespace {

std::string number(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// h(s) = exp(-1/s) for s > 0, the building block of all smooth bumps here.
double h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

struct Names {
    std::string x, xi, eta, xi_norm2, eta_norm2, xi_abs, eta_abs;
};

Names names(int dim)
{
    if (dim == 1) return {"x", "xi", "eta", "xi^2", "eta^2", "abs(xi)", "abs(eta)"};
    return {"x1", "xi1", "eta1", "xi1^2+xi2^2", "eta1^2+eta2^2", "sqrt(xi1^2+xi2^2)", "sqrt(eta1^2+eta2^2)"};
}

std::string theta_expr(int dim, double period)
{
    return "(1+0.5*cos(2*pi*" + names(dim).x + "/" + number(period) + "))";
}

} // namespace

const std::vector<SymbolEntry>& symbol_catalog()
{
    static const std::vector<SymbolEntry> entries = [] {
        std::vector<SymbolEntry> v{
            {"cm0", "xi.eta/(1+|xi|^2+|eta|^2), Coifman-Meyer type", {0, 1, 0}, false, false},
            {"eta", "eta_1", {1, 1, 0}, true, false},
            {"one", "constant 1", {0, 1, 0}, false, false},
            {"order1_as0", "1+|xi|+|eta| declared with order 0 (order is 1)", {0, 1, 0}, false, true},
            {"sqrt1", "sqrt(1+|xi|^2+|eta|^2)", {1, 1, 0}, true, false},
            {"theta_sqrt1", "theta(x) sqrt(1+|xi|^2+|eta|^2)", {1, 1, 0}, true, false},
            {"theta_xi", "theta(x) xi_1", {1, 1, 0}, true, false},
            {"xi", "xi_1", {1, 1, 0}, true, false},
            {"xi_eta", "xi_1 eta_1 declared with order 1 (order is 2)", {1, 1, 0}, false, true},
        };
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
        return v;
    }();
    return entries;
}

bool is_catalog_symbol(const std::string& name)
{
    const auto& c = symbol_catalog();
    return std::any_of(c.begin(), c.end(), [&](const SymbolEntry& e) { return e.name == name; });
}

Symbol catalog_symbol(const std::string& name, int dim, double period)
{
    if (dim != 1 && dim != 2) throw InvalidInput("symbol dimension must be 1 or 2");
    if (!(period > 0.0)) throw InvalidInput("period must be positive");
    const auto& c = symbol_catalog();
    const auto it = std::find_if(c.begin(), c.end(), [&](const SymbolEntry& e) { return e.name == name; });
    if (it == c.end()) throw InvalidInput("unknown catalog symbol '" + name + "'");

    const Names n = names(dim);
    const std::string root = "sqrt(1+" + n.xi_norm2 + "+" + n.eta_norm2 + ")";
    std::string text;
    if (name == "one")
        text = "1";
    else if (name == "xi")
        text = n.xi;
    else if (name == "eta")
        text = n.eta;
    else if (name == "sqrt1")
        text = root;
    else if (name == "theta_sqrt1")
        text = theta_expr(dim, period) + "*" + root;
    else if (name == "theta_xi")
        text = theta_expr(dim, period) + "*" + n.xi;
    else if (name == "cm0")
        text = n.xi + "*" + n.eta + "/(1+" + n.xi_norm2 + "+" + n.eta_norm2 + ")";
    else if (name == "xi_eta")
        text = n.xi + "*" + n.eta;
    else if (name == "order1_as0")
        text = "1+" + n.xi_abs + "+" + n.eta_abs;

    Symbol s = symbol_from_expr(expr::Expr::parse(text), it->cls, dim, name);

    const auto one = [](const Vec&) -> cplx { return 1.0; };
    const auto first = [](const Vec& v) -> cplx { return v[0]; };
    const double L = period;
    const auto theta = [L](const Vec& x) -> cplx { return 1.0 + 0.5 * std::cos(2.0 * pi * x[0] / L); };
    if (name == "one") return s.with_factors({one, one, one});
    if (name == "xi") return s.with_factors({one, first, one});
    if (name == "eta") return s.with_factors({one, one, first});
    if (name == "theta_xi") return s.with_factors({theta, first, one});
    return s;
}

const std::vector<MultiplierEntry>& multiplier_catalog()
{
    static const std::vector<MultiplierEntry> entries{
        {"bump", "smooth bump supported in [L/4, 3L/4], max 1 (CMO-like)"},
        {"const", "constant 1"},
        {"cos", "cos(2 pi x / L)"},
        {"sawtooth", "triangle wave of amplitude 1 with mollified corners"},
        {"sin", "sin(2 pi x / L)"},
        {"step", "+1 on [0, L/2), -1 on [L/2, L) (BMO-rough)"},
    };
    return entries;
}

bool is_catalog_multiplier(const std::string& name)
{
    const auto& c = multiplier_catalog();
    return std::any_of(c.begin(), c.end(), [&](const MultiplierEntry& e) { return e.name == name; });
}

GridFunction make_multiplier(const std::string& spec, const Grid& grid)
{
    const double L = grid.period();
    std::function<double(double)> f;
    if (spec == "const") {
        f = [](double) { return 1.0; };
    } else if (spec == "sin") {
        f = [L](double x) { return std::sin(2.0 * pi * x / L); };
    } else if (spec == "cos") {
        f = [L](double x) { return std::cos(2.0 * pi * x / L); };
    } else if (spec == "step") {
        f = [L](double x) { return x < L / 2 ? 1.0 : -1.0; };
    } else if (spec == "bump") {
        f = [L](double x) {
            const double s = (x - L / 2) / (L / 4);
            return h(1.0 - s * s) / std::exp(-1.0);
        };
    } else if (spec == "sawtooth") {
        // Fourier series of the unit triangle wave, damped by a Gaussian so
        // the corners are smooth at scale ~ L/125.
        f = [L](double x) {
            const double eps = 0.05;
            double acc = 0.0;
            for (int k = 1; k <= 63; k += 2) {
                const double sign = ((k - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
                acc += sign * std::sin(k * 2.0 * pi * x / L) / (k * k) * std::exp(-0.5 * (k * eps) * (k * eps));
            }
            return 8.0 / (pi * pi) * acc;
        };
    }

    if (f) return GridFunction::sample(grid, [&](const Vec& x) -> cplx { return f(x[0]); });

    const expr::Expr e = expr::Expr::parse(spec);
    for (expr::Variable v : e.free_variables()) {
        const bool ok = grid.dim() == 1 ? v == expr::Variable::x : (v == expr::Variable::x1 || v == expr::Variable::x2);
        if (!ok)
            throw InvalidInput("multiplier expression may only use " + std::string(grid.dim() == 1 ? "x" : "x1, x2") +
                               ", found '" + std::string(expr::name_of(v)) + "'");
    }
    GridFunction out = GridFunction::sample(grid, [&](const Vec& x) -> cplx { return e.evaluate({x, {}, {}}); });
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!std::isfinite(out[i].real()))
            throw InvalidInput("multiplier expression '" + spec + "' is not finite at node " + std::to_string(i));
    return out;
}

const std::vector<MultiplierEntry>& family_catalog()
{
    static const std::vector<MultiplierEntry> entries{
        {"modulated-bump", "f_k = exp(i k x) phi(x), phi a smooth bump of width L/2"},
        {"plane-wave", "f_k = exp(i k x)"},
        {"random-trig", "random trigonometric polynomial with frequencies near k"},
    };
    return entries;
}

std::string catalog_listing()
{
    std::ostringstream out;
    out << "symbols:\n";
    for (const auto& e : symbol_catalog())
        out << "  " << e.name << " (m=" << number(e.cls.m) << ", rho=" << number(e.cls.rho)
            << ", delta=" << number(e.cls.delta) << ")  " << e.description << '\n';
    out << "multipliers:\n";
    for (const auto& e : multiplier_catalog()) out << "  " << e.name << "  " << e.description << '\n';
    out << "families:\n";
    for (const auto& e : family_catalog()) out << "  " << e.name << "  " << e.description << '\n';
    return out.str();
}

} // namespace bilop
