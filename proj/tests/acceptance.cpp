// Acceptance run: one PASS/FAIL line per criterion. Exit code 0 only if every
// criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bilop/analysis.hpp"
#include "bilop/catalog.hpp"
#include "bilop/expr.hpp"
#include "bilop/kernel.hpp"
#include "bilop/operator.hpp"
#include "bilop/symbol.hpp"
#include "oracles.hpp"

using namespace bilop;

namespace {

constexpr double L = 2.0 * pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

double sup_diff(const GridFunction& a, const GridFunction& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<int> range(int lo, int hi)
{
    std::vector<int> k;
    for (int i = lo; i <= hi; ++i) k.push_back(i);
    return k;
}

Outcome transpose_algebra()
{
    double worst = 0.0;
    for (const auto& entry : symbol_catalog())
        for (int n : {16, 32}) {
            const Grid g(1, n);
            const OperatorPtr T = make_operator(catalog_symbol(entry.name), g);
            for (const auto& c : verify_transpose_identities(T, make_multiplier("sin", g), 20, 11))
                worst = std::max(worst, c.residual);
        }
    return {worst <= 1e-10, fmt("worst residual %.2e over %g symbols, N in {16, 32}", worst,
                                double(symbol_catalog().size()))};
}

Outcome ftc_decomposition()
{
    double worst = 0.0;
    bool bounded = true;
    std::string growing;
    SeminormOptions opt;
    opt.max_order = 0;
    opt.max_shell = 12;
    for (const auto& entry : symbol_catalog()) {
        const Symbol s = catalog_symbol(entry.name);
        const auto pieces = ftc_decompose(s);
        worst = std::max(worst, ftc_reconstruction_error(s, pieces, 200));
        // The pieces of an order-one symbol lie in BS^0. For lower orders the
        // t-integral adds a log factor and the pieces miss order m - 1.
        if (!entry.order_one) continue;
        for (const Symbol& p : pieces)
            if (!estimate_seminorms(p, opt).all_bounded()) {
                bounded = false;
                growing += " " + p.name();
            }
    }
    return {worst <= 1e-8 && bounded,
            fmt("reconstruction error %.2e; pieces of order-one symbols ", worst) +
                (bounded ? "all bounded" : "growing:" + growing)};
}

Outcome kernel_decay()
{
    const Symbol s = catalog_symbol("sqrt1");
    const DecayFitReport r = fit_kernel_decay(s, {});
    const DecayFitReport d = fit_kernel_decay(s, {1, 0, 0});
    const bool ok = r.exponent <= -3.0 + 0.3 && r.r_squared >= 0.9 && r.stability < 2.0 &&
                    d.exponent <= -4.0 + 0.3 && d.r_squared >= 0.9;
    return {ok, fmt("K: exponent %.3f R^2 %.4f stability %.3f; d_x K: exponent %.3f", r.exponent, r.r_squared,
                    r.stability, d.exponent) +
                    fmt(" R^2 %.4f", d.r_squared)};
}

Outcome cz_certification()
{
    const Grid g(1, 256);
    const Symbol s = catalog_symbol("sqrt1");
    const CzReport r = certify_cz_commutator_kernel(s, make_multiplier("sin", g), 1);
    const CzReport z = certify_cz_commutator_kernel(s, make_multiplier("const", g), 1);
    bool zero = true;
    for (const auto& o : z.octaves) zero = zero && o.size_sup == 0.0 && o.gradient_sup == 0.0;
    const bool ok = r.size_variation < 2.0 && r.gradient_variation < 2.0 && zero;
    return {ok, fmt("a = sin: size variation %.3f, gradient variation %.3f; a = const ", r.size_variation,
                    r.gradient_variation) +
                    (zero ? "identically 0" : "nonzero")};
}

Outcome smoothing_contrast()
{
    const Grid g(1, 256);
    const OperatorPtr T = make_operator(catalog_symbol("sqrt1"), g);
    const GridFunction a = make_multiplier("sin", g);
    const HolderTriple e{4.0, 4.0};
    const auto ks = range(1, 64);
    const NormScanReport base = norm_scan(T, e, "modulated-bump", ks);
    const NormScanReport c1 = norm_scan(commutator(T, 1, a), e, "modulated-bump", ks);
    const NormScanReport c2 = norm_scan(commutator(T, 2, a), e, "modulated-bump", ks);
    const bool ok = base.slope >= 0.8 && c1.slope <= 0.2 && c1.spread < 4.0 && c2.slope <= 0.2 && c2.spread < 4.0;
    return {ok, fmt("T slope %.3f; [T,a]_1 slope %.3f spread %.3f; ", base.slope, c1.slope, c1.spread) +
                    fmt("[T,a]_2 slope %.3f spread %.3f", c2.slope, c2.spread)};
}

Outcome t1_conditions()
{
    const Grid g(1, 64);
    const GridFunction a = make_multiplier("sin", g);
    const T1Report r = check_t1_conditions(catalog_symbol("sqrt1"), a);
    double residual = 0.0;
    bool bmo_ok = true;
    for (const auto& s : r.slots) {
        residual = std::max(residual, s.residual);
        for (const BmoReport* b : {&s.bmo_direct, &s.bmo_transpose1, &s.bmo_transpose2})
            bmo_ok = bmo_ok && std::isfinite(b->value) && bmo_plateaued(*b);
    }
    const T1Report xi = check_t1_conditions(catalog_symbol("xi"), a);
    const GridFunction expected = GridFunction::sample(g, [](const Vec& x) { return cplx(0.0, -std::cos(x[0])); });
    const double closed = sup_diff(xi.slots[0].direct, expected);
    const bool ok = r.decomposition_available && r.slots.size() == 2 && residual <= 1e-8 && closed <= 1e-10 && bmo_ok;
    return {ok, fmt("route residual %.2e; sigma = xi vs -i cos x %.2e; BMO ", residual, closed) +
                    (bmo_ok ? "finite and plateaued" : "not plateaued")};
}

Outcome weak_boundedness()
{
    const Grid g(1, 2048);
    const std::vector<double> ts{L / 16, L / 32, L / 64, L / 128};
    const OperatorPtr C = commutator(make_operator(catalog_symbol("sqrt1"), g), 1, make_multiplier("sin", g));
    const WbpReport common = wbp_scan(C, 2, ts, WbpConfig::common_center);
    const WbpReport separated = wbp_scan(C, 2, ts, WbpConfig::separated);
    const WbpReport control = wbp_scan(make_operator(catalog_symbol("one"), g), 2, ts, WbpConfig::common_center);
    const bool ok = common.variation < 4.0 && separated.variation < 4.0 && control.variation - 1.0 <= 1e-3;
    return {ok, fmt("common-center variation %.3f, separated %.3f, sigma = 1 control %.2e", common.variation,
                    separated.variation, control.variation - 1.0)};
}

Outcome kato_ponce()
{
    const Grid g(1, 256);
    double sup = 0.0, slope = -INFINITY;
    bool ok = true;
    for (double alpha : {0.5, 1.0})
        for (const HolderTriple& e : {HolderTriple{4.0, 4.0}, HolderTriple{2.0, 2.0}}) {
            const KatoPonceReport r = kato_ponce_check(alpha, e, "modulated-bump", range(1, 64), g);
            sup = std::max(sup, r.sup);
            slope = std::max(slope, r.slope);
            ok = ok && r.sup < 10.0 && r.slope < 0.2;
        }
    return {ok, fmt("largest ratio %.3f, largest slope %.3f", sup, slope)};
}

Outcome compactness()
{
    const Grid g(1, 256);
    const OperatorPtr C = commutator(make_operator(catalog_symbol("sqrt1"), g), 1, make_multiplier("sin", g));
    CompactnessOptions opt;
    opt.family_size = 50;
    const CompactnessComparison c = compare_compactness(commutator(C, 1, make_multiplier("bump", g)),
                                                        commutator(C, 1, make_multiplier("step", g)), opt);
    std::ostringstream d;
    d << "covering at 0.2: " << c.smooth.covering_at(0.2) << " vs " << c.rough.covering_at(0.2)
      << "; curve below: " << (c.curve_below ? "yes" : "no") << "; verdict \"" << c.verdict << "\"";
    return {c.curve_below && c.covering_halved && c.verdict == "consistent with compactness", d.str()};
}

Outcome converse()
{
    const ConverseReport r = converse_check(make_multiplier("sin", Grid(1, 256)));
    return {r.relative_gap < 0.2, fmt("operator estimate %.4f, gradient sup %.4f, gap %.2e", r.operator_estimate,
                                      r.gradient_estimate, r.relative_gap)};
}

Outcome infrastructure()
{
    double round_trip = 0.0, parseval = 0.0, apply_err = 0.0;
    for (int dim : {1, 2})
        for (int n : {8, 32, 64}) {
            const Grid g(dim, n, 5.0);
            const GridFunction f = random_function(g, 100 + n + dim);
            const double scale = lp_norm(f, INFINITY);
            round_trip = std::max(round_trip, sup_diff(f, fft_inverse(fft_forward(f))) / scale);
            const auto fh = fft_forward(f);
            const auto slow = oracles::naive_forward(f);
            double spec = 0.0, dft = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                spec += std::norm(fh[k]);
                dft = std::max(dft, std::abs(fh[k] - slow[k]));
            }
            spec /= std::pow(g.period(), dim);
            const double space = std::pow(lp_norm(f, 2.0), 2);
            parseval = std::max(parseval, std::abs(space - spec) / space);
            round_trip = std::max(round_trip, dft / (scale * std::pow(g.period(), dim)));
        }

    const Grid g8(1, 8);
    const GridFunction f = random_function(g8, 5), h = random_function(g8, 6);
    for (const auto& entry : symbol_catalog()) {
        const Symbol s = catalog_symbol(entry.name);
        const GridFunction ref = oracles::brute_force_apply(s, f, h);
        const double scale = std::max(1.0, lp_norm(ref, INFINITY));
        for (Strategy st : {Strategy::automatic, Strategy::direct})
            apply_err = std::max(apply_err, sup_diff(make_operator(s, g8, st)->apply(f, h), ref) / scale);
    }

    int parsed = 0;
    for (const std::string& src : oracles::parser_corpus()) {
        const expr::Expr e = expr::Expr::parse(src);
        if (e.to_string() == oracles::strip_spaces(src) &&
            expr::structurally_equal(expr::Expr::parse(e.to_string()).root(), e.root()))
            ++parsed;
    }

    const Grid g64(1, 64);
    const bool same_input = sup_diff(random_function(g64, 9), random_function(g64, 9)) == 0.0;
    const OperatorPtr U = make_operator(catalog_symbol("sqrt1"), g64);
    const NormScanReport s1 = norm_scan(U, {4.0, 4.0}, "random-trig", range(1, 16), 3);
    const NormScanReport s2 = norm_scan(U, {4.0, 4.0}, "random-trig", range(1, 16), 3);
    bool same_scan = s1.slope == s2.slope;
    for (std::size_t i = 0; i < s1.rows.size(); ++i) same_scan = same_scan && s1.rows[i].ratio == s2.rows[i].ratio;
    const bool deterministic = same_input && same_scan;

    const bool ok = round_trip <= 1e-12 && parseval <= 1e-10 && apply_err <= 1e-12 &&
                    parsed == int(oracles::parser_corpus().size()) && parsed == 50 && deterministic;
    std::ostringstream d;
    d << fmt("fft %.2e, Parseval %.2e, N = 8 apply %.2e; ", round_trip, parseval, apply_err) << "corpus " << parsed
      << "/50; " << (deterministic ? "deterministic" : "not deterministic");
    return {ok, d.str()};
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria{
        {"transpose algebra", transpose_algebra, 30.0},
        {"FTC decomposition", ftc_decomposition, 60.0},
        {"kernel decay", kernel_decay, 300.0},
        {"commutator kernel size and gradient bounds", cz_certification, 300.0},
        {"smoothing contrast", smoothing_contrast, 600.0},
        {"T(1) conditions", t1_conditions, 0.0},
        {"weak boundedness", weak_boundedness, 0.0},
        {"Kato-Ponce", kato_ponce, 0.0},
        {"compactness probe", compactness, 0.0},
        {"converse Lipschitz estimate", converse, 0.0},
        {"infrastructure", infrastructure, 0.0},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criteria[i].budget_s > 0.0 && secs >= criteria[i].budget_s) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", criteria[i].budget_s);
        }
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
