#include <doctest.h>

#include <cmath>
#include <random>

#include "bilop/analysis.hpp"
#include "bilop/catalog.hpp"
#include "bilop/expr.hpp"

using namespace bilop;

namespace {

const double L = 2.0 * pi;

std::vector<int> range(int lo, int hi)
{
    std::vector<int> v;
    for (int k = lo; k <= hi; ++k) v.push_back(k);
    return v;
}

double sup_diff(const GridFunction& a, const GridFunction& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("log-log slope recovers a power law")
{
    std::vector<double> x, y;
    for (int i = 1; i <= 10; ++i) {
        x.push_back(i);
        y.push_back(3.0 * std::pow(i, -1.7));
    }
    CHECK(log_log_slope(x, y) == doctest::Approx(-1.7).epsilon(1e-12));
    CHECK(log_log_slope({1.0}, {2.0}) == 0.0);
}

TEST_CASE("gradient sup of sin is 1")
{
    const Grid g(1, 64);
    CHECK(gradient_sup(make_multiplier("sin", g)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gradient_sup(make_multiplier("const", g)) < 1e-13);
}

TEST_CASE("bump legality: support and derivative bounds at 200 probes")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int dim : {1, 2})
        for (const auto& [offset, inner] : {std::pair{Vec{0.0, 0.0}, 1.0}, std::pair{Vec{0.2, 0.0}, 0.8}}) {
            const Vec x0{1.0, 2.0};
            const double t = 0.3;
            const BumpFunction phi(dim, 2, x0, t, L, offset, inner);
            double largest = 0.0;
            for (int i = 0; i < 200; ++i) {
                const Vec s{u(rng), dim == 2 ? u(rng) : 0.0};
                const double r = std::hypot(s[0], s[1]);
                const Vec x{x0[0] + t * s[0], x0[1] + t * s[1]};
                if (r >= 1.0) CHECK(phi(x) == 0.0);
                for (int a1 = 0; a1 <= 2; ++a1)
                    for (int a2 = 0; a2 <= (dim == 2 ? 2 - a1 : 0); ++a2) {
                        const double d = std::abs(phi.profile_derivative({a1, a2}, s));
                        CHECK(d <= 1.0);
                        largest = std::max(largest, d);
                    }
            }
            // The normalization is tight: some derivative comes close to 1.
            const Vec peak{0.0, 0.0};
            double at_center = 0.0;
            for (int a1 = 0; a1 <= 2; ++a1) at_center = std::max(at_center, std::abs(phi.profile_derivative({a1, 0}, peak)));
            CHECK(std::max(largest, at_center) > 0.3);
        }
}

TEST_CASE("bump derivatives match central differences")
{
    const BumpFunction phi(1, 2, {0.0, 0.0}, 1.0, L, {0.2, 0.0}, 0.8);
    const double hstep = 1e-4;
    for (double s : {-0.5, 0.1, 0.45, 0.8}) {
        const double fd1 = (phi.profile({s + hstep, 0}) - phi.profile({s - hstep, 0})) / (2 * hstep);
        const double fd2 =
            (phi.profile({s + hstep, 0}) - 2 * phi.profile({s, 0}) + phi.profile({s - hstep, 0})) / (hstep * hstep);
        CHECK(phi.profile_derivative({1, 0}, {s, 0}) == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(phi.profile_derivative({2, 0}, {s, 0}) == doctest::Approx(fd2).epsilon(1e-5));
    }
}

TEST_CASE("bump L^p norms scale like t^(n/p - |alpha|)")
{
    const Grid g(1, 1024);
    const std::vector<double> ts{L / 8, L / 16, L / 32, L / 64};
    for (double p : {1.0, 2.0, 4.0})
        for (int alpha = 0; alpha <= 2; ++alpha) {
            std::vector<double> norms;
            for (double t : ts) {
                GridFunction f = BumpFunction(1, 2, {L / 2, 0}, t, L).sample(g);
                for (int i = 0; i < alpha; ++i) f = spectral_derivative(f);
                norms.push_back(lp_norm(f, p));
            }
            CHECK(std::abs(log_log_slope(ts, norms) - (1.0 / p - alpha)) < 0.1);
        }
}

TEST_CASE("bump preconditions")
{
    CHECK_THROWS_AS(BumpFunction(1, 2, {0, 0}, L / 3, L), DomainError);
    CHECK_THROWS_AS(BumpFunction(3, 2, {0, 0}, 0.1, L), InvalidInput);
    CHECK_THROWS_AS(BumpFunction(1, 2, {0, 0}, 0.1, L, {0.5, 0}, 0.8), InvalidInput);
}

TEST_CASE("localized Lipschitz bound")
{
    const Grid g(1, 512);
    for (double x0 : {0.3, 1.7, 4.0}) {
        const GridFunction a =
            GridFunction::sample(g, [x0](const Vec& x) -> cplx { return std::sin(x[0]) - std::sin(x0); });
        const double grad = gradient_sup(a);
        for (double t : {0.05, 0.2, 0.8}) {
            double m = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j)
                if (std::abs(g.wrap(g.node(j)[0] - x0)) <= t) m = std::max(m, std::abs(a[j]));
            CHECK(m <= t * grad * 1.05);
        }
    }
}

TEST_CASE("BMO of constants and of the half-period step")
{
    const Grid g(1, 16);
    const BmoReport c = bmo_norm(GridFunction::constant(g, 3.0), 4);
    CHECK(c.value == 0.0);

    // Enumerated by hand: every window of side 16, 8, 4 or 2 nodes that
    // straddles a jump holds equally many +1 and -1, so its oscillation is 1;
    // single nodes have none.
    const BmoReport s = bmo_norm(make_multiplier("step", g), 4);
    REQUIRE(s.scale_sup.size() == 5);
    CHECK(s.scale_sup[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.scale_sup[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.scale_sup[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.scale_sup[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.scale_sup[4] == 0.0);
    CHECK(s.value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bmo_plateaued(s));

    CHECK_THROWS_AS(bmo_norm(make_multiplier("step", g), 5), InvalidInput);
}

TEST_CASE("BMO of sin plateaus at 2/pi")
{
    const Grid g(1, 256);
    const BmoReport r = bmo_norm(make_multiplier("sin", g), 7);
    // The whole period has mean 0 and mean |sin| = 2/pi; no smaller window does better.
    CHECK(r.value == doctest::Approx(2.0 / pi).epsilon(1e-3));
    CHECK(r.value <= 2.0);
    CHECK(r.cumulative[3] == r.value);
}

TEST_CASE("BMO is monotone in depth and handles 2D")
{
    const Grid g(1, 64);
    const GridFunction f = random_function(g, 3);
    double previous = 0.0;
    for (int s = 0; s <= 6; ++s) {
        const double v = bmo_norm(f, s).value;
        CHECK(v >= previous);
        previous = v;
    }

    const Grid g2(2, 16);
    CHECK(bmo_norm(GridFunction::constant(g2, 1.0), 3).value == 0.0);
    const GridFunction step2 = GridFunction::sample(g2, [](const Vec& x) -> cplx { return x[0] < pi ? 1.0 : -1.0; });
    CHECK(bmo_norm(step2, 3).value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("T(1) conditions: closed forms")
{
    const Grid g(1, 64);
    const GridFunction a = make_multiplier("sin", g);

    const T1Report one = check_t1_conditions(catalog_symbol("one"), a);
    CHECK(one.verdict == "PASS");
    for (const auto& s : one.slots) {
        CHECK(lp_norm(s.direct, 2.0) < 1e-13);
        CHECK(s.bmo_direct.value < 1e-13);
    }

    const T1Report xi = check_t1_conditions(catalog_symbol("xi"), a);
    CHECK(xi.verdict == "PASS");
    const GridFunction expected = GridFunction::sample(g, [](const Vec& x) { return cplx(0.0, -std::cos(x[0])); });
    CHECK(sup_diff(xi.slots[0].direct, expected) < 1e-10);
    CHECK(std::abs(xi.slots[0].bmo_direct.value - bmo_norm(expected, xi.slots[0].bmo_direct.s_max).value) < 1e-12);
}

TEST_CASE("T(1) conditions: route agreement for sqrt1")
{
    const Grid g(1, 64);
    const T1Report r = check_t1_conditions(catalog_symbol("sqrt1"), make_multiplier("sin", g));
    CHECK(r.decomposition_available);
    CHECK(r.verdict == "PASS");
    for (const auto& s : r.slots) {
        CHECK(s.residual <= 1e-8);
        CHECK(std::isfinite(s.bmo_transpose1.value));
        CHECK(bmo_plateaued(s.bmo_direct));
    }
}

TEST_CASE("T(1) conditions without a decomposition report partially")
{
    const Grid g(1, 16);
    const Symbol kink = symbol_from_expr(expr::Expr::parse("abs(xi-0.37)"), {1, 1, 0}, 1);
    const T1Report r = check_t1_conditions(kink, make_multiplier("sin", g));
    CHECK_FALSE(r.decomposition_available);
    CHECK(r.verdict == "PARTIAL");
    CHECK_FALSE(r.slots[0].decomposed.has_value());
}

TEST_CASE("WBP with sigma = 1 matches the direct triple integral")
{
    const Grid g(1, 2048);
    const std::vector<double> ts{L / 16, L / 32, L / 64, L / 128};
    const WbpReport r = wbp_scan(make_operator(catalog_symbol("one"), g), 2, ts, WbpConfig::common_center);
    for (const auto& row : r.rows) {
        const GridFunction p1 = BumpFunction(1, 2, {L / 2, 0}, row.t, L, {0.2, 0}, 0.8).sample(g);
        const GridFunction p2 = BumpFunction(1, 2, {L / 2, 0}, row.t, L).sample(g);
        CHECK(row.pairing == doctest::Approx(std::abs(pairing(p1 * p2, p2))).epsilon(1e-12));
    }
    CHECK(r.variation - 1.0 <= 1e-3);
    CHECK(r.verdict == "PASS");
}

TEST_CASE("WBP scaling of a commutator and of the base operator")
{
    const Grid g(1, 1024);
    const std::vector<double> ts{L / 16, L / 32, L / 64, L / 128};
    const OperatorPtr T = make_operator(catalog_symbol("sqrt1"), g);
    const OperatorPtr C = commutator(T, 1, make_multiplier("sin", g));
    CHECK(wbp_scan(C, 2, ts, WbpConfig::common_center).verdict == "PASS");
    CHECK(wbp_scan(C, 2, ts, WbpConfig::separated).verdict == "PASS");
    // The order-one base operator pairs like t^0 when separated.
    CHECK(wbp_scan(T, 2, ts, WbpConfig::separated).variation > 4.0);
}

TEST_CASE("WBP preconditions")
{
    const Grid g(1, 256);
    const OperatorPtr T = make_operator(catalog_symbol("one"), g);
    CHECK_THROWS_AS(wbp_scan(T, 1, {L / 8, L / 64}, WbpConfig::common_center), InvalidInput);
    CHECK_THROWS_AS(wbp_scan(T, 2, {L / 4, L / 64}, WbpConfig::common_center), DomainError);
    CHECK_THROWS_AS(wbp_scan(T, 2, {L / 8, L / 16}, WbpConfig::common_center), InvalidInput);
    CHECK_THROWS_AS(wbp_config_from_string("sideways"), InvalidInput);
}

TEST_CASE("norm scan: Hoelder bound for sigma = 1")
{
    const Grid g(1, 128);
    const OperatorPtr T = make_operator(catalog_symbol("one"), g);
    for (const std::string fam : {"modulated-bump", "plane-wave", "random-trig"})
        for (const HolderTriple e : {HolderTriple{4, 4}, HolderTriple{2, 2}, HolderTriple{3, 6}}) {
            const NormScanReport r = norm_scan(T, e, fam, range(1, 20));
            for (const auto& row : r.rows) {
                CHECK(row.ratio <= 1.0 + 1e-10);
                const auto [f, gg] = family_member(fam, g, row.k);
                CHECK(row.ratio ==
                      doctest::Approx(lp_norm(f * gg, e.r()) / (lp_norm(f, e.p) * lp_norm(gg, e.q))).epsilon(1e-12));
            }
        }
}

TEST_CASE("norm scan: single-mode oracle for sqrt1")
{
    // T(e^{ikx}, e^{ikx}) = sqrt(1 + 2k^2) e^{2ikx}, and the L^2 / (L^4 L^4)
    // normalization of unimodular functions cancels exactly.
    const Grid g(1, 128);
    const NormScanReport r =
        norm_scan(make_operator(catalog_symbol("sqrt1"), g), {4, 4}, "plane-wave", range(1, 30));
    for (const auto& row : r.rows)
        CHECK(row.ratio == doctest::Approx(std::sqrt(1.0 + 2.0 * row.k * row.k)).epsilon(1e-10));
    CHECK(r.slope > 0.8);
    CHECK(r.verdict == "GROWING");
}

TEST_CASE("norm scan: smoothing contrast")
{
    const Grid g(1, 128);
    const OperatorPtr T = make_operator(catalog_symbol("sqrt1"), g);
    const GridFunction a = make_multiplier("sin", g);
    const auto ks = range(1, 32);
    CHECK(norm_scan(T, {4, 4}, "modulated-bump", ks).slope >= 0.8);
    for (int slot : {1, 2}) {
        const NormScanReport r = norm_scan(commutator(T, slot, a), {4, 4}, "modulated-bump", ks);
        CHECK(r.slope <= 0.2);
        CHECK(r.spread < 4.0);
        CHECK(r.verdict == "BOUNDED");
    }
}

TEST_CASE("norm scan of a vanishing operator")
{
    const Grid g(1, 64);
    const OperatorPtr C = commutator(make_operator(catalog_symbol("one"), g), 1, make_multiplier("sin", g));
    const NormScanReport r = norm_scan(C, {4, 4}, "modulated-bump", range(1, 16));
    CHECK(r.slope == 0.0);
    CHECK(r.verdict == "BOUNDED");
    CHECK_THROWS_AS(norm_scan(C, {4, 4}, "spikes", {1}), InvalidInput);
    CHECK_THROWS_AS(norm_scan(C, {4, 4}, "plane-wave", {32}), InvalidInput);
    CHECK_THROWS_AS(norm_scan(C, {0.5, 4}, "plane-wave", {1}), InvalidInput);
}

TEST_CASE("Hoelder triple")
{
    CHECK(HolderTriple{4, 4}.r() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(HolderTriple{3, 6}.r() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(HolderTriple{2, 2}.r() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(HolderTriple{INFINITY, 2}.r() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Kato-Ponce: closed forms")
{
    const Grid g(1, 128);
    // Plane waves: |D|^a e^{2ikx} = (2k)^a e^{2ikx}, so the ratio is 2^(a-1).
    for (double alpha : {0.5, 1.0})
        for (int k : {1, 5, 20}) {
            const auto [f, gg] = family_member("plane-wave", g, k);
            CHECK(kato_ponce_ratio(alpha, {4, 4}, f, gg) == doctest::Approx(std::pow(2.0, alpha - 1)).epsilon(1e-12));
        }
    // A constant factor: D(cf) = c Df and Dc = 0, so Hoelder gives ratio <= 1.
    const auto [f, unused] = family_member("modulated-bump", g, 7);
    CHECK(kato_ponce_ratio(1.0, {4, 4}, f, GridFunction::constant(g, 2.0)) <= 1.0);
    CHECK(kato_ponce_ratio(1.0, {2, 2}, GridFunction::constant(g, 2.0), f) <= 1.0);
    CHECK_THROWS_AS(kato_ponce_ratio(0.0, {4, 4}, f, f), InvalidInput);
}

TEST_CASE("Kato-Ponce scans stay bounded")
{
    const Grid g(1, 128);
    const auto ks = range(1, 32);
    CHECK(kato_ponce_check(1.0, {4, 4}, "modulated-bump", ks, g).verdict == "PASS");
    CHECK(kato_ponce_check(0.5, {2, 2}, "random-trig", ks, g).verdict == "PASS");
    CHECK(kato_ponce_check(0.5, {3, 6}, "random-trig", ks, g).verdict == "PASS");
}

TEST_CASE("compactness probe: trivial and comparative cases")
{
    const Grid g(1, 128);
    const GridFunction a = make_multiplier("sin", g);
    const GridFunction bump = make_multiplier("bump", g);

    const OperatorPtr one = make_operator(catalog_symbol("one"), g);
    const CompactnessProbe zero = compactness_probe(commutator(commutator(one, 1, a), 1, bump));
    CHECK(zero.sup_norm < 1e-13);
    CHECK(zero.covering_at(0.2) == 1);
    CHECK(zero.equicontinuity.back() < 1e-13);

    const OperatorPtr T = make_operator(catalog_symbol("sqrt1"), g);
    const CompactnessComparison c = compare_compactness(commutator(commutator(T, 1, a), 1, bump),
                                                        commutator(commutator(T, 1, a), 1, make_multiplier("step", g)));
    CHECK(c.verdict == "consistent with compactness");
    for (const CompactnessProbe* p : {&c.smooth, &c.rough}) {
        for (std::size_t j = 1; j < p->equicontinuity.size(); ++j)
            CHECK(p->equicontinuity[j] >= p->equicontinuity[j - 1]);
        CHECK(p->covering_at(0.5) <= p->covering_at(0.2));
        CHECK(p->covering_at(0.2) <= p->covering_at(0.1));
        CHECK(p->shifts.back() == doctest::Approx(L / 8));
    }

    CompactnessOptions small;
    small.family_size = 20;
    CHECK_THROWS_AS(compactness_probe(one, small), InvalidInput);
}

TEST_CASE("compactness probe is deterministic under a fixed seed")
{
    const Grid g(1, 64);
    const OperatorPtr U = commutator(commutator(make_operator(catalog_symbol("sqrt1"), g), 1, make_multiplier("sin", g)),
                                     1, make_multiplier("step", g));
    const CompactnessProbe p1 = compactness_probe(U);
    const CompactnessProbe p2 = compactness_probe(U);
    CHECK(p1.output_norms == p2.output_norms);
    CHECK(p1.equicontinuity == p2.equicontinuity);
}

TEST_CASE("Calderon commutator: closed form for a single mode")
{
    // With T = |D| and a = sin x: [T, a] e^{ikx} = -i cos(x) e^{ikx} for k >= 1.
    const Grid g(1, 64);
    const GridFunction a = make_multiplier("sin", g);
    for (int k : {1, 3, 20}) {
        const GridFunction f = family_member("plane-wave", g, k).first;
        const GridFunction expected = GridFunction::sample(
            g, [k](const Vec& x) { return cplx(0.0, -std::cos(x[0])) * std::polar(1.0, k * x[0]); });
        CHECK(sup_diff(calderon_demo(a, f).output, expected) < 1e-10);
    }
    const GridFunction f = family_member("modulated-bump", g, 4).first;
    const CalderonResult c = calderon_demo(make_multiplier("const", g), f);
    CHECK(lp_norm(c.output, 2.0) < 1e-12);
    CHECK(c.ratio == 0.0);
}

TEST_CASE("Calderon commutator scan is bounded")
{
    const Grid g(1, 128);
    const CalderonScan s = calderon_scan(make_multiplier("sin", g), "modulated-bump", range(1, 32));
    CHECK(s.verdict == "BOUNDED");
    CHECK(std::abs(s.slope) < 0.2);
}

TEST_CASE("converse check recovers the Lipschitz constant")
{
    const Grid g(1, 256);
    const ConverseReport c = converse_check(make_multiplier("const", g));
    CHECK(c.operator_estimate < 1e-12);
    CHECK(c.gradient_estimate < 1e-12);
    CHECK(c.verdict == "PASS");

    const ConverseReport s = converse_check(make_multiplier("sin", g));
    CHECK(s.gradient_estimate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.relative_gap < 0.2);

    const GridFunction saw = make_multiplier("sawtooth", g);
    const ConverseReport r1 = converse_check(saw);
    const ConverseReport r2 = converse_check(cplx(3.0) * saw);
    CHECK(r2.operator_estimate == doctest::Approx(3.0 * r1.operator_estimate).epsilon(1e-12));
    CHECK(r1.relative_gap < 0.2);
}
