#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bilop/catalog.hpp"
#include "bilop/kernel.hpp"

using namespace bilop;

namespace {

// (1/2 pi) int w(xi) psi(xi/N) e^{i xi u} dxi by composite Gauss-Legendre,
// independent of the trapezoid rule used by the library.
cplx line_transform(const std::function<double(double)>& w, int N, double u)
{
    const QuadratureRule g = gauss_legendre(24);
    const int panels = 800;
    const double a = -2.0 * N, width = 4.0 * N / panels;
    cplx s = 0.0;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const double xi = a + width * (p + g.nodes[i]);
            s += g.weights[i] * width * w(xi) * cutoff(xi / N) * std::polar(1.0, xi * u);
        }
    return s / (2.0 * pi);
}

double exact_sqrt1(double u, double v)
{
    const double r = std::hypot(u, v);
    return -(1 + r) * std::exp(-r) / (2 * pi * r * r * r);
}

} // namespace

TEST_CASE("cutoff profile")
{
    CHECK(cutoff(0.0) == 1.0);
    CHECK(cutoff(1.0) == 1.0);
    CHECK(cutoff(-0.7) == 1.0);
    CHECK(cutoff(2.0) == 0.0);
    CHECK(cutoff(-3.0) == 0.0);
    double max_slope = 0.0, prev = 1.0;
    for (int i = 1; i <= 1000; ++i) {
        const double s = 1.0 + i / 1000.0;
        const double p = cutoff(s);
        CHECK(p >= 0.0);
        CHECK(p <= prev);
        CHECK(cutoff(-s) == p);
        max_slope = std::max(max_slope, std::abs(p - prev) * 1000.0);
        prev = p;
    }
    CHECK(max_slope < 3.0);
    TruncationProfile prof{16};
    CHECK(prof(16.0) == 1.0);
    CHECK(prof(32.0) == 0.0);
}

TEST_CASE("kernel of sigma = 1 factors into 1D transforms")
{
    const int N = 16;
    const Symbol one = catalog_symbol("one");
    for (auto [u, v] : {std::pair{0.05, 0.02}, {0.1, -0.03}, {0.0, 0.2}, {-0.15, 0.12}}) {
        const cplx k = kernel_at(one, {N}, 0.0, -u, -v);
        const cplx f = line_transform([](double) { return 1.0; }, N, u) * line_transform([](double) { return 1.0; }, N, v);
        CHECK(std::abs(k - f) <= 1e-8 * std::max(1.0, std::abs(f)));
    }
}

TEST_CASE("kernel of a product symbol is the product of 1D kernels")
{
    const int N = 16;
    const Symbol s = symbol_from_expr(expr::Expr::parse("xi*eta^2"), {3, 1, 0});
    for (auto [u, v] : {std::pair{0.07, 0.02}, {-0.11, 0.05}, {0.2, -0.3}}) {
        const cplx k = kernel_at(s, {N}, 1.0, 1.0 - u, 1.0 - v);
        const cplx f = line_transform([](double xi) { return xi; }, N, u) *
                       line_transform([](double eta) { return eta * eta; }, N, v);
        CHECK(std::abs(k - f) <= 1e-8 * std::max(1.0, std::abs(f)));
    }
}

TEST_CASE("truncated sqrt1 kernel approaches the closed form away from the axes")
{
    const Symbol s = catalog_symbol("sqrt1");
    // N r >= 64 is past the cutoff's transition band in this direction.
    for (double r : {0.3, 0.5, 0.8}) {
        const double u = r / 2, v = -r / 2;
        const cplx k = kernel_at(s, {256}, 0.0, -u, -v);
        CHECK(std::abs(k.imag()) < 1e-9 * std::abs(k.real()));
        CHECK(k.real() == doctest::Approx(exact_sqrt1(u, v)).epsilon(1e-3));
    }
    // Halving r multiplies |K| by about 2^3.
    const double k1 = std::abs(kernel_at(s, {256}, 0.0, -0.2, 0.2));
    const double k2 = std::abs(kernel_at(s, {256}, 0.0, -0.4, 0.4));
    CHECK(k1 / k2 > 7.5);
    CHECK(k1 / k2 < 9.0);
}

TEST_CASE("off-diagonal values stabilize as the truncation level doubles")
{
    for (const char* name : {"sqrt1", "theta_sqrt1"}) {
        const Symbol s = catalog_symbol(name);
        for (auto [level, r] : {std::pair{64, 1.2}, {64, 1.6}, {128, 0.5}}) {
            const cplx a = kernel_at(s, {level}, 0.4, 0.4 - r / 2, 0.4 + r / 2);
            const cplx b = kernel_at(s, {2 * level}, 0.4, 0.4 - r / 2, 0.4 + r / 2);
            INFO(name, " r=", r);
            CHECK(std::abs(a - b) < 0.05 * std::abs(b));
        }
    }
}

TEST_CASE("kernel values are invariant under period shifts")
{
    const double L = 2 * pi;
    const Symbol s = catalog_symbol("theta_sqrt1");
    const cplx a = kernel_at(s, {32}, 0.7, 0.5, 0.95);
    const cplx b = kernel_at(s, {32}, 0.7 + L, 0.5 - L, 0.95 + 2 * L);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    // Nearest-image separations: y just across the seam.
    const cplx c = kernel_at(catalog_symbol("sqrt1"), {32}, 0.05, L - 0.1, 0.2);
    const cplx d = kernel_at(catalog_symbol("sqrt1"), {32}, 1.05, 0.9, 1.2);
    CHECK(std::abs(c - d) <= 1e-10 * std::abs(c));
}

TEST_CASE("derivative kernels match differences of kernel values")
{
    const double x = 0.9, y = 0.6, z = 1.4, h = 1e-3;
    // Five-point central difference.
    const auto diff = [h](const std::function<cplx(double)>& f, double t) {
        return (8.0 * (f(t + h) - f(t - h)) - (f(t + 2 * h) - f(t - 2 * h))) / (12.0 * h);
    };
    for (const char* name : {"sqrt1", "theta_sqrt1", "theta_xi"}) {
        const Symbol s = catalog_symbol(name);
        const TruncationProfile p{16};
        // Finer spacing keeps the coarse comparison grid accurate for the
        // small values of the theta_xi kernel at this separation.
        KernelOptions fine;
        fine.spacing = 0.125;
        const auto K = [&](double a, double b, double c, KernelDeriv d = {}) { return kernel_at(s, p, a, b, c, d, fine); };
        const cplx dx = diff([&](double t) { return K(t, y, z); }, x);
        const cplx dy = diff([&](double t) { return K(x, t, z); }, y);
        const cplx dz = diff([&](double t) { return K(x, y, t); }, z);
        const auto batch = kernel_batch(s, p, x, {{y, z}}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, fine).values;
        const double scale = std::abs(dx) + std::abs(dy) + std::abs(dz);
        INFO(name);
        CHECK(std::abs(batch[0][0] - dx) < 1e-6 * scale);
        CHECK(std::abs(batch[1][0] - dy) < 1e-6 * scale);
        CHECK(std::abs(batch[2][0] - dz) < 1e-6 * scale);
        const cplx dxz = diff([&](double t) { return K(x, y, t, {1, 0, 0}); }, z);
        const cplx exact = K(x, y, z, {1, 0, 1});
        CHECK(std::abs(exact - dxz) < 1e-6 * std::abs(exact));
    }
}

TEST_CASE("FFT and direct quadrature paths agree")
{
    const int N = 32;
    const double cell = kernel_lattice(N), x = 0.3;
    std::vector<std::pair<double, double>> yz;
    for (int i = 0; i < 20; ++i) yz.push_back({x - 0.3 + 0.05 * i + 0.013, x - cell * (7 * i - 60)});
    const std::vector<KernelDeriv> orders{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}, {1, 0, 1}};
    for (const char* name : {"theta_sqrt1", "xi_eta"}) {
        const Symbol s = catalog_symbol(name);
        const auto fast = kernel_batch(s, {N}, x, yz, orders).values;
        std::vector<double> scale(orders.size());
        for (std::size_t d = 0; d < orders.size(); ++d)
            for (const cplx& f : fast[d]) scale[d] = std::max(scale[d], std::abs(f));
        for (std::size_t t = 0; t < yz.size(); t += 3) {
            const auto slow = kernel_batch(s, {N}, x, {yz[t]}, orders).values;
            for (std::size_t d = 0; d < orders.size(); ++d) {
                INFO(name, " t=", t, " d=", d);
                CHECK(std::abs(fast[d][t] - slow[d][0]) <= 1e-9 * std::abs(slow[d][0]) + 1e-12 * scale[d]);
            }
        }
    }
}

TEST_CASE("kernel preconditions")
{
    const Symbol s = catalog_symbol("sqrt1");
    CHECK_THROWS_AS(kernel_at(s, {16}, 1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(kernel_at(s, {16}, 1.0, 1.0 + 2 * pi, 1.0), DomainError);
    CHECK_NOTHROW(kernel_at(s, {16}, 1.0, 1.0, 1.2));
    CHECK_THROWS_AS(kernel_at(s, {16}, 0.0, 0.1, 0.2, {2, 0, 0}), InvalidInput);
    CHECK_THROWS_AS(kernel_at(catalog_symbol("sqrt1", 2), {16}, 0.0, 0.1, 0.2), InvalidInput);

    KernelOptions coarse;
    coarse.spacing = 4.0;
    try {
        kernel_at(s, {16}, 0.0, 0.05, -0.05, {}, coarse);
        FAIL("expected the convergence guard to fire");
    } catch (const ToleranceError& e) {
        CHECK(e.first() != e.second());
    }
}

TEST_CASE("kernel slices serialize with a header row")
{
    const KernelSlice sl = kernel_slice(catalog_symbol("sqrt1"), {16}, 0.0, {{0.1, 0.2}, {0.3, -0.1}});
    std::ostringstream out;
    write_csv(out, sl);
    const std::string text = out.str();
    CHECK(text.rfind("x,y,z,re,im,N_trunc\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(sl.spacing <= 0.25);
}

TEST_CASE("decay fits")
{
    const Symbol s = catalog_symbol("sqrt1");
    const DecayFitReport r = fit_kernel_decay(s, {});
    CHECK(r.target == -3.0);
    CHECK(r.exponent <= -2.7);
    CHECK(r.r_squared >= 0.9);
    CHECK(r.stability < 2.0);
    CHECK(r.levels.size() == 3);
    CHECK(r.radii.size() == 11);
    CHECK(r.verdict == "PASS");

    DecayFitOptions small;
    small.levels = {32};
    const DecayFitReport d = fit_kernel_decay(catalog_symbol("xi"), {1, 0, 0}, small);
    CHECK(d.target == -4.0);
    CHECK(d.verdict != "FAIL");

    DecayFitOptions bad = small;
    bad.radii = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    CHECK_THROWS_AS(fit_kernel_decay(s, {}, bad), InvalidInput);
    bad.radii = {0.1, 0.12, 0.14, 0.16, 0.18, 0.2, 0.25, 0.3};
    CHECK_THROWS_AS(fit_kernel_decay(s, {}, bad), InvalidInput);
    bad.radii = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.9, 1.6};
    CHECK_THROWS_AS(fit_kernel_decay(s, {}, bad), InvalidInput);
}

TEST_CASE("commutator kernel certification: structure")
{
    Grid g(1, 64);
    const Symbol s = catalog_symbol("sqrt1");
    CzOptions o;
    o.level = 64;
    o.samples = 210;
    const CzReport zero = certify_cz_commutator_kernel(s, make_multiplier("const", g), 1, o);
    CHECK(zero.verdict == "BOUNDED");
    for (const auto& oct : zero.octaves) {
        CHECK(oct.samples == 70);
        CHECK(oct.size_sup == 0.0);
        CHECK(oct.gradient_sup == 0.0);
    }
    // Linear in a - a(x): doubling a doubles every sup.
    const GridFunction a = make_multiplier("sin", g);
    for (int slot : {1, 2}) {
        const CzReport r1 = certify_cz_commutator_kernel(s, a, slot, o);
        const CzReport r2 = certify_cz_commutator_kernel(s, 2.0 * a, slot, o);
        for (int i = 0; i < 3; ++i) {
            CHECK(r2.octaves[i].size_sup == doctest::Approx(2 * r1.octaves[i].size_sup).epsilon(1e-12));
            CHECK(r2.octaves[i].gradient_sup == doctest::Approx(2 * r1.octaves[i].gradient_sup).epsilon(1e-12));
        }
    }
    o.samples = 100;
    CHECK_THROWS_AS(certify_cz_commutator_kernel(s, a, 1, o), InvalidInput);
    o.samples = 240;
    CHECK_THROWS_AS(certify_cz_commutator_kernel(s, a, 3, o), InvalidInput);
}
