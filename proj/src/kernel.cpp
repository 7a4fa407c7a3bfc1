#include "bilop/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "fftw_planner.hpp"

namespace bilop {
namespace {

double h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

void validate_deriv(const KernelDeriv& d)
{
    for (int o : {d.alpha, d.beta, d.gamma})
        if (o != 0 && o != 1) throw InvalidInput("kernel derivative orders must be 0 or 1");
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys)
{
    LineFit f;
    f.points = xs.size();
    if (xs.size() < 2) return f;
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n, my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - f.intercept - f.slope * xs[i];
        res += e * e;
    }
    f.r_squared = syy > 0 ? 1.0 - res / syy : 1.0;
    return f;
}

double wrap_to_period(double x, double period)
{
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    return r;
}

} // namespace

double cutoff(double s)
{
    const double a = std::abs(s);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double p = h(2.0 - a), q = h(a - 1.0);
    return p / (p + q);
}

double torus_wrap(double u, double period)
{
    double r = std::fmod(u, period);
    if (r < -period / 2) r += period;
    if (r >= period / 2) r -= period;
    return r;
}

namespace {

// Trapezoid nodes xi_k = k step for |k| <= K on [-2N, 2N], K a power of two,
// so the even subgrid spans the same box at spacing 2 step and the node count
// 2K suits the FFT.
struct Nodes {
    long K = 0;
    double step = 0.0;
    std::size_t M = 0;
    std::vector<double> freq, psi;
};

Nodes make_nodes(const TruncationProfile& profile, double h_max)
{
    Nodes q;
    const double N = profile.level;
    q.K = 2;
    while (static_cast<double>(q.K) < 2.0 * N / h_max) q.K *= 2;
    q.step = 2.0 * N / static_cast<double>(q.K);
    q.M = static_cast<std::size_t>(2 * q.K + 1);
    q.freq.resize(q.M);
    q.psi.resize(q.M);
    for (std::size_t j = 0; j < q.M; ++j) {
        q.freq[j] = (static_cast<long>(j) - q.K) * q.step;
        q.psi[j] = profile(q.freq[j]);
    }
    return q;
}

cplx integrand(const KernelDeriv& o, double xi, double eta, cplx s, cplx sx)
{
    cplx val = o.alpha ? cplx(0.0, xi + eta) * s + sx : s;
    if (o.beta) val *= cplx(0.0, -xi);
    if (o.gamma) val *= cplx(0.0, -eta);
    return val;
}

// Unscaled trapezoid sums: fine over all nodes, coarse over the even subgrid.
struct Sums {
    std::vector<std::vector<cplx>> fine, coarse;
    std::vector<double> mass;

    Sums(std::size_t D, std::size_t T) : fine(D, std::vector<cplx>(T)), coarse(D, std::vector<cplx>(T)), mass(D) {}
};

Sums direct_sums(const Symbol& sigma, double x, const Nodes& q, const std::vector<double>& u,
                 const std::vector<double>& v, const std::vector<KernelDeriv>& derivs, bool need_dx)
{
    const std::size_t T = u.size(), D = derivs.size(), M = q.M;
    const Vec X{x, 0.0};
    // Phase tables, index j * T + t.
    std::vector<double> eu_re(M * T), eu_im(M * T), ev_re(M * T), ev_im(M * T);
    for (std::size_t j = 0; j < M; ++j)
        for (std::size_t t = 0; t < T; ++t) {
            eu_re[j * T + t] = std::cos(q.freq[j] * u[t]);
            eu_im[j * T + t] = std::sin(q.freq[j] * u[t]);
            ev_re[j * T + t] = std::cos(q.freq[j] * v[t]);
            ev_im[j * T + t] = std::sin(q.freq[j] * v[t]);
        }

    struct Partial {
        std::vector<double> full_re, full_im, coarse_re, coarse_im, mass;
    };
    const std::size_t chunks = std::min<std::size_t>(M, 64);
    std::vector<Partial> partial(chunks);

    parallel_for(chunks, [&](std::size_t c) {
        Partial& P = partial[c];
        P.full_re.assign(D * T, 0.0);
        P.full_im.assign(D * T, 0.0);
        P.coarse_re.assign(D * T, 0.0);
        P.coarse_im.assign(D * T, 0.0);
        P.mass.assign(D, 0.0);
        std::vector<double> s_re(D * M), s_im(D * M);
        // Row sums split by parity of the eta index, index (parity * D + d) * T + t.
        std::vector<double> in_re(2 * D * T), in_im(2 * D * T);

        const std::size_t lo = c * M / chunks, hi = (c + 1) * M / chunks;
        for (std::size_t k = lo; k < hi; ++k) {
            if (q.psi[k] == 0.0) continue;
            const double xi = q.freq[k];
            for (std::size_t l = 0; l < M; ++l) {
                const double w = q.psi[k] * q.psi[l];
                if (w == 0.0) {
                    for (std::size_t d = 0; d < D; ++d) s_re[d * M + l] = s_im[d * M + l] = 0.0;
                    continue;
                }
                const double eta = q.freq[l];
                const cplx s = sigma(X, {xi, 0.0}, {eta, 0.0}) * w;
                cplx sx = 0.0;
                if (need_dx) sx = sigma.derivative(DerivOrder{{1, 0}, {}, {}}, X, {xi, 0.0}, {eta, 0.0}) * w;
                for (std::size_t d = 0; d < D; ++d) {
                    const cplx val = integrand(derivs[d], xi, eta, s, sx);
                    s_re[d * M + l] = val.real();
                    s_im[d * M + l] = val.imag();
                    P.mass[d] += std::abs(val);
                }
            }
            std::fill(in_re.begin(), in_re.end(), 0.0);
            std::fill(in_im.begin(), in_im.end(), 0.0);
            for (std::size_t l = 0; l < M; ++l) {
                if (q.psi[l] == 0.0) continue;
                const double* er = &ev_re[l * T];
                const double* ei = &ev_im[l * T];
                const std::size_t parity = l % 2;
                for (std::size_t d = 0; d < D; ++d) {
                    const double sr = s_re[d * M + l], si = s_im[d * M + l];
                    double* ar = &in_re[(parity * D + d) * T];
                    double* ai = &in_im[(parity * D + d) * T];
                    for (std::size_t t = 0; t < T; ++t) {
                        ar[t] += sr * er[t] - si * ei[t];
                        ai[t] += sr * ei[t] + si * er[t];
                    }
                }
            }
            const double* er = &eu_re[k * T];
            const double* ei = &eu_im[k * T];
            const bool even_row = k % 2 == 0;
            for (std::size_t d = 0; d < D; ++d)
                for (std::size_t t = 0; t < T; ++t) {
                    const double e_re = in_re[d * T + t], e_im = in_im[d * T + t];
                    const double o_re = in_re[(D + d) * T + t], o_im = in_im[(D + d) * T + t];
                    const double a_re = e_re + o_re, a_im = e_im + o_im;
                    P.full_re[d * T + t] += er[t] * a_re - ei[t] * a_im;
                    P.full_im[d * T + t] += er[t] * a_im + ei[t] * a_re;
                    if (even_row) {
                        P.coarse_re[d * T + t] += er[t] * e_re - ei[t] * e_im;
                        P.coarse_im[d * T + t] += er[t] * e_im + ei[t] * e_re;
                    }
                }
        }
    });

    Sums out(D, T);
    for (const auto& P : partial)
        for (std::size_t d = 0; d < D; ++d) {
            out.mass[d] += P.mass[d];
            for (std::size_t t = 0; t < T; ++t) {
                out.fine[d][t] += cplx(P.full_re[d * T + t], P.full_im[d * T + t]);
                out.coarse[d][t] += cplx(P.coarse_re[d * T + t], P.coarse_im[d * T + t]);
            }
        }
    return out;
}

// The integrand of a derivative kernel is a combination of "profiles"
// eta^power * (sigma or d_x sigma) with coefficients c xi^xi_power.
struct Term {
    int profile;
    cplx coef;
    int xi_power;
};

int profile_id(bool dx, int power) { return (dx ? 3 : 0) + power; }

std::vector<Term> expand(const KernelDeriv& o)
{
    const cplx c = o.beta ? cplx(0.0, -1.0) : cplx(1.0);
    const int e = o.beta;
    const cplx I(0.0, 1.0);
    if (!o.alpha && !o.gamma) return {{profile_id(false, 0), c, e}};
    if (!o.alpha) return {{profile_id(false, 1), -I * c, e}};
    if (!o.gamma) return {{profile_id(false, 0), I * c, e + 1}, {profile_id(false, 1), I * c, e}, {profile_id(true, 0), c, e}};
    return {{profile_id(false, 1), c, e + 1}, {profile_id(false, 2), c, e}, {profile_id(true, 1), -I * c, e}};
}

// Offsets z lie on the lattice pi / (2N) (with P = 2K nodes per axis, the
// length-P DFT samples exactly these points), so each row's eta-sum for all
// targets comes from one FFT per profile; the xi-sum stays direct.
Sums fft_sums(const Symbol& sigma, double x, const Nodes& q, const std::vector<double>& u,
              const std::vector<long>& lattice, const std::vector<KernelDeriv>& derivs, bool need_dx)
{
    const std::size_t T = u.size(), D = derivs.size(), M = q.M;
    const long K = q.K, P = 2 * K;
    const Vec X{x, 0.0};

    std::vector<std::vector<Term>> terms;
    std::array<bool, 6> used{};
    for (const auto& d : derivs) {
        terms.push_back(expand(d));
        for (const Term& t : terms.back())
            if (need_dx || t.profile < 3) used[t.profile] = true;
    }
    std::vector<std::size_t> idx_full(T), idx_half(T);
    for (std::size_t t = 0; t < T; ++t) {
        idx_full[t] = static_cast<std::size_t>(((lattice[t] % P) + P) % P);
        idx_half[t] = static_cast<std::size_t>(((lattice[t] % K) + K) % K);
    }

    fftw_plan full, half;
    {
        std::lock_guard lock(fftw_planner_mutex());
        std::vector<cplx> a(P), b(P);
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        full = fftw_plan_dft_1d(static_cast<int>(P), pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        half = fftw_plan_dft_1d(static_cast<int>(K), pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }

    const std::size_t chunks = std::min<std::size_t>(M, 64);
    std::vector<Sums> partial(chunks, Sums(D, T));
    parallel_for(chunks, [&](std::size_t c) {
        Sums& S = partial[c];
        std::vector<cplx> sig(M), sx(M), in(P), out(P), in_half(K), out_half(K);
        std::array<std::vector<cplx>, 6> ext, ext_half;
        for (int p = 0; p < 6; ++p)
            if (used[p]) ext[p].resize(T), ext_half[p].resize(T);

        const std::size_t lo = c * M / chunks, hi = (c + 1) * M / chunks;
        for (std::size_t k = lo; k < hi; ++k) {
            if (q.psi[k] == 0.0) continue;
            const double xi = q.freq[k];
            const bool even_row = k % 2 == 0;
            for (std::size_t l = 0; l < M; ++l) {
                const double w = q.psi[k] * q.psi[l];
                sig[l] = sx[l] = 0.0;
                if (w == 0.0) continue;
                sig[l] = sigma(X, {xi, 0.0}, {q.freq[l], 0.0}) * w;
                if (need_dx) sx[l] = sigma.derivative(DerivOrder{{1, 0}, {}, {}}, X, {xi, 0.0}, {q.freq[l], 0.0}) * w;
                for (std::size_t d = 0; d < D; ++d) S.mass[d] += std::abs(integrand(derivs[d], xi, q.freq[l], sig[l], sx[l]));
            }
            for (int p = 0; p < 6; ++p) {
                if (!used[p]) continue;
                const std::vector<cplx>& base = p < 3 ? sig : sx;
                const int power = p % 3;
                // Node l = j - K sits at DFT slot l mod P; the node l = K has psi = 0.
                for (long j = 0; j < P; ++j) {
                    const double eta = q.freq[j];
                    const cplx val = power == 0 ? base[j] : power == 1 ? base[j] * eta : base[j] * (eta * eta);
                    in[static_cast<std::size_t>(((j - K) % P + P) % P)] = val;
                }
                fftw_execute_dft(full, reinterpret_cast<fftw_complex*>(in.data()),
                                 reinterpret_cast<fftw_complex*>(out.data()));
                for (std::size_t t = 0; t < T; ++t) ext[p][t] = out[idx_full[t]];
                if (!even_row) continue;
                for (long m = -K / 2; m < K / 2; ++m) in_half[static_cast<std::size_t>((m + K) % K)] =
                    in[static_cast<std::size_t>((2 * m + P) % P)];
                fftw_execute_dft(half, reinterpret_cast<fftw_complex*>(in_half.data()),
                                 reinterpret_cast<fftw_complex*>(out_half.data()));
                for (std::size_t t = 0; t < T; ++t) ext_half[p][t] = out_half[idx_half[t]];
            }
            for (std::size_t t = 0; t < T; ++t) {
                const cplx phase = std::polar(1.0, xi * u[t]);
                for (std::size_t d = 0; d < D; ++d) {
                    cplx f = 0.0, h2 = 0.0;
                    for (const Term& term : terms[d]) {
                        if (!used[term.profile]) continue;
                        const cplx coef = term.coef * std::pow(xi, term.xi_power);
                        f += coef * ext[term.profile][t];
                        if (even_row) h2 += coef * ext_half[term.profile][t];
                    }
                    S.fine[d][t] += phase * f;
                    if (even_row) S.coarse[d][t] += phase * h2;
                }
            }
        }
    });
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(full);
        fftw_destroy_plan(half);
    }

    Sums out(D, T);
    for (const auto& S : partial)
        for (std::size_t d = 0; d < D; ++d) {
            out.mass[d] += S.mass[d];
            for (std::size_t t = 0; t < T; ++t) out.fine[d][t] += S.fine[d][t], out.coarse[d][t] += S.coarse[d][t];
        }
    return out;
}

} // namespace

double kernel_lattice(int level) { return pi / (2.0 * level); }

KernelBatch kernel_batch(const Symbol& sigma, const TruncationProfile& profile, double x,
                         const std::vector<std::pair<double, double>>& yz, const std::vector<KernelDeriv>& derivs,
                         const KernelOptions& options)
{
    if (sigma.dim() != 1) throw InvalidInput("kernel extraction is implemented for one space dimension");
    if (profile.level < 1) throw InvalidInput("truncation level must be positive");
    if (!(options.period > 0.0) || !(options.spacing > 0.0)) throw InvalidInput("period and spacing must be positive");
    if (yz.empty() || derivs.empty()) throw InvalidInput("kernel batch needs at least one offset and one order");
    for (const auto& d : derivs) validate_deriv(d);

    const double L = options.period;
    const std::size_t T = yz.size(), D = derivs.size();
    std::vector<double> u(T), v(T);
    double r_max = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        u[t] = torus_wrap(x - yz[t].first, L);
        v[t] = torus_wrap(x - yz[t].second, L);
        if (u[t] == 0.0 && v[t] == 0.0) throw DomainError("kernel requested on the diagonal x = y = z");
        r_max = std::max({r_max, std::abs(u[t]), std::abs(v[t])});
    }

    const Nodes q = make_nodes(profile, std::min(options.spacing, pi / (8.0 * r_max)));
    const bool need_dx = !sigma.x_independent() &&
                         std::any_of(derivs.begin(), derivs.end(), [](const KernelDeriv& d) { return d.alpha; });

    // The FFT path needs every z-offset on the lattice and pays off once the
    // targets outnumber a few FFT lengths' worth of logarithms.
    const double cell = kernel_lattice(profile.level);
    std::vector<long> lattice(T);
    bool on_lattice = T >= 16;
    for (std::size_t t = 0; t < T && on_lattice; ++t) {
        lattice[t] = std::lround(v[t] / cell);
        on_lattice = std::abs(v[t] - lattice[t] * cell) <= 1e-9 * cell;
    }
    const Sums sums = on_lattice ? fft_sums(sigma, x, q, u, lattice, derivs, need_dx)
                                 : direct_sums(sigma, x, q, u, v, derivs, need_dx);

    const double fine_w = q.step * q.step / (4.0 * pi * pi);
    const double coarse_w = 4.0 * fine_w;
    KernelBatch out;
    out.spacing = q.step;
    out.nodes = q.M;
    out.values.assign(D, std::vector<cplx>(T));
    for (std::size_t d = 0; d < D; ++d) {
        const double mass = sums.mass[d] * fine_w;
        for (std::size_t t = 0; t < T; ++t) {
            const cplx fine = sums.fine[d][t] * fine_w;
            const cplx coarse = sums.coarse[d][t] * coarse_w;
            if (std::abs(fine - coarse) > options.guard * std::abs(fine) + 1e-12 * mass) {
                std::ostringstream msg;
                msg << "kernel quadrature not converged at y=" << yz[t].first << ", z=" << yz[t].second
                    << ": spacing " << q.step << " gives " << fine << ", spacing " << 2 * q.step << " gives "
                    << coarse;
                throw ToleranceError(msg.str(), std::abs(fine), std::abs(coarse));
            }
            out.values[d][t] = fine;
        }
    }
    return out;
}

cplx kernel_at(const Symbol& sigma, const TruncationProfile& profile, double x, double y, double z, KernelDeriv deriv,
               const KernelOptions& options)
{
    return kernel_batch(sigma, profile, x, {{y, z}}, {deriv}, options).values[0][0];
}

KernelSlice kernel_slice(const Symbol& sigma, const TruncationProfile& profile, double x,
                         const std::vector<std::pair<double, double>>& yz, KernelDeriv deriv,
                         const KernelOptions& options)
{
    KernelBatch b = kernel_batch(sigma, profile, x, yz, {deriv}, options);
    KernelSlice s;
    s.x = x;
    s.offsets = yz;
    s.values = std::move(b.values[0]);
    s.level = profile.level;
    s.deriv = deriv;
    s.spacing = b.spacing;
    s.nodes = b.nodes;
    return s;
}

void write_csv(std::ostream& out, const KernelSlice& slice)
{
    out.precision(17);
    out << "x,y,z,re,im,N_trunc\n";
    for (std::size_t i = 0; i < slice.values.size(); ++i)
        out << slice.x << ',' << slice.offsets[i].first << ',' << slice.offsets[i].second << ','
            << slice.values[i].real() << ',' << slice.values[i].imag() << ',' << slice.level << '\n';
}

std::vector<double> default_fit_radii(double period)
{
    std::vector<double> r;
    for (int j = 0; j <= 10; ++j) r.push_back(period / 256.0 * std::pow(2.0, j / 2.0));
    return r;
}

DecayFitReport fit_kernel_decay(const Symbol& sigma, KernelDeriv deriv, const DecayFitOptions& options)
{
    validate_deriv(deriv);
    const double L = options.kernel.period;
    std::vector<double> radii = options.radii.empty() ? default_fit_radii(L) : options.radii;
    std::sort(radii.begin(), radii.end());
    if (radii.size() < 8) throw InvalidInput("decay fit needs at least 8 radii");
    if (radii.front() <= 0.0 || radii.back() >= L / 4) throw InvalidInput("fit radii must lie in (0, L/4)");
    if (radii.back() / radii.front() < 8.0 * (1 - 1e-12)) throw InvalidInput("fit radii must span at least 3 octaves");
    if (options.directions.empty() || options.levels.empty()) throw InvalidInput("directions and levels must be non-empty");
    for (double c : options.directions)
        if (!(c >= 0.0 && c <= 1.0)) throw InvalidInput("direction parameters must lie in [0, 1]");

    // Offsets per radius: (x - y, x - z) = (r c, +-r (1 - c)).
    std::vector<std::pair<double, double>> yz;
    std::vector<std::size_t> owner;
    for (std::size_t i = 0; i < radii.size(); ++i)
        for (double c : options.directions) {
            const double r = radii[i];
            yz.push_back({options.x - r * c, options.x - r * (1 - c)});
            owner.push_back(i);
            if (c < 1.0) {
                yz.push_back({options.x - r * c, options.x + r * (1 - c)});
                owner.push_back(i);
            }
        }

    DecayFitReport rep;
    rep.deriv = deriv;
    rep.radii = radii;
    rep.target = -(3.0 + deriv.order());

    std::vector<int> levels = options.levels;
    std::sort(levels.begin(), levels.end());
    for (int level : levels) {
        const KernelBatch b = kernel_batch(sigma, {level}, options.x, yz, {deriv}, options.kernel);
        DecayLevel row;
        row.level = level;
        row.max_abs.assign(radii.size(), 0.0);
        for (std::size_t t = 0; t < yz.size(); ++t)
            row.max_abs[owner[t]] = std::max(row.max_abs[owner[t]], std::abs(b.values[0][t]));
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < radii.size(); ++i) {
            row.normalized_sup = std::max(row.normalized_sup, row.max_abs[i] * std::pow(radii[i], -rep.target));
            if (row.max_abs[i] > 0.0 && std::isfinite(row.max_abs[i])) {
                lx.push_back(std::log(radii[i]));
                ly.push_back(std::log(row.max_abs[i]));
            }
        }
        const LineFit f = fit_line(lx, ly);
        row.exponent = f.slope;
        row.constant = std::exp(f.intercept);
        row.r_squared = f.points >= 8 ? f.r_squared : 0.0;
        rep.levels.push_back(std::move(row));
    }

    const DecayLevel& top = rep.levels.back();
    rep.exponent = top.exponent;
    rep.constant = top.constant;
    rep.r_squared = top.r_squared;
    double lo = INFINITY, hi = 0.0;
    for (const auto& row : rep.levels) lo = std::min(lo, row.normalized_sup), hi = std::max(hi, row.normalized_sup);
    rep.stability = lo > 0.0 ? hi / lo : INFINITY;

    if (rep.r_squared < 0.9)
        rep.verdict = "INCONCLUSIVE";
    else if (rep.exponent <= rep.target + 0.3 && rep.stability < 2.0)
        rep.verdict = "PASS";
    else
        rep.verdict = "FAIL";
    return rep;
}

CzReport certify_cz_commutator_kernel(const Symbol& sigma, const GridFunction& a, int slot, const CzOptions& options)
{
    if (slot != 1 && slot != 2) throw InvalidInput("commutator slot must be 1 or 2");
    if (options.samples < 200) throw InvalidInput("CZ certification needs at least 200 samples");
    if (options.base_points < 1) throw InvalidInput("base_points must be positive");
    const Grid& grid = a.grid();
    if (grid.dim() != 1) throw InvalidInput("CZ certification is implemented for one space dimension");

    const double L = grid.period();
    KernelOptions kopt = options.kernel;
    kopt.period = L;

    const GridFunction da = cplx(0.0, 1.0) * spectral_derivative(a);
    if (!std::isfinite(lp_norm(da, INFINITY))) throw InvalidInput("multiplier gradient is not finite");
    bool constant = true;
    for (std::size_t i = 1; i < a.size(); ++i) constant = constant && a[i] == a[0];
    const Interpolant ia(a), ida(da);

    CzReport rep;
    rep.slot = slot;
    rep.level = options.level;
    for (int o = 0; o < 3; ++o) rep.octaves.push_back({L / 16 * std::pow(2.0, o), L / 8 * std::pow(2.0, o), 0, 0, 0});

    // (u, v) = (x - y, x - z); v is snapped to the kernel lattice so the
    // quadrature can take its FFT path.
    struct Sample {
        int octave;
        int base;
        double u, v;
    };
    const double cell = kernel_lattice(options.level);
    const int B = options.base_points;
    std::vector<Sample> samples;
    for (int i = 0; i < options.samples; ++i) {
        std::mt19937_64 rng(mix_seed(options.seed, static_cast<std::uint64_t>(i)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int o = i % 3;
        const double S = rep.octaves[o].lower * std::pow(2.0, unit(rng));
        const double th = 2.0 * pi * unit(rng);
        const double cu = std::cos(th), cv = std::sin(th);
        const double s1 = std::abs(cu) + std::abs(cv) + std::abs(cu - cv);
        const double u = S * cu / s1;
        double v = cell * std::round(S * cv / s1 / cell);
        if (u == 0.0 && v == 0.0) v = cell;
        samples.push_back({o, (i / 3) % B, u, v});
    }
    std::vector<double> base_x(B);
    for (int b = 0; b < B; ++b) {
        std::mt19937_64 rng(mix_seed(options.seed, (std::uint64_t{1} << 32) + b));
        base_x[b] = L * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }

    // values[d][i] for d = K, d_x K, d_y K, d_z K.
    std::vector<std::vector<cplx>> k(4, std::vector<cplx>(samples.size()));
    const std::vector<KernelDeriv> orders{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    if (!constant) {
        // An x-independent kernel depends on (u, v) only: one pass at x = 0.
        const int passes = sigma.x_independent() ? 1 : B;
        for (int b = 0; b < passes; ++b) {
            const double x = sigma.x_independent() ? 0.0 : base_x[b];
            std::vector<std::pair<double, double>> yz;
            std::vector<std::size_t> which;
            for (std::size_t i = 0; i < samples.size(); ++i)
                if (sigma.x_independent() || samples[i].base == b) {
                    yz.push_back({x - samples[i].u, x - samples[i].v});
                    which.push_back(i);
                }
            if (yz.empty()) continue;
            const KernelBatch kb = kernel_batch(sigma, {options.level}, x, yz, orders, kopt);
            for (std::size_t d = 0; d < 4; ++d)
                for (std::size_t t = 0; t < which.size(); ++t) k[d][which[t]] = kb.values[d][t];
        }
    }

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        CzOctave& oct = rep.octaves[s.octave];
        ++oct.samples;
        if (constant) continue;
        const double x = base_x[s.base];
        const double y = wrap_to_period(x - s.u, L), z = wrap_to_period(x - s.v, L);
        const double S = std::abs(s.u) + std::abs(s.v) + std::abs(torus_wrap(s.u - s.v, L));
        const double w = slot == 1 ? y : z;
        const cplx diff = ia({w, 0}) - ia({x, 0});
        const cplx K = k[0][i];
        const cplx gx = -ida({x, 0}) * K + diff * k[1][i];
        const cplx gy = (slot == 1 ? ida({y, 0}) * K : 0.0) + diff * k[2][i];
        const cplx gz = (slot == 2 ? ida({z, 0}) * K : 0.0) + diff * k[3][i];
        const double grad = std::sqrt(std::norm(gx) + std::norm(gy) + std::norm(gz));
        oct.size_sup = std::max(oct.size_sup, std::abs(diff * K) * S * S);
        oct.gradient_sup = std::max(oct.gradient_sup, grad * S * S * S);
    }

    const auto variation = [&](double CzOctave::*field) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& o : rep.octaves) lo = std::min(lo, o.*field), hi = std::max(hi, o.*field);
        if (hi == 0.0) return 1.0;
        return lo > 0.0 ? hi / lo : INFINITY;
    };
    rep.size_variation = variation(&CzOctave::size_sup);
    rep.gradient_variation = variation(&CzOctave::gradient_sup);
    rep.verdict = rep.size_variation < 2.0 && rep.gradient_variation < 2.0 ? "BOUNDED" : "UNSTABLE";
    return rep;
}

} // namespace bilop
