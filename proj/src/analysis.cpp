#include "bilop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include "bilop/catalog.hpp"
#include "bilop/expr.hpp"

namespace bilop {
namespace {

double h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

int log2_exact(int n)
{
    int s = 0;
    while ((1 << s) < n) ++s;
    return s;
}

double wrap_to(double d, double period) { return d - period * std::round(d / period); }

double sup_abs(const GridFunction& f) { return lp_norm(f, std::numeric_limits<double>::infinity()); }

// exp(-1/(1-|s|^2)) as a symbol in x, so its x-derivatives come out of the
// exact Taylor machinery.
const Symbol& raw_profile(int dim)
{
    static const Symbol one_d =
        symbol_from_expr(expr::Expr::parse("exp(-1/(1-x^2))"), {}, 1, "bump_profile_1d");
    static const Symbol two_d =
        symbol_from_expr(expr::Expr::parse("exp(-1/(1-x1^2-x2^2))"), {}, 2, "bump_profile_2d");
    return dim == 1 ? one_d : two_d;
}

std::vector<std::array<int, 2>> multi_indices(int dim, int order)
{
    std::vector<std::array<int, 2>> out;
    for (int a1 = 0; a1 <= order; ++a1)
        for (int a2 = 0; a2 <= (dim == 2 ? order - a1 : 0); ++a2) out.push_back({a1, a2});
    return out;
}

double raw_derivative(int dim, const std::array<int, 2>& alpha, const Vec& s)
{
    if (s[0] * s[0] + s[1] * s[1] >= 1.0) return 0.0;
    DerivOrder d;
    d.alpha = alpha;
    return raw_profile(dim).derivative(d, s, {}, {}).real();
}

// sup |d^alpha h(1 - |s|^2)| per multi-index |alpha| <= M, sampled on a fine grid.
std::vector<double> derivative_sups(int dim, int order)
{
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::vector<double>> cache;
    std::lock_guard lock(mutex);
    const auto key = std::make_pair(dim, order);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    const auto alphas = multi_indices(dim, order);
    std::vector<double> best(alphas.size(), 0.0);
    auto visit = [&](const Vec& s) {
        for (std::size_t i = 0; i < alphas.size(); ++i)
            best[i] = std::max(best[i], std::abs(raw_derivative(dim, alphas[i], s)));
    };
    if (dim == 1) {
        const int n = 20000;
        for (int i = 0; i <= n; ++i) visit({-1.0 + 2.0 * i / n, 0.0});
    } else {
        const int n = 200;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) visit({-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n});
    }
    cache.emplace(key, best);
    return best;
}

GridFunction modulated_bump(const Grid& grid, int k, const Vec& center, double radius)
{
    const double L = grid.period();
    const int dim = grid.dim();
    return GridFunction::sample(grid, [&](const Vec& x) -> cplx {
        double r2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double d = wrap_to(x[i] - center[i], L) / radius;
            r2 += d * d;
        }
        const double phase = 2.0 * pi * k * x[0] / L;
        return h(1.0 - r2) * cplx(std::cos(phase), std::sin(phase));
    });
}

struct Spread {
    double slope = 0.0;
    double spread = 1.0;
};

Spread fit_rows(const std::vector<ScanRow>& rows)
{
    std::vector<double> ks, vs;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        if (!(r.ratio > kZeroRatio)) continue;
        ks.push_back(r.k);
        vs.push_back(r.ratio);
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    Spread s;
    if (ks.empty()) return s;
    s.slope = log_log_slope(ks, vs);
    s.spread = hi / lo;
    return s;
}

void require_k_list(const std::vector<int>& k_list, const Grid& grid)
{
    if (k_list.empty()) throw InvalidInput("k_list is empty");
    for (int k : k_list)
        if (k < 1 || k >= grid.points() / 2)
            throw InvalidInput("wavenumber " + std::to_string(k) + " outside [1, N/2)");
}

} // namespace

double log_log_slope(const std::vector<double>& params, const std::vector<double>& values)
{
    if (params.size() != values.size()) throw InvalidInput("log_log_slope: size mismatch");
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(params[i] > 0.0 && values[i] > 0.0)) continue;
        const double x = std::log(params[i]), y = std::log(values[i]);
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || den <= 0.0) return 0.0;
    return (n * sxy - sx * sy) / den;
}

double gradient_sup(const GridFunction& a)
{
    const Grid& grid = a.grid();
    std::vector<double> sq(grid.size(), 0.0);
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const GridFunction d = spectral_derivative(a, axis);
        for (std::size_t j = 0; j < grid.size(); ++j) sq[j] += std::norm(d[j]);
    }
    double best = 0.0;
    for (double v : sq) best = std::max(best, v);
    return std::sqrt(best);
}

// -- bumps ----------------------------------------------------------------

BumpFunction::BumpFunction(int dim, int order, Vec center, double scale, double period, Vec offset, double inner)
    : dim_(dim), order_(order), center_(center), scale_(scale), period_(period), offset_(offset), inner_(inner)
{
    if (dim != 1 && dim != 2) throw InvalidInput("bump dimension must be 1 or 2");
    if (order < 0) throw InvalidInput("bump order must be >= 0");
    if (!(period > 0.0)) throw InvalidInput("period must be positive");
    if (!(scale > 0.0)) throw InvalidInput("bump scale must be positive");
    if (scale > period / 4) throw DomainError("bump scale exceeds a quarter period");
    if (dim == 1) offset_[1] = 0.0;
    if (!(inner > 0.0) || std::hypot(offset_[0], offset_[1]) + inner > 1.0 + 1e-12)
        throw InvalidInput("bump inner profile must fit in the unit ball");

    const auto alphas = multi_indices(dim, order);
    const auto sups = derivative_sups(dim, order);
    double worst = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i)
        worst = std::max(worst, sups[i] * std::pow(inner, -(alphas[i][0] + alphas[i][1])));
    norm_ = 1.0 / (worst * 1.001);
}

Vec BumpFunction::inner_point(const Vec& s) const
{
    return {(s[0] - offset_[0]) / inner_, dim_ == 2 ? (s[1] - offset_[1]) / inner_ : 0.0};
}

double BumpFunction::profile(const Vec& s) const
{
    const Vec p = inner_point(s);
    return norm_ * h(1.0 - p[0] * p[0] - p[1] * p[1]);
}

double BumpFunction::profile_derivative(const std::array<int, 2>& alpha, const Vec& s) const
{
    if (dim_ == 1 && alpha[1] != 0) return 0.0;
    const int total = alpha[0] + alpha[1];
    return norm_ * std::pow(inner_, -total) * raw_derivative(dim_, alpha, inner_point(s));
}

double BumpFunction::operator()(const Vec& x) const
{
    Vec s{};
    for (int i = 0; i < dim_; ++i) s[i] = wrap_to(x[i] - center_[i], period_) / scale_;
    return profile(s);
}

GridFunction BumpFunction::sample(const Grid& grid) const
{
    if (grid.dim() != dim_) throw InvalidInput("bump and grid dimensions differ");
    if (std::abs(grid.period() - period_) > 1e-12 * period_) throw InvalidInput("bump and grid periods differ");
    return GridFunction::sample(grid, [this](const Vec& x) -> cplx { return (*this)(x); });
}

// -- BMO ------------------------------------------------------------------

BmoReport bmo_norm(const GridFunction& b, int s_max)
{
    const Grid& grid = b.grid();
    const int N = grid.points();
    const int dim = grid.dim();
    if (s_max < 0 || s_max > log2_exact(N))
        throw InvalidInput("bmo_norm: s_max must lie in [0, log2 N] = [0, " + std::to_string(log2_exact(N)) + "]");

    BmoReport report;
    report.s_max = s_max;

    // Keep the total work near the apply budget by thinning window positions.
    auto work = [&](int stride) {
        double w = 0.0;
        for (int s = 1; s <= s_max; ++s) {
            const double side = double(N >> s);
            const double positions = std::pow(double((N + stride - 1) / stride), dim);
            w += positions * std::pow(side, dim);
        }
        return w;
    };
    int stride = 1;
    while (stride < N && work(stride) > double(kApplyBudget)) stride *= 2;
    report.stride = stride;

    auto at = [&](int i1, int i2) -> cplx {
        i1 %= N;
        i2 %= N;
        return dim == 1 ? b[std::size_t(i1)] : b[std::size_t(i1) * N + i2];
    };

    for (int s = 0; s <= s_max; ++s) {
        const int side = N >> s;
        const int step = s == 0 ? N : stride; // the full period looks the same from every position
        const int count2 = dim == 2 ? side : 1;
        const double cells = double(side) * count2;
        double best = 0.0;
        for (int p1 = 0; p1 < N; p1 += step)
            for (int p2 = 0; p2 < (dim == 2 ? N : 1); p2 += step) {
                cplx mean = 0.0;
                for (int i = 0; i < side; ++i)
                    for (int j = 0; j < count2; ++j) mean += at(p1 + i, p2 + j);
                mean /= cells;
                double osc = 0.0;
                for (int i = 0; i < side; ++i)
                    for (int j = 0; j < count2; ++j) osc += std::abs(at(p1 + i, p2 + j) - mean);
                best = std::max(best, osc / cells);
            }
        report.scale_sup.push_back(best);
        report.cumulative.push_back(std::max(best, report.cumulative.empty() ? 0.0 : report.cumulative.back()));
    }
    report.value = report.cumulative.back();
    return report;
}

bool bmo_plateaued(const BmoReport& report)
{
    const auto& c = report.cumulative;
    if (c.empty() || !std::isfinite(c.back())) return false;
    const double earlier = c[std::size_t(std::max(0, int(c.size()) - 3))];
    return c.back() - earlier <= 0.01 * c.back() + 1e-14;
}

// -- T(1) conditions ------------------------------------------------------

T1Report check_t1_conditions(const Symbol& sigma, const GridFunction& a, const T1Options& options)
{
    const Grid& grid = a.grid();
    if (sigma.dim() != grid.dim()) throw InvalidInput("symbol and multiplier dimensions differ");
    require_dense_budget(grid);
    const int n = grid.dim();
    const int s_max = options.s_max > 0 ? options.s_max : log2_exact(grid.points()) - 1;

    T1Report report;
    report.symbol = sigma.name();

    std::vector<Symbol> pieces;
    try {
        pieces = ftc_decompose(sigma, options.quad_points, grid.period());
        report.decomposition_available = true;
    } catch (const Error& e) {
        report.note = std::string("decomposition unavailable: ") + e.what();
    }

    const OperatorPtr T = make_operator(sigma, grid);
    const GridFunction one = GridFunction::constant(grid, 1.0);

    // D_j a including the unpaired mode, so that the two routes see the same
    // spectrum of a.
    std::vector<GridFunction> grad;
    for (int j = 0; j < n; ++j)
        grad.push_back(apply_multiplier(a, [j](const Vec& xi) -> cplx { return xi[j]; }, false));

    bool all_ok = true;
    for (int slot = 1; slot <= 2; ++slot) {
        const OperatorPtr C = commutator(T, slot, a);
        T1Slot entry{slot, C->apply(one, one), std::nullopt, std::numeric_limits<double>::quiet_NaN(), false, {}, {}, {}};
        if (report.decomposition_available) {
            GridFunction sum(grid);
            for (int j = 0; j < n; ++j) {
                const OperatorPtr Tj = make_operator(pieces[std::size_t(slot == 1 ? j : n + j)], grid);
                sum += slot == 1 ? Tj->apply(grad[std::size_t(j)], one) : Tj->apply(one, grad[std::size_t(j)]);
            }
            const double scale = std::max(1.0, sup_abs(entry.direct));
            entry.residual = sup_abs(entry.direct - sum) / scale;
            entry.agree = entry.residual <= 1e-8;
            entry.decomposed = std::move(sum);
        }
        entry.bmo_direct = bmo_norm(entry.direct, s_max);
        entry.bmo_transpose1 = bmo_norm(transpose(C, 1)->apply(one, one), s_max);
        entry.bmo_transpose2 = bmo_norm(transpose(C, 2)->apply(one, one), s_max);
        for (const BmoReport* r : {&entry.bmo_direct, &entry.bmo_transpose1, &entry.bmo_transpose2})
            all_ok = all_ok && std::isfinite(r->value) && bmo_plateaued(*r);
        all_ok = all_ok && (entry.agree || !report.decomposition_available);
        report.slots.push_back(std::move(entry));
    }
    if (!all_ok)
        report.verdict = "FAIL";
    else
        report.verdict = report.decomposition_available ? "PASS" : "PARTIAL";
    return report;
}

// -- weak boundedness -----------------------------------------------------

const char* to_string(WbpConfig c) { return c == WbpConfig::common_center ? "common-center" : "separated"; }

WbpConfig wbp_config_from_string(const std::string& s)
{
    if (s == "common-center") return WbpConfig::common_center;
    if (s == "separated") return WbpConfig::separated;
    throw InvalidInput("unknown WBP configuration '" + s + "' (expected common-center or separated)");
}

WbpReport wbp_scan(const OperatorPtr& T, int order, const std::vector<double>& t_list, WbpConfig config)
{
    const Grid& grid = T->grid();
    const double L = grid.period();
    if (order < 2) throw InvalidInput("wbp_scan: bump order M must be >= 2");
    if (t_list.empty()) throw InvalidInput("wbp_scan: empty scale list");
    const auto [lo, hi] = std::minmax_element(t_list.begin(), t_list.end());
    if (!(*lo > 0.0)) throw InvalidInput("wbp_scan: scales must be positive");
    if (*hi > L / 8 * (1 + 1e-12)) throw DomainError("wbp_scan: scale exceeds L/8");
    if (*hi / *lo < 8.0 * (1 - 1e-12)) throw InvalidInput("wbp_scan: scales must span at least 3 octaves");

    WbpReport report;
    report.config = config;
    report.order = order;
    report.center = {L / 2, grid.dim() == 2 ? L / 2 : 0.0};
    report.rows.resize(t_list.size());
    parallel_for(t_list.size(), [&](std::size_t i) {
        const double t = t_list[i];
        Vec c1 = report.center;
        if (config == WbpConfig::separated) c1[0] += 4.0 * t;
        const GridFunction p1 = BumpFunction(grid.dim(), order, c1, t, L, {0.2, 0.0}, 0.8).sample(grid);
        const GridFunction p2 = BumpFunction(grid.dim(), order, report.center, t, L).sample(grid);
        const GridFunction& p3 = p2;
        const double P = std::abs(pairing(T->apply(p1, p2), p3));
        report.rows[i] = {t, P, P / std::pow(t, grid.dim())};
    });

    double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
    for (const auto& r : report.rows) {
        cmin = std::min(cmin, r.constant);
        cmax = std::max(cmax, r.constant);
    }
    if (cmax == 0.0)
        report.variation = 1.0;
    else
        report.variation = cmin > 0.0 ? cmax / cmin : std::numeric_limits<double>::infinity();
    report.verdict = report.variation < 4.0 ? "PASS" : "FAIL";
    return report;
}

// -- norm scans -----------------------------------------------------------

double HolderTriple::r() const
{
    const double s = (std::isinf(p) ? 0.0 : 1.0 / p) + (std::isinf(q) ? 0.0 : 1.0 / q);
    return s == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / s;
}

void require_holder(const HolderTriple& e)
{
    if (!(e.p >= 1.0) || !(e.q >= 1.0)) throw InvalidInput("exponents p and q must be >= 1");
}

void require_family(const std::string& family)
{
    for (const auto& f : family_catalog())
        if (f.name == family) return;
    throw InvalidInput("unknown test family '" + family + "' (expected modulated-bump, plane-wave or random-trig)");
}

std::pair<GridFunction, GridFunction> family_member(const std::string& family, const Grid& grid, int k,
                                                    std::uint64_t seed)
{
    require_family(family);
    const double L = grid.period();
    const Vec mid{L / 2, grid.dim() == 2 ? L / 2 : 0.0};
    if (family == "modulated-bump") {
        GridFunction f = modulated_bump(grid, k, mid, L / 4);
        return {f, f};
    }
    if (family == "plane-wave") {
        GridFunction f = GridFunction::sample(
            grid, [&](const Vec& x) -> cplx { return std::polar(1.0, 2.0 * pi * k * x[0] / L); });
        return {f, f};
    }
    auto random_poly = [&](std::uint64_t stream) {
        std::mt19937_64 rng(mix_seed(seed, 2 * std::uint64_t(k) + stream));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<cplx> c;
        for (int j = 0; j < 5; ++j) c.emplace_back(u(rng), u(rng));
        return GridFunction::sample(grid, [&](const Vec& x) -> cplx {
            cplx acc = 0.0;
            for (int j = 0; j < 5; ++j) acc += c[std::size_t(j)] * std::polar(1.0, 2.0 * pi * (k - 2 + j) * x[0] / L);
            return acc;
        });
    };
    return {random_poly(0), random_poly(1)};
}

NormScanReport norm_scan(const OperatorPtr& U, const HolderTriple& e, const std::string& family,
                         const std::vector<int>& k_list, std::uint64_t seed)
{
    require_holder(e);
    require_family(family);
    const Grid& grid = U->grid();
    require_k_list(k_list, grid);

    NormScanReport report;
    report.exponents = e;
    report.family = family;
    report.description = U->describe();
    report.rows.resize(k_list.size());
    parallel_for(k_list.size(), [&](std::size_t i) {
        const auto [f, g] = family_member(family, grid, k_list[i], seed);
        const double den = lp_norm(f, e.p) * lp_norm(g, e.q);
        report.rows[i] = {k_list[i], den > 0.0 ? lp_norm(U->apply(f, g), e.r()) / den : 0.0};
    });
    const Spread s = fit_rows(report.rows);
    report.slope = s.slope;
    report.spread = s.spread;
    report.verdict = s.slope < 0.2 && s.spread < 4.0 ? "BOUNDED" : "GROWING";
    return report;
}

double kato_ponce_ratio(double alpha, const HolderTriple& e, const GridFunction& f, const GridFunction& g)
{
    if (!(alpha > 0.0)) throw InvalidInput("kato_ponce: alpha must be positive");
    require_holder(e);
    require_same_grid(f.grid(), g.grid(), "kato_ponce");
    const double num = lp_norm(fractional_derivative(f * g, alpha), e.r());
    const double den = lp_norm(fractional_derivative(f, alpha), e.p) * lp_norm(g, e.q) +
                       lp_norm(f, e.p) * lp_norm(fractional_derivative(g, alpha), e.q);
    return den > 0.0 ? num / den : 0.0;
}

KatoPonceReport kato_ponce_check(double alpha, const HolderTriple& e, const std::string& family,
                                 const std::vector<int>& k_list, const Grid& grid, std::uint64_t seed)
{
    if (!(alpha > 0.0)) throw InvalidInput("kato_ponce: alpha must be positive");
    require_holder(e);
    require_family(family);
    require_k_list(k_list, grid);

    KatoPonceReport report;
    report.alpha = alpha;
    report.exponents = e;
    report.family = family;
    report.rows.resize(k_list.size());
    parallel_for(k_list.size(), [&](std::size_t i) {
        const auto [f, g] = family_member(family, grid, k_list[i], seed);
        report.rows[i] = {k_list[i], kato_ponce_ratio(alpha, e, f, g)};
    });
    for (const auto& r : report.rows) report.sup = std::max(report.sup, r.ratio);
    report.slope = fit_rows(report.rows).slope;
    report.verdict = report.sup < 10.0 && report.slope < 0.2 ? "PASS" : "FAIL";
    return report;
}

// -- compactness ----------------------------------------------------------

int CompactnessProbe::covering_at(double fraction) const
{
    for (const auto& [eps, count] : covering)
        if (std::abs(eps - fraction) < 1e-12) return count;
    throw InvalidInput("no covering count recorded at eps fraction " + std::to_string(fraction));
}

namespace {

std::vector<GridFunction> probe_outputs(const OperatorPtr& U, const CompactnessOptions& options)
{
    if (options.family_size < 50) throw InvalidInput("compactness_probe: family_size must be >= 50");
    const HolderTriple& e = options.exponents;
    require_holder(e);
    const Grid& grid = U->grid();
    const int N = grid.points();
    const double L = grid.period();
    const std::size_t count = std::size_t(options.family_size);

    std::vector<GridFunction> outputs(count, GridFunction(grid));
    parallel_for(count, [&](std::size_t i) {
        std::mt19937_64 rng(mix_seed(options.seed, i));
        std::uniform_int_distribution<int> kd(1, std::max(1, N / 4));
        std::uniform_real_distribution<double> cd(0.0, L);
        const Vec c{cd(rng), grid.dim() == 2 ? cd(rng) : 0.0};
        const int kf = kd(rng);
        const int kg = kd(rng);
        GridFunction f = modulated_bump(grid, kf, c, L / 16);
        GridFunction g = modulated_bump(grid, kg, c, L / 16);
        f *= cplx(1.0 / lp_norm(f, e.p));
        g *= cplx(1.0 / lp_norm(g, e.q));
        outputs[i] = U->apply(f, g);
    });
    return outputs;
}

CompactnessProbe summarize(const std::vector<GridFunction>& outputs, const CompactnessOptions& options,
                           double scale)
{
    const double r = options.exponents.r();
    const Grid& grid = outputs.front().grid();
    CompactnessProbe probe;
    probe.family_size = options.family_size;
    for (const auto& u : outputs) {
        probe.output_norms.push_back(lp_norm(u, r));
        probe.sup_norm = std::max(probe.sup_norm, probe.output_norms.back());
    }

    double running = 0.0;
    for (int j = 1; j <= grid.points() / 8; ++j) {
        for (const auto& u : outputs) running = std::max(running, lp_norm(translate(u, j) - u, r));
        probe.shifts.push_back(j * grid.spacing());
        probe.equicontinuity.push_back(running);
    }

    probe.scale = scale > 0.0 ? scale : probe.sup_norm;
    for (double fraction : {0.5, 0.2, 0.1}) {
        // Inputs have unit norm, so distances below 1e-13 are rounding.
        const double eps = std::max(fraction * probe.scale, kZeroRatio);
        std::vector<std::size_t> centers;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            bool covered = false;
            for (std::size_t c : centers)
                if (lp_norm(outputs[i] - outputs[c], r) <= eps) {
                    covered = true;
                    break;
                }
            if (!covered) centers.push_back(i);
        }
        probe.covering.emplace_back(fraction, int(centers.size()));
    }
    return probe;
}

double sup_output(const std::vector<GridFunction>& outputs, double r)
{
    double best = 0.0;
    for (const auto& u : outputs) best = std::max(best, lp_norm(u, r));
    return best;
}

} // namespace

CompactnessProbe compactness_probe(const OperatorPtr& U, const CompactnessOptions& options)
{
    return summarize(probe_outputs(U, options), options, options.scale);
}

CompactnessComparison compare_compactness(const OperatorPtr& smooth, const OperatorPtr& rough,
                                          const CompactnessOptions& options)
{
    require_same_grid(smooth->grid(), rough->grid(), "compare_compactness");
    const auto us = probe_outputs(smooth, options);
    const auto ur = probe_outputs(rough, options);
    const double r = options.exponents.r();
    const double scale = options.scale > 0.0 ? options.scale : std::max(sup_output(us, r), sup_output(ur, r));

    CompactnessComparison c;
    c.smooth = summarize(us, options, scale);
    c.rough = summarize(ur, options, scale);
    c.curve_below = true;
    for (std::size_t j = 0; j < c.smooth.equicontinuity.size(); ++j)
        c.curve_below = c.curve_below && c.smooth.equicontinuity[j] < c.rough.equicontinuity[j];
    c.covering_halved = 2 * c.smooth.covering_at(0.2) <= c.rough.covering_at(0.2);
    c.verdict = c.curve_below && c.covering_halved ? "consistent with compactness" : "not consistent with compactness";
    return c;
}

// -- linear commutator and converse ---------------------------------------

CalderonResult calderon_demo(const GridFunction& a, const GridFunction& f)
{
    require_same_grid(a.grid(), f.grid(), "calderon_demo");
    if (a.grid().dim() != 1) throw InvalidInput("calderon_demo is 1D only");
    CalderonResult out{fractional_derivative(a * f, 1.0) - a * fractional_derivative(f, 1.0), 0.0};
    const double den = gradient_sup(a) * lp_norm(f, 2.0);
    out.ratio = den > 0.0 ? lp_norm(out.output, 2.0) / den : 0.0;
    return out;
}

CalderonScan calderon_scan(const GridFunction& a, const std::string& family, const std::vector<int>& k_list,
                           std::uint64_t seed)
{
    require_family(family);
    require_k_list(k_list, a.grid());
    CalderonScan scan;
    scan.family = family;
    scan.rows.resize(k_list.size());
    parallel_for(k_list.size(), [&](std::size_t i) {
        const GridFunction f = family_member(family, a.grid(), k_list[i], seed).first;
        scan.rows[i] = {k_list[i], calderon_demo(a, f).ratio};
    });
    const Spread s = fit_rows(scan.rows);
    scan.slope = s.slope;
    scan.spread = s.spread;
    scan.verdict = s.slope < 0.2 && s.spread < 4.0 ? "BOUNDED" : "GROWING";
    return scan;
}

ConverseReport converse_check(const GridFunction& a)
{
    const Grid& grid = a.grid();
    if (grid.dim() != 1) throw InvalidInput("converse_check is 1D only");
    // The bumps must span at least 8 nodes to be resolved.
    if (grid.points() < 256) throw InvalidInput("converse_check needs N >= 256");
    const double L = grid.period();
    const OperatorPtr C = commutator(make_operator(catalog_symbol("xi", 1, L), grid), 1, a);

    ConverseReport report;
    report.bump_scale = L / 64;
    std::vector<double> ratios(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t j) {
        const GridFunction phi = BumpFunction(1, 2, grid.node(j), report.bump_scale, L).sample(grid);
        const double n4 = lp_norm(phi, 4.0);
        ratios[j] = lp_norm(C->apply(phi, phi), 2.0) / (n4 * n4);
    });
    report.operator_estimate = *std::max_element(ratios.begin(), ratios.end());
    report.gradient_estimate = gradient_sup(a);
    const double big = std::max(report.operator_estimate, report.gradient_estimate);
    if (big <= 1e-13)
        report.relative_gap = 0.0;
    else
        report.relative_gap = report.gradient_estimate > 0.0
                                  ? std::abs(report.operator_estimate - report.gradient_estimate) /
                                        report.gradient_estimate
                                  : std::numeric_limits<double>::infinity();
    report.verdict = report.relative_gap < 0.2 ? "PASS" : "FAIL";
    return report;
}

} // namespace bilop
