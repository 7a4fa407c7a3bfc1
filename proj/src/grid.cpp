#include "bilop/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "fftw_planner.hpp"

namespace bilop {

std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (dim, N, sign) and kept for the
// lifetime of the process.
class PlanCache {
public:
    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int dim, int n, int sign)
    {
        std::lock_guard lock(fftw_planner_mutex());
        const auto key = std::make_tuple(dim, n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        const std::size_t total = dim == 1 ? std::size_t(n) : std::size_t(n) * n;
        std::vector<cplx> in(total), out(total);
        auto* pin = reinterpret_cast<fftw_complex*>(in.data());
        auto* pout = reinterpret_cast<fftw_complex*>(out.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(n, pin, pout, sign, flags)
                                  : fftw_plan_dft_2d(n, n, pin, pout, sign, flags);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    PlanCache() = default;
    ~PlanCache()
    {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void dft(const Grid& grid, std::span<const cplx> in, std::span<cplx> out, int sign)
{
    fftw_plan plan = PlanCache::instance().get(grid.dim(), grid.points(), sign);
    // Out-of-place complex transforms preserve their input.
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace

Grid::Grid(int dim, int points, double period) : dim_(dim), points_(points), period_(period)
{
    if (dim != 1 && dim != 2) throw InvalidInput("grid dimension must be 1 or 2");
    if (!is_power_of_two(points) || points < 8)
        throw InvalidInput("points per axis must be a power of two >= 8, got " + std::to_string(points));
    if (!(period > 0.0) || !std::isfinite(period)) throw InvalidInput("period must be positive");
}

std::size_t Grid::size() const
{
    return dim_ == 1 ? std::size_t(points_) : std::size_t(points_) * points_;
}

double Grid::cell_volume() const
{
    const double dx = spacing();
    return dim_ == 1 ? dx : dx * dx;
}

std::array<int, 2> Grid::axis_indices(std::size_t flat) const
{
    if (dim_ == 1) return {int(flat), 0};
    return {int(flat / points_), int(flat % points_)};
}

Vec Grid::node(std::size_t flat) const
{
    const auto idx = axis_indices(flat);
    const double dx = spacing();
    if (dim_ == 1) return {idx[0] * dx, 0.0};
    return {idx[0] * dx, idx[1] * dx};
}

Vec Grid::frequency(std::size_t flat) const
{
    const auto idx = axis_indices(flat);
    const double dk = freq_spacing();
    if (dim_ == 1) return {wavenumber(idx[0]) * dk, 0.0};
    return {wavenumber(idx[0]) * dk, wavenumber(idx[1]) * dk};
}

bool Grid::has_nyquist(std::size_t flat) const
{
    const auto idx = axis_indices(flat);
    return is_nyquist(idx[0]) || (dim_ == 2 && is_nyquist(idx[1]));
}

double Grid::wrap(double d) const
{
    double r = std::fmod(d, period_);
    if (r < -0.5 * period_) r += period_;
    if (r >= 0.5 * period_) r -= period_;
    return r;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what)
{
    if (!(a == b)) throw InvalidInput(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(Grid grid) : grid_(grid), values_(grid.size()) {}

GridFunction::GridFunction(Grid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values))
{
    if (values_.size() != grid_.size())
        throw InvalidInput("sample count " + std::to_string(values_.size()) +
                           " does not match grid size " + std::to_string(grid_.size()));
}

GridFunction GridFunction::sample(const Grid& grid, const std::function<cplx(const Vec&)>& f)
{
    GridFunction out(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) out.values_[j] = f(grid.node(j));
    return out;
}

GridFunction GridFunction::constant(const Grid& grid, cplx c)
{
    return GridFunction(grid, std::vector<cplx>(grid.size(), c));
}

GridFunction& GridFunction::operator+=(const GridFunction& other)
{
    require_same_grid(grid_, other.grid_, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other)
{
    require_same_grid(grid_, other.grid_, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(const GridFunction& other)
{
    require_same_grid(grid_, other.grid_, "operator*=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(cplx c)
{
    for (auto& v : values_) v *= c;
    return *this;
}

cplx GridFunction::interpolate(const Vec& x) const { return Interpolant(*this)(x); }

Interpolant::Interpolant(const GridFunction& f) : coefficients_(fft_forward(f)) {}

cplx Interpolant::operator()(const Vec& x) const
{
    const Grid& grid = coefficients_.grid();
    const double volume = grid.dim() == 1 ? grid.period() : grid.period() * grid.period();
    cplx sum = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const cplx c = coefficients_[k];
        if (c == 0.0) continue;
        const Vec xi = grid.frequency(k);
        if (!grid.has_nyquist(k)) {
            sum += c * std::polar(1.0, xi[0] * x[0] + xi[1] * x[1]);
            continue;
        }
        // The unpaired mode is split symmetrically so that real data stays real.
        const auto idx = grid.axis_indices(k);
        Vec flipped = xi;
        if (grid.is_nyquist(idx[0])) flipped[0] = -flipped[0];
        if (grid.dim() == 2 && grid.is_nyquist(idx[1])) flipped[1] = -flipped[1];
        sum += 0.5 * c * (std::polar(1.0, xi[0] * x[0] + xi[1] * x[1]) +
                          std::polar(1.0, flipped[0] * x[0] + flipped[1] * x[1]));
    }
    return sum / volume;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
GridFunction operator*(cplx c, GridFunction a) { return a *= c; }

SpectralFunction::SpectralFunction(Grid grid, std::vector<cplx> coefficients)
    : grid_(grid), coefficients_(std::move(coefficients))
{
    if (coefficients_.size() != grid_.size())
        throw InvalidInput("coefficient count does not match grid size");
}

// ---------------------------------------------------------------------------

SpectralFunction fft_forward(const GridFunction& f)
{
    const Grid& grid = f.grid();
    std::vector<cplx> out(grid.size());
    dft(grid, f.values(), out, FFTW_FORWARD);
    const double w = grid.cell_volume();
    for (auto& c : out) c *= w;
    return SpectralFunction(grid, std::move(out));
}

GridFunction fft_inverse(const SpectralFunction& fhat)
{
    const Grid& grid = fhat.grid();
    std::vector<cplx> out(grid.size());
    dft(grid, fhat.coefficients(), out, FFTW_BACKWARD);
    const double volume = grid.dim() == 1 ? grid.period() : grid.period() * grid.period();
    for (auto& c : out) c /= volume;
    return GridFunction(grid, std::move(out));
}

double lp_norm(const GridFunction& f, double p)
{
    if (std::isnan(p) || p < 1.0) throw InvalidInput("lp_norm: exponent must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : f.values()) m = std::max(m, std::abs(v));
        return m;
    }
    double sum = 0.0;
    if (p == 2.0) {
        for (const auto& v : f.values()) sum += std::norm(v);
        return std::sqrt(sum * f.grid().cell_volume());
    }
    for (const auto& v : f.values()) sum += std::pow(std::abs(v), p);
    return std::pow(sum * f.grid().cell_volume(), 1.0 / p);
}

cplx pairing(const GridFunction& u, const GridFunction& v)
{
    require_same_grid(u.grid(), v.grid(), "pairing");
    cplx sum = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) sum += u[j] * v[j];
    return sum * u.grid().cell_volume();
}

GridFunction apply_multiplier(const GridFunction& f, const std::function<cplx(const Vec&)>& m,
                              bool zero_nyquist)
{
    SpectralFunction fhat = fft_forward(f);
    const Grid& grid = f.grid();
    auto coeffs = fhat.coefficients();
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (zero_nyquist && grid.has_nyquist(k))
            coeffs[k] = 0.0;
        else
            coeffs[k] *= m(grid.frequency(k));
    }
    return fft_inverse(fhat);
}

GridFunction fractional_derivative(const GridFunction& f, double alpha)
{
    if (!(alpha >= 0.0)) throw InvalidInput("fractional_derivative: alpha must be >= 0");
    if (alpha == 0.0) return f;
    return apply_multiplier(f, [alpha](const Vec& xi) -> cplx {
        const double r = std::hypot(xi[0], xi[1]);
        return r == 0.0 ? 0.0 : std::pow(r, alpha);
    });
}

GridFunction spectral_derivative(const GridFunction& f, int axis)
{
    if (axis < 0 || axis >= f.grid().dim()) throw InvalidInput("spectral_derivative: bad axis");
    return apply_multiplier(f, [axis](const Vec& xi) -> cplx { return xi[axis]; }, true);
}

GridFunction translate(const GridFunction& f, int shift)
{
    const Grid& grid = f.grid();
    const int n = grid.points();
    GridFunction out(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        auto idx = grid.axis_indices(j);
        const int moved = ((idx[0] + shift) % n + n) % n;
        const std::size_t src = grid.dim() == 1 ? std::size_t(moved) : std::size_t(moved) * n + idx[1];
        out[j] = f[src];
    }
    return out;
}

void write_csv(std::ostream& out, const GridFunction& f)
{
    const Grid& grid = f.grid();
    out << (grid.dim() == 1 ? "index,x,re,im\n" : "index,x1,x2,re,im\n");
    out.precision(17);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const Vec x = grid.node(j);
        out << j << ',' << x[0] << ',';
        if (grid.dim() == 2) out << x[1] << ',';
        out << f[j].real() << ',' << f[j].imag() << '\n';
    }
}

GridFunction read_csv(std::istream& in, const Grid& grid)
{
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("read_csv: missing header");
    const std::string expected = grid.dim() == 1 ? "index,x,re,im" : "index,x1,x2,re,im";
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected) throw InvalidInput("read_csv: expected header '" + expected + "'");

    std::vector<cplx> values(grid.size());
    std::vector<bool> seen(grid.size(), false);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        std::size_t index = 0;
        double x1 = 0, x2 = 0, re = 0, im = 0;
        row >> index >> x1;
        if (grid.dim() == 2) row >> x2;
        row >> re >> im;
        if (!row || index >= grid.size() || seen[index])
            throw InvalidInput("read_csv: malformed row " + std::to_string(rows + 2));
        values[index] = {re, im};
        seen[index] = true;
        ++rows;
    }
    if (rows != grid.size()) throw InvalidInput("read_csv: sample count does not match grid");
    return GridFunction(grid, std::move(values));
}

} // namespace bilop
