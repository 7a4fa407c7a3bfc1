#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bilop/common.hpp"

namespace bilop {

/**
 * Grid: periodic discretization of the torus [0, L)^n, n in {1, 2}.
 *
 * Nodes are x_j = j L / N and frequencies xi_k = 2 pi k / L with
 * k in {-N/2, ..., N/2 - 1}. Spectral arrays are stored in transform order:
 * index i carries wavenumber i for i < N/2 and i - N otherwise. In 2D the
 * flat index is i1 * N + i2 for both nodes and frequencies.
 */
class Grid {
public:
    explicit Grid(int dim = 1, int points = 256, double period = 2.0 * pi);

    int dim() const { return dim_; }
    int points() const { return points_; }
    double period() const { return period_; }

    /// Total number of nodes, N^n.
    std::size_t size() const;
    double spacing() const { return period_ / points_; }
    double freq_spacing() const { return 2.0 * pi / period_; }
    /// Delta x^n, the quadrature weight of one node.
    double cell_volume() const;

    /// Integer wavenumber k of transform-order index i along one axis.
    int wavenumber(int i) const { return i < points_ / 2 ? i : i - points_; }
    /// True for the unpaired mode k = -N/2 along one axis.
    bool is_nyquist(int i) const { return i == points_ / 2; }

    Vec node(std::size_t flat) const;
    Vec frequency(std::size_t flat) const;
    /// Flat index to per-axis indices (second entry is 0 in 1D).
    std::array<int, 2> axis_indices(std::size_t flat) const;
    bool has_nyquist(std::size_t flat) const;

    /// Shortest signed representative of d modulo the period, in [-L/2, L/2).
    double wrap(double d) const;

    bool operator==(const Grid&) const = default;

private:
    int dim_;
    int points_;
    double period_;
};

/// Complex samples of a function at the nodes of a grid.
class GridFunction {
public:
    explicit GridFunction(Grid grid);
    GridFunction(Grid grid, std::vector<cplx> values);

    /// Samples f at every node.
    static GridFunction sample(const Grid& grid, const std::function<cplx(const Vec&)>& f);
    static GridFunction constant(const Grid& grid, cplx c);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<const cplx> values() const { return values_; }
    std::span<cplx> values() { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }
    cplx& operator[](std::size_t i) { return values_[i]; }

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(const GridFunction& other);
    GridFunction& operator*=(cplx c);

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    cplx interpolate(const Vec& x) const;

private:
    Grid grid_;
    std::vector<cplx> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(GridFunction a, const GridFunction& b);
GridFunction operator*(cplx c, GridFunction a);

/// Fourier coefficients f^(xi_k), one per frequency, in transform order.
class SpectralFunction {
public:
    SpectralFunction(Grid grid, std::vector<cplx> coefficients);

    const Grid& grid() const { return grid_; }
    std::span<const cplx> coefficients() const { return coefficients_; }
    std::span<cplx> coefficients() { return coefficients_; }
    cplx operator[](std::size_t i) const { return coefficients_[i]; }

private:
    Grid grid_;
    std::vector<cplx> coefficients_;
};

/// Trigonometric interpolant of a grid function, evaluable anywhere.
class Interpolant {
public:
    explicit Interpolant(const GridFunction& f);
    cplx operator()(const Vec& x) const;

private:
    SpectralFunction coefficients_;
};

/// f^(xi_k) = sum_j f(x_j) exp(-i xi_k . x_j) dx^n.
SpectralFunction fft_forward(const GridFunction& f);
/// f(x_j) = L^-n sum_k f^(xi_k) exp(i xi_k . x_j).
GridFunction fft_inverse(const SpectralFunction& fhat);

/// (sum_j |f(x_j)|^p dx^n)^(1/p); p = infinity gives the max modulus.
double lp_norm(const GridFunction& f, double p);

/// Bilinear pairing <u, v> = sum_j u(x_j) v(x_j) dx^n (no conjugation).
cplx pairing(const GridFunction& u, const GridFunction& v);

/// Fourier multiplier |xi|^alpha; the zero mode is kept for alpha = 0 and
/// removed for alpha > 0.
GridFunction fractional_derivative(const GridFunction& f, double alpha);

/// D_j = -i d/dx_j, symbol xi_j. The unpaired -N/2 mode is zeroed.
GridFunction spectral_derivative(const GridFunction& f, int axis = 0);

/// Applies an arbitrary multiplier m(xi) coefficient-wise.
GridFunction apply_multiplier(const GridFunction& f, const std::function<cplx(const Vec&)>& m,
                              bool zero_nyquist = false);

/// Translation by a whole number of nodes along axis 0: result(x) = f(x + shift dx).
GridFunction translate(const GridFunction& f, int shift);

/// CSV with header "index,x,re,im" (1D) or "index,x1,x2,re,im" (2D).
void write_csv(std::ostream& out, const GridFunction& f);
GridFunction read_csv(std::istream& in, const Grid& grid);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

} // namespace bilop
