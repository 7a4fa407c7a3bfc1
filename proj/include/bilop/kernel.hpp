#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bilop/grid.hpp"
#include "bilop/symbol.hpp"

namespace bilop {

/// psi(s) = h(2 - |s|) / (h(2 - |s|) + h(|s| - 1)) with h(s) = exp(-1/s) for
/// s > 0: equal to 1 for |s| <= 1, 0 for |s| >= 2, smooth in between.
double cutoff(double s);

/// psi_N(xi, eta) = psi(xi / N) psi(eta / N).
struct TruncationProfile {
    int level = 64;
    double operator()(double xi) const { return cutoff(xi / level); }
};

/// Orders (each 0 or 1) of d_x, d_y, d_z applied to the kernel.
struct KernelDeriv {
    int alpha = 0;
    int beta = 0;
    int gamma = 0;
    int order() const { return alpha + beta + gamma; }
};

struct KernelOptions {
    /// Largest frequency spacing of the trapezoid rule.
    double spacing = 0.25;
    /// Relative tolerance of the coarse-grid comparison.
    double guard = 1e-6;
    double period = 2.0 * pi;
};

/// Values K_N(x, y_i, z_i) for one base point, several offsets and several
/// derivative orders: values[d][i].
struct KernelBatch {
    std::vector<std::vector<cplx>> values;
    /// Frequency spacing actually used and nodes per axis.
    double spacing = 0.0;
    std::size_t nodes = 0;
};

/**
 * K_N(x,y,z) = (2 pi)^-2 int int e^{i xi (x-y)} e^{i eta (x-z)} sigma(x,xi,eta) psi_N(xi,eta) dxi deta
 * for 1D symbols, evaluated for many (y, z) at once.
 *
 * The trapezoid rule runs on [-2N, 2N]^2 with spacing
 * min(options.spacing, pi / (8 r_max)), r_max the largest separation, so
 * every oscillation is sampled at least 16 times. The sum over the even
 * subgrid (twice the spacing) is formed alongside; the two must agree to
 * options.guard relative (plus a rounding floor) or ToleranceError is
 * thrown. When every x - z is a multiple of kernel_lattice(N) and there are
 * at least 16 offsets, the eta-sums run as one FFT per frequency row. Separations are taken on the torus (nearest image). Derivative
 * kernels multiply the integrand by i(xi+eta) sigma + d_x sigma, -i xi and
 * -i eta.
 */
KernelBatch kernel_batch(const Symbol& sigma, const TruncationProfile& profile, double x,
                         const std::vector<std::pair<double, double>>& yz, const std::vector<KernelDeriv>& derivs,
                         const KernelOptions& options = {});

/// Lattice pi / (2N) of z-offsets for which kernel_batch can use its FFT path
/// (the length-2K DFT over the eta nodes lands exactly on these points).
double kernel_lattice(int level);

/// Single kernel value; throws DomainError on the diagonal x = y = z.
cplx kernel_at(const Symbol& sigma, const TruncationProfile& profile, double x, double y, double z,
               KernelDeriv deriv = {}, const KernelOptions& options = {});

struct KernelSlice {
    double x = 0.0;
    std::vector<std::pair<double, double>> offsets;
    std::vector<cplx> values;
    int level = 0;
    KernelDeriv deriv;
    double spacing = 0.0;
    std::size_t nodes = 0;
};

KernelSlice kernel_slice(const Symbol& sigma, const TruncationProfile& profile, double x,
                         const std::vector<std::pair<double, double>>& yz, KernelDeriv deriv = {},
                         const KernelOptions& options = {});

/// Columns: x, y, z, re, im, N_trunc.
void write_csv(std::ostream& out, const KernelSlice& slice);

// -- decay fits -------------------------------------------------------------

struct DecayFitOptions {
    /// Radii r = |x-y| + |x-z|; empty selects 11 half-octave radii in [L/256, L/8].
    std::vector<double> radii;
    /// Direction parameters c in [0, 1]: (x-y, x-z) = (r c, +-r (1-c)).
    std::vector<double> directions{0.0, 0.25, 0.5, 0.75, 1.0};
    /// Truncation levels; the fit is reported for the largest.
    std::vector<int> levels{32, 64, 128};
    double x = 0.0;
    KernelOptions kernel;
};

struct DecayLevel {
    int level = 0;
    double exponent = 0.0;
    double constant = 0.0;
    double r_squared = 0.0;
    /// max over radii of (max over directions |K_N|) * r^-target.
    double normalized_sup = 0.0;
    std::vector<double> max_abs;
};

struct DecayFitReport {
    KernelDeriv deriv;
    std::vector<double> radii;
    std::vector<DecayLevel> levels;
    double exponent = 0.0;
    double constant = 0.0;
    double r_squared = 0.0;
    /// -(2n + 1 + |alpha| + |beta| + |gamma|).
    double target = 0.0;
    /// max / min of normalized_sup across levels.
    double stability = 0.0;
    /// PASS, FAIL or INCONCLUSIVE (R^2 < 0.9 or too few nonzero values).
    std::string verdict;
};

std::vector<double> default_fit_radii(double period);

DecayFitReport fit_kernel_decay(const Symbol& sigma, KernelDeriv deriv, const DecayFitOptions& options = {});

// -- Calderon-Zygmund certification ----------------------------------------

struct CzOptions {
    /// The truncated kernel follows the untruncated one only for N r above
    /// about 200 near the axes x = y and x = z; 1024 covers r >= L/32.
    int level = 1024;
    int samples = 240;
    /// Distinct base points x; samples are spread over them.
    int base_points = 8;
    std::uint64_t seed = 1;
    KernelOptions kernel;
};

struct CzOctave {
    double lower = 0.0;
    double upper = 0.0;
    int samples = 0;
    /// sup |K_slot| S^2 and sup |grad K_slot| S^3 over the octave.
    double size_sup = 0.0;
    double gradient_sup = 0.0;
};

struct CzReport {
    int slot = 1;
    int level = 0;
    std::vector<CzOctave> octaves;
    double size_variation = 0.0;
    double gradient_variation = 0.0;
    /// BOUNDED if both sups vary by less than 2x across octaves, else UNSTABLE.
    std::string verdict;
};

/**
 * K_slot(x,y,z) = (a(y or z) - a(x)) K_N(x,y,z), sampled at off-diagonal
 * triples with S = |x-y| + |x-z| + |y-z| (torus distances) in the octaves
 * [L/16, L/8), [L/8, L/4), [L/4, L/2). x - z is snapped to kernel_lattice. The gradient in (x, y, z) is
 * formed from derivative kernels and the spectral derivative of a.
 */
CzReport certify_cz_commutator_kernel(const Symbol& sigma, const GridFunction& a, int slot,
                                      const CzOptions& options = {});

/// Nearest-image representative of u modulo period, in [-period/2, period/2).
double torus_wrap(double u, double period);

} // namespace bilop
