#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bilop/grid.hpp"
#include "bilop/operator.hpp"
#include "bilop/symbol.hpp"

namespace bilop {

/// Least-squares slope of log(value) against log(param) over the positive
/// entries. Returns 0 when fewer than two entries are positive.
double log_log_slope(const std::vector<double>& params, const std::vector<double>& values);

/// Grid sup of |grad a|, with the gradient taken spectrally.
double gradient_sup(const GridFunction& a);

// -- bumps ----------------------------------------------------------------

/**
 * BumpFunction: phi^{x0,t}(x) = c h(1 - |((x - x0)/t - o) / rho|^2),
 * h(s) = exp(-1/s), with x - x0 taken as the nearest periodic image. The
 * inner offset o and radius rho (|o| + rho <= 1) keep the support inside
 * B(x0, t) while allowing profiles that are not symmetric about x0. The
 * constant c makes max_{|alpha| <= M} sup |d^alpha phi| equal to 1 for the
 * unscaled profile (up to a 0.1% safety margin), so phi is a normalized bump
 * of order M.
 */
class BumpFunction {
public:
    BumpFunction(int dim, int order, Vec center, double scale, double period = 2.0 * pi, Vec offset = {},
                 double inner = 1.0);

    int dim() const { return dim_; }
    int order() const { return order_; }
    const Vec& center() const { return center_; }
    double scale() const { return scale_; }
    double normalization() const { return norm_; }

    double operator()(const Vec& x) const;
    /// Unscaled profile, supported in the unit ball.
    double profile(const Vec& s) const;
    /// d^alpha of the unscaled profile, alpha = (alpha_1, alpha_2).
    double profile_derivative(const std::array<int, 2>& alpha, const Vec& s) const;
    GridFunction sample(const Grid& grid) const;

private:
    Vec inner_point(const Vec& s) const;

    int dim_;
    int order_;
    Vec center_;
    double scale_;
    double period_;
    Vec offset_;
    double inner_;
    double norm_;
};

// -- BMO ------------------------------------------------------------------

struct BmoReport {
    /// sup over every scale s <= s_max of the mean oscillation.
    double value = 0.0;
    int s_max = 0;
    /// Largest mean oscillation over windows of side 2^-s L, per s.
    std::vector<double> scale_sup;
    /// Running max of scale_sup; cumulative.back() == value.
    std::vector<double> cumulative;
    /// Window positions advance by this many nodes (1 unless the grid is too
    /// large to scan every position).
    int stride = 1;
};

/// Mean oscillation (1/|Q|) sum_Q |b - b_Q| over periodic cubes of side
/// 2^-s L at every node position, s = 0..s_max. Requires s_max <= log2 N.
BmoReport bmo_norm(const GridFunction& b, int s_max);

/// value at s_max against value at s_max - 2 (or 0): relative change below
/// 1% counts as a plateau.
bool bmo_plateaued(const BmoReport& report);

// -- T(1) conditions ------------------------------------------------------

struct T1Slot {
    int slot = 1;
    /// [T,a]_slot(1, 1) by direct application.
    GridFunction direct;
    /// sum_j T_j(D_j a, 1) (slot 1) or sum_j T~_j(1, D_j a) (slot 2).
    std::optional<GridFunction> decomposed;
    /// max |direct - decomposed| / max(1, sup |direct|); NaN without a decomposition.
    double residual = 0.0;
    bool agree = false;
    BmoReport bmo_direct;
    BmoReport bmo_transpose1;
    BmoReport bmo_transpose2;
};

struct T1Report {
    std::string symbol;
    bool decomposition_available = false;
    std::string note;
    std::vector<T1Slot> slots;
    /// PASS, FAIL, or PARTIAL when only the direct route ran.
    std::string verdict;
};

struct T1Options {
    int quad_points = 32;
    /// Deepest BMO scale; 0 selects log2(N) - 1.
    int s_max = 0;
};

/// Requires a 1D or 2D symbol and multiplier on a grid within the dense budget
/// (the transposes are materialized).
T1Report check_t1_conditions(const Symbol& sigma, const GridFunction& a, const T1Options& options = {});

// -- weak boundedness -----------------------------------------------------

enum class WbpConfig { common_center, separated };
const char* to_string(WbpConfig c);
WbpConfig wbp_config_from_string(const std::string& s);

struct WbpRow {
    double t = 0.0;
    double pairing = 0.0;
    /// pairing / t^n.
    double constant = 0.0;
};

struct WbpReport {
    WbpConfig config = WbpConfig::common_center;
    int order = 2;
    Vec center{};
    std::vector<WbpRow> rows;
    /// max C / min C; 1 when every C is 0.
    double variation = 0.0;
    std::string verdict;
};

/**
 * P(t) = |<T(phi_1, phi_2), phi_3>| for bumps of order M and scale t.
 * Common center puts all three at x0 = (L/2, L/2); separated moves phi_1 to
 * x0 + 4t e_1 so that |x_1 - x_3| > 3t. phi_2 and phi_3 are the symmetric
 * profile; phi_1 uses the inner offset (0.2, 0) and radius 0.8, since with
 * three identical even bumps the pairing of a commutator with an even
 * symbol vanishes to leading order. PASS if max C / min C < 4.
 * Requires M >= 2 and max t / min t >= 8; t > L/8 is a DomainError.
 */
WbpReport wbp_scan(const OperatorPtr& T, int order, const std::vector<double>& t_list, WbpConfig config);

// -- norm scans -----------------------------------------------------------

/// Exponents with 1/p + 1/q = 1/r; p, q in [1, inf].
struct HolderTriple {
    double p = 4.0;
    double q = 4.0;
    double r() const;
};
void require_holder(const HolderTriple& e);

/// (f_k, g_k) for a test family: modulated-bump, plane-wave or random-trig.
/// Modulation runs along x1 with wavenumber k, e^{i 2 pi k x1 / L}.
std::pair<GridFunction, GridFunction> family_member(const std::string& family, const Grid& grid, int k,
                                                    std::uint64_t seed = 1);
void require_family(const std::string& family);

struct ScanRow {
    int k = 0;
    double ratio = 0.0;
};

struct NormScanReport {
    HolderTriple exponents;
    std::string family;
    std::string description;
    std::vector<ScanRow> rows;
    double slope = 0.0;
    /// max ratio / min ratio; 1 when all ratios vanish.
    double spread = 1.0;
    /// BOUNDED (slope < 0.2 and spread < 4) or GROWING.
    std::string verdict;
};

/// Ratios below this are treated as exact zeros (the operator annihilated the
/// input up to rounding) and excluded from the slope fit.
inline constexpr double kZeroRatio = 1e-13;

/// ||U(f_k, g_k)||_r / (||f_k||_p ||g_k||_q) for each k, with a log-log slope.
NormScanReport norm_scan(const OperatorPtr& U, const HolderTriple& e, const std::string& family,
                         const std::vector<int>& k_list, std::uint64_t seed = 1);

struct KatoPonceReport {
    double alpha = 1.0;
    HolderTriple exponents;
    std::string family;
    std::vector<ScanRow> rows;
    double sup = 0.0;
    double slope = 0.0;
    /// PASS if sup < 10 and slope < 0.2.
    std::string verdict;
};

/// ||D^alpha(fg)||_r / (||D^alpha f||_p ||g||_q + ||f||_p ||D^alpha g||_q),
/// D^alpha the multiplier |xi|^alpha.
KatoPonceReport kato_ponce_check(double alpha, const HolderTriple& e, const std::string& family,
                                 const std::vector<int>& k_list, const Grid& grid, std::uint64_t seed = 1);

/// Ratio for one explicit pair.
double kato_ponce_ratio(double alpha, const HolderTriple& e, const GridFunction& f, const GridFunction& g);

// -- compactness ----------------------------------------------------------

struct CompactnessOptions {
    int family_size = 50;
    HolderTriple exponents;
    std::uint64_t seed = 1;
    /// eps for the covering counts is fraction * scale; 0 uses the probe's
    /// own sup_i ||u_i||_r.
    double scale = 0.0;
};

struct CompactnessProbe {
    int family_size = 0;
    std::vector<double> output_norms;
    double sup_norm = 0.0;
    /// Shifts h = j dx, j = 1..N/8.
    std::vector<double> shifts;
    /// sup_i sup_{0 < s <= h} ||u_i(. + s) - u_i||_r.
    std::vector<double> equicontinuity;
    /// Reference for eps; counts are greedy packings at eps = max(fraction * scale, 1e-13).
    double scale = 0.0;
    std::vector<std::pair<double, int>> covering;

    int covering_at(double fraction) const;
};

/**
 * Probes precompactness of {U(f_i, g_i)} over random inputs normalized to
 * ||f_i||_p = ||g_i||_q = 1. f_i and g_i are bumps of radius L/16 around a
 * common random center, modulated along x1 by independent random
 * wavenumbers in [1, N/4]. Requires family_size >= 50.
 */
CompactnessProbe compactness_probe(const OperatorPtr& U, const CompactnessOptions& options = {});

struct CompactnessComparison {
    CompactnessProbe smooth;
    CompactnessProbe rough;
    bool curve_below = false;
    bool covering_halved = false;
    /// "consistent with compactness" or "not consistent with compactness".
    std::string verdict;
};

/**
 * Runs both probes on the same inputs and measures eps against the larger of
 * the two sup norms. The smooth-multiplier operator must have an
 * equicontinuity curve strictly below the rough one at every shift and an
 * eps = 0.2 covering count at most half as large.
 */
CompactnessComparison compare_compactness(const OperatorPtr& smooth, const OperatorPtr& rough,
                                          const CompactnessOptions& options = {});

// -- linear commutator and converse ---------------------------------------

struct CalderonResult {
    GridFunction output;
    /// ||[T,a] f||_2 / (||grad a||_inf ||f||_2); 0 when grad a vanishes.
    double ratio = 0.0;
};

/// [T, a] f = T(a f) - a T(f) with T the multiplier |xi|. 1D only.
CalderonResult calderon_demo(const GridFunction& a, const GridFunction& f);

struct CalderonScan {
    std::string family;
    std::vector<ScanRow> rows;
    double slope = 0.0;
    double spread = 1.0;
    /// BOUNDED (slope < 0.2 and spread < 4) or GROWING.
    std::string verdict;
};

CalderonScan calderon_scan(const GridFunction& a, const std::string& family, const std::vector<int>& k_list,
                           std::uint64_t seed = 1);

struct ConverseReport {
    /// max over bump centers of ||[T,a]_1(phi, phi)||_2 / ||phi||_4^2, sigma = xi.
    double operator_estimate = 0.0;
    double gradient_estimate = 0.0;
    double relative_gap = 0.0;
    double bump_scale = 0.0;
    /// PASS if relative_gap < 0.2.
    std::string verdict;
};

/// Bumps of scale L/64 (support width L/32) centered at every node. 1D only,
/// N >= 256.
ConverseReport converse_check(const GridFunction& a);

} // namespace bilop
