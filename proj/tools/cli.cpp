#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "bilop/analysis.hpp"
#include "bilop/catalog.hpp"
#include "bilop/expr.hpp"
#include "bilop/kernel.hpp"
#include "bilop/operator.hpp"
#include "bilop/symbol.hpp"

namespace bilop::cli {
namespace {

using json = nlohmann::json;

enum class Kind { text, integer, real, int_list, real_list };

struct Param {
    std::string name;
    Kind kind;
    json fallback;
    std::string help;
};

class Settings {
public:
    explicit Settings(json values) : v_(std::move(values)) {}

    const json& raw() const { return v_; }
    bool has(const std::string& k) const { return v_.contains(k) && !v_.at(k).is_null(); }
    std::string text(const std::string& k) const { return v_.at(k).get<std::string>(); }
    int integer(const std::string& k) const { return v_.at(k).get<int>(); }
    double real(const std::string& k) const { return v_.at(k).get<double>(); }
    std::vector<int> ints(const std::string& k) const { return v_.at(k).get<std::vector<int>>(); }
    std::vector<double> reals(const std::string& k) const { return v_.at(k).get<std::vector<double>>(); }

private:
    json v_;
};

struct Outcome {
    std::string verdict;
    json data;
    /// (file tag, CSV text); the first CSV gets the report's base name.
    std::vector<std::pair<std::string, std::string>> csv;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Param> params;
    std::function<Outcome(const Settings&)> run;
};

// -- parameter helpers ------------------------------------------------------

Param p_text(std::string name, std::string def, std::string help) { return {std::move(name), Kind::text, def, std::move(help)}; }
Param p_int(std::string name, int def, std::string help) { return {std::move(name), Kind::integer, def, std::move(help)}; }
Param p_real(std::string name, json def, std::string help) { return {std::move(name), Kind::real, std::move(def), std::move(help)}; }
Param p_ints(std::string name, std::vector<int> def, std::string help)
{
    return {std::move(name), Kind::int_list, def, std::move(help)};
}

std::vector<Param> grid_params(int n, std::vector<Param> extra)
{
    std::vector<Param> p{
        p_int("n", n, "grid points per axis (power of two, >= 8)"),
        p_int("dim", 1, "spatial dimension, 1 or 2"),
        p_real("period", 2.0 * pi, "period L of the torus"),
        p_int("seed", 1, "random seed"),
        p_text("out_dir", ".", "directory for reports named by default"),
    };
    p.insert(p.end(), extra.begin(), extra.end());
    return p;
}

std::vector<Param> symbol_params(const std::string& def)
{
    return {
        p_text("symbol", def, "catalog symbol name or expression in x, xi, eta"),
        p_real("m", 0.0, "declared order m for expression symbols"),
        p_real("rho", 1.0, "declared rho for expression symbols"),
        p_real("delta", 0.0, "declared delta for expression symbols"),
    };
}

std::vector<Param> operator_params(const std::string& op)
{
    return {
        p_text("op", op, "operator: base, commutator1 or commutator2"),
        p_text("a", "sin", "multiplier a: catalog name, expression in x, or a .csv file"),
        p_text("strategy", "auto", "evaluation strategy: auto, direct, multiplier or separable"),
    };
}

std::vector<Param> exponent_params()
{
    return {
        p_real("p", 4.0, "exponent p of the first input"),
        p_real("q", 4.0, "exponent q of the second input"),
        p_real("r", nullptr, "output exponent r; optional, must satisfy 1/p + 1/q = 1/r"),
    };
}

std::vector<Param> concat(std::vector<Param> a, const std::vector<Param>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const char* kind_name(Kind k)
{
    switch (k) {
    case Kind::text: return "a string";
    case Kind::integer: return "an integer";
    case Kind::real: return "a number";
    case Kind::int_list: return "an array of integers";
    case Kind::real_list: return "an array of numbers";
    }
    return "?";
}

double parse_real(const std::string& flag, const std::string& text)
{
    try {
        const expr::Expr e = expr::Expr::parse(text);
        if (!e.free_variables().empty()) throw InvalidInput("variables are not allowed");
        const double v = e.evaluate({});
        if (!std::isfinite(v)) throw InvalidInput("value is not finite");
        return v;
    } catch (const Error& e) {
        throw InvalidInput(flag + ": expected a number, got '" + text + "' (" + e.what() + ")");
    }
}

long long parse_integer(const std::string& flag, const std::string& text)
{
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw InvalidInput(flag + ": expected an integer, got '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

json from_flag(const Param& p, const std::string& text)
{
    const std::string flag = "--" + p.name;
    switch (p.kind) {
    case Kind::text: return text;
    case Kind::integer: return parse_integer(flag, text);
    case Kind::real: return parse_real(flag, text);
    case Kind::int_list: {
        json a = json::array();
        for (const auto& s : split(text)) a.push_back(parse_integer(flag, s));
        return a;
    }
    case Kind::real_list: {
        json a = json::array();
        for (const auto& s : split(text)) a.push_back(parse_real(flag, s));
        return a;
    }
    }
    return nullptr;
}

void check_value(const Param& p, const json& v, const std::string& path)
{
    auto fail = [&] { throw InvalidInput("config " + path + ": expected " + kind_name(p.kind)); };
    if (v.is_null() && p.fallback.is_null()) return;
    switch (p.kind) {
    case Kind::text:
        if (!v.is_string()) fail();
        break;
    case Kind::integer:
        if (!v.is_number_integer()) fail();
        break;
    case Kind::real:
        if (!v.is_number()) fail();
        break;
    case Kind::int_list:
    case Kind::real_list:
        if (!v.is_array()) fail();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const bool ok = p.kind == Kind::int_list ? v[i].is_number_integer() : v[i].is_number();
            if (!ok)
                throw InvalidInput("config " + path + "/" + std::to_string(i) + ": expected " +
                                   (p.kind == Kind::int_list ? "an integer" : "a number"));
        }
        break;
    }
}

json resolve(const Command& c, const json& config, const std::map<std::string, std::string>& flags)
{
    if (!config.is_null() && !config.is_object()) throw InvalidInput("config: the document must be a JSON object");
    if (config.is_object())
        for (const auto& item : config.items()) {
            const std::string& key = item.key();
            const bool known = std::any_of(c.params.begin(), c.params.end(), [&](const Param& p) { return p.name == key; });
            if (!known) throw InvalidInput("config /" + key + ": unknown key for " + c.name);
        }
    json out = json::object();
    for (const Param& p : c.params) {
        if (auto it = flags.find(p.name); it != flags.end()) {
            out[p.name] = from_flag(p, it->second);
        } else if (config.is_object() && config.contains(p.name)) {
            check_value(p, config.at(p.name), "/" + p.name);
            out[p.name] = config.at(p.name);
        } else {
            out[p.name] = p.fallback;
        }
    }
    return out;
}

// -- domain helpers -------------------------------------------------------

Grid make_grid(const Settings& s) { return Grid(s.integer("dim"), s.integer("n"), s.real("period")); }

Symbol make_symbol(const Settings& s, int dim, double period)
{
    const std::string text = s.text("symbol");
    if (is_catalog_symbol(text)) return catalog_symbol(text, dim, period);
    try {
        return symbol_from_expr(expr::Expr::parse(text), {s.real("m"), s.real("rho"), s.real("delta")}, dim);
    } catch (const expr::ParseError& e) {
        throw InvalidInput(std::string("symbol: ") + e.what());
    }
}

GridFunction make_input(const std::string& key, const std::string& spec, const Grid& grid)
{
    if (spec.size() > 4 && spec.compare(spec.size() - 4, 4, ".csv") == 0) {
        std::ifstream in(spec);
        if (!in) throw InvalidInput(key + ": cannot open '" + spec + "'");
        return read_csv(in, grid);
    }
    try {
        return make_multiplier(spec, grid);
    } catch (const expr::ParseError& e) {
        throw InvalidInput(key + ": " + e.what());
    }
}

OperatorPtr make_op(const Settings& s, const Grid& grid, const Symbol& sigma)
{
    const OperatorPtr T = make_operator(sigma, grid, strategy_from_string(s.text("strategy")));
    const std::string op = s.text("op");
    if (op == "base") return T;
    const GridFunction a = make_input("a", s.text("a"), grid);
    if (op == "commutator1") return commutator(T, 1, a);
    if (op == "commutator2") return commutator(T, 2, a);
    throw InvalidInput("op: expected base, commutator1 or commutator2, got '" + op + "'");
}

HolderTriple holder(const Settings& s)
{
    const HolderTriple e{s.real("p"), s.real("q")};
    require_holder(e);
    if (s.has("r") && std::abs(1.0 / s.real("r") - 1.0 / e.r()) > 1e-12)
        throw InvalidInput("exponents violate 1/p + 1/q = 1/r");
    return e;
}

std::vector<int> k_range(const Settings& s)
{
    const int lo = s.integer("k_min"), hi = s.integer("k_max");
    if (lo > hi) throw InvalidInput("k_min exceeds k_max");
    std::vector<int> ks;
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
    return ks;
}

KernelDeriv parse_deriv(const std::string& text)
{
    const auto parts = split(text);
    if (parts.size() != 3) throw InvalidInput("deriv: expected 'alpha,beta,gamma'");
    KernelDeriv d{int(parse_integer("deriv", parts[0])), int(parse_integer("deriv", parts[1])),
                  int(parse_integer("deriv", parts[2]))};
    return d;
}

void require_1d(const Grid& grid, const char* what)
{
    if (grid.dim() != 1) throw InvalidInput(std::string(what) + " supports dim = 1 only");
}

std::string csv_number(double v)
{
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
}

std::string scan_csv(const std::string& header, const std::vector<ScanRow>& rows)
{
    std::string out = header + "\n";
    for (const auto& r : rows) out += std::to_string(r.k) + "," + csv_number(r.ratio) + "\n";
    return out;
}

json scan_json(const std::vector<ScanRow>& rows)
{
    json a = json::array();
    for (const auto& r : rows) a.push_back({{"k", r.k}, {"ratio", r.ratio}});
    return a;
}

json bmo_json(const BmoReport& b)
{
    return {{"value", b.value}, {"s_max", b.s_max}, {"scale_sup", b.scale_sup}, {"cumulative", b.cumulative},
            {"stride", b.stride}, {"plateaued", bmo_plateaued(b)}};
}

json class_json(const SymbolClass& c) { return {{"m", c.m}, {"rho", c.rho}, {"delta", c.delta}}; }

std::string multi_index(const std::array<int, 2>& a, int dim)
{
    return dim == 1 ? std::to_string(a[0]) : std::to_string(a[0]) + " " + std::to_string(a[1]);
}

json seminorm_json(const SeminormReport& r)
{
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"alpha", multi_index(e.order.alpha, r.dim)},
                           {"beta", multi_index(e.order.beta, r.dim)},
                           {"gamma", multi_index(e.order.gamma, r.dim)},
                           {"ratio", e.ratio},
                           {"slope", e.slope},
                           {"verdict", to_string(e.verdict)}});
    return {{"symbol", r.symbol}, {"class", class_json(r.cls)}, {"all_bounded", r.all_bounded()}, {"entries", entries}};
}

// -- commands -------------------------------------------------------------

Outcome run_apply(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    const OperatorPtr U = make_op(s, grid, sigma);
    const GridFunction out = U->apply(make_input("f", s.text("f"), grid), make_input("g", s.text("g"), grid));
    std::ostringstream csv;
    write_csv(csv, out);
    return {"complete",
            {{"operator", U->describe()},
             {"l2_norm", lp_norm(out, 2.0)},
             {"sup_norm", lp_norm(out, INFINITY)}},
            {{"", csv.str()}}};
}

Outcome run_kernel_slice(const Settings& s)
{
    const Grid grid = make_grid(s);
    require_1d(grid, "kernel-slice");
    const Symbol sigma = make_symbol(s, 1, grid.period());
    const int count = s.integer("count");
    if (count < 2) throw InvalidInput("count must be at least 2");
    const double x = s.real("x"), v = s.real("v"), lo = s.real("u_min"), hi = s.real("u_max");
    std::vector<std::pair<double, double>> yz;
    for (int i = 0; i < count; ++i) {
        const double u = lo + (hi - lo) * i / (count - 1);
        yz.emplace_back(x - u, x - v);
    }
    KernelOptions opt;
    opt.spacing = s.real("spacing");
    opt.period = grid.period();
    const KernelSlice slice =
        kernel_slice(sigma, TruncationProfile{s.integer("level")}, x, yz, parse_deriv(s.text("deriv")), opt);
    double max_abs = 0.0;
    for (const cplx& c : slice.values) max_abs = std::max(max_abs, std::abs(c));
    std::ostringstream csv;
    write_csv(csv, slice);
    return {"complete",
            {{"level", slice.level}, {"spacing", slice.spacing}, {"nodes", slice.nodes}, {"max_abs", max_abs}},
            {{"", csv.str()}}};
}

Outcome run_fit_decay(const Settings& s)
{
    const Grid grid = make_grid(s);
    require_1d(grid, "fit-decay");
    const Symbol sigma = make_symbol(s, 1, grid.period());
    DecayFitOptions opt;
    opt.levels = s.ints("levels");
    opt.x = s.real("x");
    opt.kernel.spacing = s.real("spacing");
    opt.kernel.period = grid.period();
    opt.radii = default_fit_radii(grid.period());
    const DecayFitReport r = fit_kernel_decay(sigma, parse_deriv(s.text("deriv")), opt);

    json levels = json::array();
    std::string csv = "radius";
    for (const auto& l : r.levels) {
        levels.push_back({{"level", l.level},
                          {"exponent", l.exponent},
                          {"constant", l.constant},
                          {"r_squared", l.r_squared},
                          {"normalized_sup", l.normalized_sup},
                          {"max_abs", l.max_abs}});
        csv += ",max_abs_N" + std::to_string(l.level);
    }
    csv += "\n";
    for (std::size_t i = 0; i < r.radii.size(); ++i) {
        csv += csv_number(r.radii[i]);
        for (const auto& l : r.levels) csv += "," + csv_number(l.max_abs[i]);
        csv += "\n";
    }
    return {r.verdict,
            {{"exponent", r.exponent},
             {"constant", r.constant},
             {"r_squared", r.r_squared},
             {"target", r.target},
             {"stability", r.stability},
             {"radii", r.radii},
             {"levels", levels}},
            {{"", csv}}};
}

Outcome run_certify(const Settings& s)
{
    const Grid grid = make_grid(s);
    require_1d(grid, "certify-czk");
    const Symbol sigma = make_symbol(s, 1, grid.period());
    CzOptions opt;
    opt.level = s.integer("level");
    opt.samples = s.integer("samples");
    opt.base_points = s.integer("base_points");
    opt.seed = std::uint64_t(s.integer("seed"));
    opt.kernel.period = grid.period();
    const CzReport r = certify_cz_commutator_kernel(sigma, make_input("a", s.text("a"), grid), s.integer("slot"), opt);
    json octaves = json::array();
    std::string csv = "lower,upper,samples,size_sup,gradient_sup\n";
    for (const auto& o : r.octaves) {
        octaves.push_back({{"lower", o.lower},
                           {"upper", o.upper},
                           {"samples", o.samples},
                           {"size_sup", o.size_sup},
                           {"gradient_sup", o.gradient_sup}});
        csv += csv_number(o.lower) + "," + csv_number(o.upper) + "," + std::to_string(o.samples) + "," +
               csv_number(o.size_sup) + "," + csv_number(o.gradient_sup) + "\n";
    }
    return {r.verdict,
            {{"slot", r.slot},
             {"level", r.level},
             {"size_variation", r.size_variation},
             {"gradient_variation", r.gradient_variation},
             {"octaves", octaves}},
            {{"", csv}}};
}

Outcome run_verify_transpose(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    const OperatorPtr T = make_operator(sigma, grid, strategy_from_string(s.text("strategy")));
    const auto checks = verify_transpose_identities(T, make_input("a", s.text("a"), grid), s.integer("trials"),
                                                    std::uint64_t(s.integer("seed")));
    json rows = json::array();
    std::string csv = "identity,residual,passed\n";
    bool ok = true;
    for (const auto& c : checks) {
        rows.push_back({{"identity", c.identity}, {"residual", c.residual}, {"passed", c.passed}});
        csv += "\"" + c.identity + "\"," + csv_number(c.residual) + "," + (c.passed ? "true" : "false") + "\n";
        ok = ok && c.passed;
    }
    return {ok ? "PASS" : "FAIL", {{"identities", rows}}, {{"", csv}}};
}

Outcome run_check_t1(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    T1Options opt;
    opt.quad_points = s.integer("quad_points");
    opt.s_max = s.integer("s_max");
    const T1Report r = check_t1_conditions(sigma, make_input("a", s.text("a"), grid), opt);
    json slots = json::array();
    std::string csv = "slot,s,direct,transpose1,transpose2\n";
    for (const auto& e : r.slots) {
        slots.push_back({{"slot", e.slot},
                         {"residual", std::isnan(e.residual) ? json(nullptr) : json(e.residual)},
                         {"agree", e.agree},
                         {"bmo_direct", bmo_json(e.bmo_direct)},
                         {"bmo_transpose1", bmo_json(e.bmo_transpose1)},
                         {"bmo_transpose2", bmo_json(e.bmo_transpose2)}});
        for (std::size_t k = 0; k < e.bmo_direct.cumulative.size(); ++k)
            csv += std::to_string(e.slot) + "," + std::to_string(k) + "," + csv_number(e.bmo_direct.cumulative[k]) +
                   "," + csv_number(e.bmo_transpose1.cumulative[k]) + "," +
                   csv_number(e.bmo_transpose2.cumulative[k]) + "\n";
    }
    return {r.verdict,
            {{"symbol", r.symbol}, {"decomposition_available", r.decomposition_available}, {"note", r.note},
             {"slots", slots}},
            {{"", csv}}};
}

Outcome run_wbp(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    std::vector<double> ts;
    for (int d : s.ints("t_divisors")) {
        if (d <= 0) throw InvalidInput("t_divisors must be positive");
        ts.push_back(grid.period() / d);
    }
    const WbpReport r =
        wbp_scan(make_op(s, grid, sigma), s.integer("order"), ts, wbp_config_from_string(s.text("config_kind")));
    json rows = json::array();
    std::string csv = "t,P,C\n";
    for (const auto& row : r.rows) {
        rows.push_back({{"t", row.t}, {"P", row.pairing}, {"C", row.constant}});
        csv += csv_number(row.t) + "," + csv_number(row.pairing) + "," + csv_number(row.constant) + "\n";
    }
    return {r.verdict,
            {{"configuration", to_string(r.config)}, {"order", r.order}, {"variation", r.variation}, {"rows", rows}},
            {{"", csv}}};
}

Outcome run_norm_scan(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    const HolderTriple e = holder(s);
    const NormScanReport r =
        norm_scan(make_op(s, grid, sigma), e, s.text("family"), k_range(s), std::uint64_t(s.integer("seed")));
    return {r.verdict,
            {{"operator", r.description},
             {"p", e.p},
             {"q", e.q},
             {"r", e.r()},
             {"family", r.family},
             {"slope", r.slope},
             {"spread", r.spread},
             {"rows", scan_json(r.rows)}},
            {{"", scan_csv("k,ratio", r.rows)}}};
}

Outcome run_kato_ponce(const Settings& s)
{
    const Grid grid = make_grid(s);
    const HolderTriple e = holder(s);
    const KatoPonceReport r = kato_ponce_check(s.real("alpha"), e, s.text("family"), k_range(s), grid,
                                               std::uint64_t(s.integer("seed")));
    return {r.verdict,
            {{"alpha", r.alpha},
             {"p", e.p},
             {"q", e.q},
             {"r", e.r()},
             {"family", r.family},
             {"sup", r.sup},
             {"slope", r.slope},
             {"rows", scan_json(r.rows)}},
            {{"", scan_csv("k,ratio", r.rows)}}};
}

json probe_json(const CompactnessProbe& p)
{
    json cover = json::array();
    for (const auto& [f, c] : p.covering) cover.push_back({{"eps_fraction", f}, {"count", c}});
    return {{"family_size", p.family_size}, {"sup_norm", p.sup_norm}, {"output_norms", p.output_norms},
            {"equicontinuity", p.equicontinuity}, {"scale", p.scale}, {"covering", cover}};
}

Outcome run_compactness(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    const OperatorPtr T = make_operator(sigma, grid, strategy_from_string(s.text("strategy")));
    const OperatorPtr C = commutator(T, 1, make_input("a", s.text("a"), grid));
    CompactnessOptions opt;
    opt.family_size = s.integer("family_size");
    opt.exponents = holder(s);
    opt.seed = std::uint64_t(s.integer("seed"));
    const CompactnessComparison c =
        compare_compactness(commutator(C, 1, make_input("smooth_b", s.text("smooth_b"), grid)),
                            commutator(C, 1, make_input("rough_b", s.text("rough_b"), grid)), opt);
    std::string csv = "h,smooth,rough\n";
    for (std::size_t j = 0; j < c.smooth.shifts.size(); ++j)
        csv += csv_number(c.smooth.shifts[j]) + "," + csv_number(c.smooth.equicontinuity[j]) + "," +
               csv_number(c.rough.equicontinuity[j]) + "\n";
    return {c.verdict,
            {{"curve_below", c.curve_below},
             {"covering_halved", c.covering_halved},
             {"shifts", c.smooth.shifts},
             {"smooth", probe_json(c.smooth)},
             {"rough", probe_json(c.rough)}},
            {{"", csv}}};
}

Outcome run_decompose(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    const auto pieces = ftc_decompose(sigma, s.integer("quad_points"), grid.period());
    const double err = ftc_reconstruction_error(sigma, pieces, s.integer("probes"), 4096.0,
                                                std::uint64_t(s.integer("seed")), grid.period());
    SeminormOptions opt;
    opt.max_order = s.integer("max_order");
    opt.max_shell = s.integer("max_shell");
    opt.samples = s.integer("samples");
    opt.period = grid.period();
    opt.seed = std::uint64_t(s.integer("seed"));
    json rows = json::array();
    std::string csv = "piece,alpha,beta,gamma,ratio,slope,verdict\n";
    bool bounded = true;
    for (const Symbol& p : pieces) {
        const SeminormReport r = estimate_seminorms(p, opt);
        bounded = bounded && r.all_bounded();
        rows.push_back(seminorm_json(r));
        for (const auto& e : r.entries)
            csv += p.name() + "," + multi_index(e.order.alpha, r.dim) + "," + multi_index(e.order.beta, r.dim) + "," +
                   multi_index(e.order.gamma, r.dim) + "," + csv_number(e.ratio) + "," + csv_number(e.slope) + "," +
                   to_string(e.verdict) + "\n";
    }
    const bool ok = err <= 1e-8 && bounded;
    return {ok ? "PASS" : "FAIL", {{"reconstruction_error", err}, {"pieces", rows}}, {{"", csv}}};
}

Outcome run_seminorms(const Settings& s)
{
    const Grid grid = make_grid(s);
    const Symbol sigma = make_symbol(s, grid.dim(), grid.period());
    SeminormOptions opt;
    opt.max_order = s.integer("max_order");
    opt.max_shell = s.integer("max_shell");
    opt.samples = s.integer("samples");
    opt.period = grid.period();
    opt.seed = std::uint64_t(s.integer("seed"));
    const SeminormReport r = estimate_seminorms(sigma, opt);
    std::ostringstream csv;
    write_csv(csv, r);
    return {r.all_bounded() ? "PASS" : "FAIL", seminorm_json(r), {{"", csv.str()}}};
}

Outcome run_calderon(const Settings& s)
{
    const Grid grid = make_grid(s);
    require_1d(grid, "calderon-demo");
    const CalderonScan r = calderon_scan(make_input("a", s.text("a"), grid), s.text("family"), k_range(s),
                                         std::uint64_t(s.integer("seed")));
    return {r.verdict,
            {{"family", r.family}, {"slope", r.slope}, {"spread", r.spread}, {"rows", scan_json(r.rows)}},
            {{"", scan_csv("k,ratio", r.rows)}}};
}

Outcome run_converse(const Settings& s)
{
    const Grid grid = make_grid(s);
    require_1d(grid, "converse-check");
    const ConverseReport r = converse_check(make_input("a", s.text("a"), grid));
    return {r.verdict,
            {{"operator_estimate", r.operator_estimate},
             {"gradient_estimate", r.gradient_estimate},
             {"relative_gap", r.relative_gap},
             {"bump_scale", r.bump_scale}},
            {}};
}

const std::vector<Command>& commands()
{
    static const std::vector<Command> list = [] {
        const std::vector<Param> kernel_common{
            p_real("x", 0.0, "base point x"),
            p_text("deriv", "0,0,0", "derivative orders 'alpha,beta,gamma', each 0 or 1"),
            p_real("spacing", 0.25, "largest frequency spacing of the quadrature"),
        };
        const std::vector<Param> scan_k{
            p_text("family", "modulated-bump", "test family: modulated-bump, plane-wave or random-trig"),
            p_int("k_min", 1, "smallest wavenumber"),
            p_int("k_max", 64, "largest wavenumber"),
        };
        std::vector<Command> c{
            {"apply", "apply T, [T,a]_1 or [T,a]_2 to two inputs",
             grid_params(64, concat(concat(symbol_params("sqrt1"), operator_params("base")),
                                    {p_text("f", "sin", "first input: catalog name, expression, or .csv file"),
                                     p_text("g", "cos", "second input: catalog name, expression, or .csv file")})),
             run_apply},
            {"kernel-slice", "truncated kernel K_N along y = x - u, z = x - v",
             grid_params(256, concat(concat(symbol_params("sqrt1"), kernel_common),
                                     {p_int("level", 64, "truncation level N"), p_real("v", 0.5, "fixed offset x - z"),
                                      p_real("u_min", -1.5, "first offset x - y"),
                                      p_real("u_max", 1.5, "last offset x - y"),
                                      p_int("count", 61, "number of offsets")})),
             run_kernel_slice},
            {"fit-decay", "fit the off-diagonal decay exponent of K_N",
             grid_params(256, concat(concat(symbol_params("sqrt1"), kernel_common),
                                     {p_ints("levels", {32, 64, 128}, "truncation levels, comma separated")})),
             run_fit_decay},
            {"certify-czk", "size and gradient bounds of the commutator kernel over radius octaves",
             grid_params(256, concat(symbol_params("sqrt1"),
                                     {p_text("a", "sin", "multiplier a"), p_int("slot", 1, "commutator slot, 1 or 2"),
                                      p_int("level", 1024, "truncation level N"),
                                      p_int("samples", 240, "sample triples (>= 200)"),
                                      p_int("base_points", 8, "distinct base points x")})),
             run_certify},
            {"verify-transpose", "check the four transpose identities on random triples",
             grid_params(32, concat(symbol_params("sqrt1"),
                                    {p_text("a", "sin", "multiplier a"),
                                     p_text("strategy", "auto", "evaluation strategy"),
                                     p_int("trials", 20, "random triples")})),
             run_verify_transpose},
            {"check-t1", "[T,a]_i(1,1) by direct and decomposed routes, with BMO of the results",
             grid_params(64, concat(symbol_params("sqrt1"),
                                    {p_text("a", "sin", "multiplier a"),
                                     p_int("quad_points", 32, "Gauss-Legendre points per panel"),
                                     p_int("s_max", 0, "deepest BMO scale; 0 selects log2(N) - 1")})),
             run_check_t1},
            {"wbp-scan", "weak boundedness scan C(t) = P(t) / t^n",
             grid_params(2048, concat(concat(symbol_params("sqrt1"), operator_params("commutator1")),
                                      {p_int("order", 2, "bump order M"),
                                       p_ints("t_divisors", {16, 32, 64, 128}, "scales t = L / d, comma separated"),
                                       p_text("config_kind", "common-center", "common-center or separated")})),
             run_wbp},
            {"norm-scan", "ratio ||U(f_k,g_k)||_r / (||f_k||_p ||g_k||_q) over a test family",
             grid_params(256, concat(concat(concat(symbol_params("sqrt1"), operator_params("commutator1")),
                                            exponent_params()),
                                     scan_k)),
             run_norm_scan},
            {"kato-ponce", "Kato-Ponce ratio over a test family",
             grid_params(256, concat(concat({p_real("alpha", 1.0, "order of D^alpha, > 0")}, exponent_params()),
                                     scan_k)),
             run_kato_ponce},
            {"compactness-probe", "compare [[T,a]_1,b]_1 for a smooth and a rough b",
             grid_params(256, concat(concat(symbol_params("sqrt1"),
                                            {p_text("a", "sin", "multiplier a"),
                                             p_text("strategy", "auto", "evaluation strategy"),
                                             p_text("smooth_b", "bump", "smooth compactly supported b"),
                                             p_text("rough_b", "step", "rough b"),
                                             p_int("family_size", 50, "number of random inputs (>= 50)")}),
                                     exponent_params())),
             run_compactness},
            {"decompose", "decompose sigma - sigma(x,0,0) and estimate the pieces' seminorms",
             grid_params(64, concat(symbol_params("sqrt1"),
                                    {p_int("quad_points", 32, "Gauss-Legendre points per panel"),
                                     p_int("probes", 200, "reconstruction probes"),
                                     p_int("max_order", 2, "largest derivative order"),
                                     p_int("max_shell", 12, "dyadic shells 0..max_shell"),
                                     p_int("samples", 100, "probes per shell")})),
             run_decompose},
            {"seminorms", "sampled seminorms of a symbol against its declared class",
             grid_params(64, concat(symbol_params("sqrt1"),
                                    {p_int("max_order", 2, "largest derivative order"),
                                     p_int("max_shell", 12, "dyadic shells 0..max_shell"),
                                     p_int("samples", 100, "probes per shell")})),
             run_seminorms},
            {"calderon-demo", "ratio ||[|D|, a] f||_2 / (||a'||_inf ||f||_2) over a test family",
             grid_params(256, concat({p_text("a", "sin", "multiplier a")}, scan_k)), run_calderon},
            {"converse-check", "operator-side estimate of sup |a'| from [T,a]_1 with sigma = xi",
             grid_params(256, {p_text("a", "sin", "multiplier a")}), run_converse},
        };
        return c;
    }();
    return list;
}

const Command& find_command(const std::string& name)
{
    for (const auto& c : commands())
        if (c.name == name) return c;
    throw InvalidInput("unknown subcommand '" + name + "'");
}

std::string dashed(std::string name)
{
    std::replace(name.begin(), name.end(), '_', '-');
    return name;
}

std::string timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    return o.str();
}

std::string seed_hash(const json& config)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config.dump()) h = (h ^ ch) * 1099511628211ull;
    std::ostringstream o;
    o << std::hex << std::setw(8) << std::setfill('0') << (h & 0xffffffffull);
    return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace

bool is_failing_verdict(const std::string& verdict)
{
    return verdict == "FAIL" || verdict == "UNSTABLE" || verdict == "INCONCLUSIVE" ||
           verdict == "not consistent with compactness";
}

std::vector<std::string> subcommands()
{
    std::vector<std::string> names;
    for (const auto& c : commands()) names.push_back(c.name);
    names.push_back("list-catalog");
    return names;
}

json resolve_config(const std::string& subcommand, const json& config)
{
    return resolve(find_command(subcommand), config, {});
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"bilop: bilinear pseudodifferential operators and their commutators on a periodic grid", "bilop"};
    app.require_subcommand(1);

    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, std::string> config_path, out_path;
    for (const auto& c : commands()) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        auto& storage = flag_values[c.name];
        for (const auto& p : c.params) {
            std::string help = p.help;
            if (!p.fallback.is_null()) help += " [default: " + p.fallback.dump() + "]";
            static const char* type_names[] = {"TEXT", "INT", "REAL", "INT,...", "REAL,..."};
            sub->add_option("--" + dashed(p.name), storage[p.name], help)->type_name(type_names[int(p.kind)]);
        }
        sub->add_option("--config", config_path[c.name], "JSON config file; flags override its values");
        sub->add_option("--out", out_path[c.name],
                        "report path (default {subcommand}-{timestamp}-{hash}.json in --out-dir)");
    }
    app.add_subcommand("list-catalog", "print the symbol, multiplier and test-family catalog");

    std::vector<std::string> argv_store{"bilop"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (name == "list-catalog") {
        out << catalog_listing();
        return 0;
    }

    try {
        const Command& cmd = find_command(name);
        json config;
        if (!config_path[name].empty()) {
            std::ifstream in(config_path[name]);
            if (!in) throw InvalidInput("config: cannot open '" + config_path[name] + "'");
            try {
                config = json::parse(in);
            } catch (const json::parse_error& e) {
                throw InvalidInput(std::string("config: malformed JSON: ") + e.what());
            }
        }
        std::map<std::string, std::string> given;
        for (const auto& p : cmd.params)
            if (chosen->count("--" + dashed(p.name)) > 0) given[p.name] = flag_values[name][p.name];
        const json resolved = resolve(cmd, config, given);

        const Outcome o = cmd.run(Settings(resolved));
        const json envelope{{"operation", name}, {"config", resolved}, {"verdict", o.verdict}, {"data", o.data}};

        std::filesystem::path report = out_path[name];
        if (report.empty()) {
            const std::string base = name + "-" + timestamp() + "-" + seed_hash(resolved);
            const std::filesystem::path dir = resolved.at("out_dir").get<std::string>();
            std::filesystem::create_directories(dir);
            report = dir / (base + ".json");
            for (int i = 2; std::filesystem::exists(report); ++i)
                report = dir / (base + "-" + std::to_string(i) + ".json");
        }
        write_file(report, envelope.dump(2) + "\n");
        out << name << ": " << o.verdict << "\nreport: " << report.string() << "\n";
        for (const auto& [tag, text] : o.csv) {
            std::filesystem::path csv = report;
            csv.replace_extension(tag.empty() ? ".csv" : "." + tag + ".csv");
            write_file(csv, text);
            out << "csv: " << csv.string() << "\n";
        }
        return is_failing_verdict(o.verdict) ? 2 : 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace bilop::cli
