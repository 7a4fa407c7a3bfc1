#pragma once

#include <string>
#include <vector>

#include "bilop/grid.hpp"
#include "bilop/symbol.hpp"

namespace bilop {

struct SymbolEntry {
    std::string name;
    std::string description;
    SymbolClass cls;
    /// Member of BS^1_{1,0} with a correct declaration.
    bool order_one = false;
    /// Declared class is deliberately wrong.
    bool negative = false;
};

/// Catalog symbols sorted by name.
const std::vector<SymbolEntry>& symbol_catalog();
bool is_catalog_symbol(const std::string& name);

/// Instantiates a catalog symbol. x-dependent entries use the smooth
/// periodic weight theta(x) = 1 + cos(2 pi x1 / L) / 2.
Symbol catalog_symbol(const std::string& name, int dim = 1, double period = 2.0 * pi);

struct MultiplierEntry {
    std::string name;
    std::string description;
};

/// Multiplier functions a(x), b(x) sorted by name.
const std::vector<MultiplierEntry>& multiplier_catalog();
bool is_catalog_multiplier(const std::string& name);

/// A catalog multiplier name or an expression in x (x1, x2 in 2D), sampled
/// on the grid. Multipliers depend on x1 only in 2D unless the expression
/// says otherwise.
GridFunction make_multiplier(const std::string& spec, const Grid& grid);

/// Stable, sorted text listing of symbols, multipliers and test families.
std::string catalog_listing();

/// Test-family identifiers accepted by the norm scans.
const std::vector<MultiplierEntry>& family_catalog();

} // namespace bilop
