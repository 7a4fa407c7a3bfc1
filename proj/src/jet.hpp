#pragma once

// Truncated multivariate Taylor arithmetic. Used to obtain exact mixed
// partial derivatives of expression-backed symbols in a single pass.

#include <array>
#include <cstdint>
#include <vector>

#include "bilop/expr.hpp"

namespace bilop::detail {

/// Number of differentiable coordinates: x1, x2, xi1, xi2, eta1, eta2.
inline constexpr int kCoords = 6;
using Orders = std::array<int, kCoords>;

/// Index layout of the truncated coefficient tensor: coordinate c ranges over
/// 0..orders[c]. Products only keep terms that fit inside the box.
class JetShape {
public:
    explicit JetShape(const Orders& orders);

    const Orders& orders() const { return orders_; }
    std::size_t size() const { return size_; }
    int total_degree() const { return total_degree_; }
    std::size_t index(const Orders& k) const;
    /// kappa! for the multi-index stored at flat position i.
    double factorial(std::size_t i) const { return factorials_[i]; }

    struct Triple {
        std::uint32_t out, lhs, rhs;
    };
    const std::vector<Triple>& products() const { return products_; }

private:
    Orders orders_;
    Orders strides_{};
    std::size_t size_ = 1;
    int total_degree_ = 0;
    std::vector<double> factorials_;
    std::vector<Triple> products_;
};

class Jet {
public:
    Jet(const JetShape& shape, double constant);
    static Jet variable(const JetShape& shape, int coord, double value);

    const JetShape& shape() const { return *shape_; }
    double constant() const { return c_[0]; }
    double coefficient(std::size_t i) const { return c_[i]; }
    std::size_t size() const { return c_.size(); }

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);
    Jet operator*(const Jet& o) const;
    Jet operator-() const;

    /// f(u) for f given by its Taylor coefficients a_k = f^(k)(u0)/k! at the
    /// constant term u0 of this jet.
    Jet compose(const std::vector<double>& taylor) const;

private:
    const JetShape* shape_;
    std::vector<double> c_;
};

Jet reciprocal(const Jet& u);
Jet power(const Jet& u, int n);
Jet apply(expr::Function f, const Jet& u);

/// Evaluates an expression tree in jet arithmetic. `seeds` gives the value
/// of every coordinate; variables map to coordinates by name and dimension.
Jet evaluate_jet(const expr::Node& node, const JetShape& shape, const std::array<double, kCoords>& seeds,
                 int dim);

/// Coordinate index of an expression variable in dimension dim, or -1 if the
/// variable is not allowed there.
int coordinate_of(expr::Variable v, int dim);

} // namespace bilop::detail
