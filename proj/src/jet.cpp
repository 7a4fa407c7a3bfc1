#include "jet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bilop::detail {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Orders decode(std::size_t flat, const Orders& orders)
{
    Orders k{};
    for (int c = kCoords - 1; c >= 0; --c) {
        const int d = orders[c] + 1;
        k[c] = static_cast<int>(flat % d);
        flat /= d;
    }
    return k;
}

} // namespace

JetShape::JetShape(const Orders& orders) : orders_(orders)
{
    for (int c = kCoords - 1; c >= 0; --c) {
        strides_[c] = static_cast<int>(size_);
        size_ *= static_cast<std::size_t>(orders_[c] + 1);
        total_degree_ += orders_[c];
    }

    factorials_.resize(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        const Orders k = decode(i, orders_);
        double f = 1.0;
        for (int c = 0; c < kCoords; ++c)
            for (int j = 2; j <= k[c]; ++j) f *= j;
        factorials_[i] = f;
    }

    for (std::size_t out = 0; out < size_; ++out) {
        const Orders k = decode(out, orders_);
        Orders mu{};
        for (;;) {
            Orders rest{};
            for (int c = 0; c < kCoords; ++c) rest[c] = k[c] - mu[c];
            products_.push_back({static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(index(mu)),
                                 static_cast<std::uint32_t>(index(rest))});
            int c = kCoords - 1;
            while (c >= 0 && mu[c] == k[c]) mu[c--] = 0;
            if (c < 0) break;
            ++mu[c];
        }
    }
}

std::size_t JetShape::index(const Orders& k) const
{
    std::size_t i = 0;
    for (int c = 0; c < kCoords; ++c) i += static_cast<std::size_t>(k[c]) * strides_[c];
    return i;
}

Jet::Jet(const JetShape& shape, double constant) : shape_(&shape), c_(shape.size(), 0.0) { c_[0] = constant; }

Jet Jet::variable(const JetShape& shape, int coord, double value)
{
    Jet j(shape, value);
    if (shape.orders()[coord] > 0) {
        Orders k{};
        k[coord] = 1;
        j.c_[shape.index(k)] = 1.0;
    }
    return j;
}

Jet& Jet::operator+=(const Jet& o)
{
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o)
{
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(double s)
{
    for (double& v : c_) v *= s;
    return *this;
}

Jet Jet::operator*(const Jet& o) const
{
    Jet r(*shape_, 0.0);
    for (const auto& t : shape_->products()) r.c_[t.out] += c_[t.lhs] * o.c_[t.rhs];
    return r;
}

Jet Jet::operator-() const
{
    Jet r = *this;
    r *= -1.0;
    return r;
}

Jet Jet::compose(const std::vector<double>& taylor) const
{
    // Horner in w = u - u0; w has no constant term so w^k vanishes for
    // k > total degree.
    Jet w = *this;
    w.c_[0] = 0.0;
    const int top = std::min<int>(static_cast<int>(taylor.size()) - 1, shape_->total_degree());
    Jet r(*shape_, taylor[top]);
    for (int k = top - 1; k >= 0; --k) {
        r = r * w;
        r.c_[0] += taylor[k];
    }
    return r;
}

Jet reciprocal(const Jet& u)
{
    const int K = u.shape().total_degree();
    const double u0 = u.constant();
    std::vector<double> a;
    double p = 1.0 / u0;
    for (int k = 0; k <= K; ++k) {
        a.push_back(k % 2 == 0 ? p : -p);
        p /= u0;
    }
    return u.compose(a);
}

Jet power(const Jet& u, int n)
{
    if (n < 0) return reciprocal(power(u, -n));
    Jet r(u.shape(), 1.0);
    Jet acc = u;
    while (n > 0) {
        if (n & 1) r = r * acc;
        n >>= 1;
        if (n) acc = acc * acc;
    }
    return r;
}

Jet apply(expr::Function f, const Jet& u)
{
    const double u0 = u.constant();
    const int K = u.shape().total_degree();
    std::vector<double> a;
    switch (f) {
    case expr::Function::sin:
    case expr::Function::cos: {
        const double s = std::sin(u0), c = std::cos(u0);
        // derivative cycle of sin: s, c, -s, -c; cos starts one step later
        const double cyc_sin[4] = {s, c, -s, -c};
        const double cyc_cos[4] = {c, -s, -c, s};
        const double* cyc = f == expr::Function::sin ? cyc_sin : cyc_cos;
        double fact = 1.0;
        for (int k = 0; k <= K; ++k) {
            if (k > 0) fact *= k;
            a.push_back(cyc[k % 4] / fact);
        }
        break;
    }
    case expr::Function::exp: {
        const double e = std::exp(u0);
        double fact = 1.0;
        for (int k = 0; k <= K; ++k) {
            if (k > 0) fact *= k;
            a.push_back(e / fact);
        }
        break;
    }
    case expr::Function::sqrt: {
        if (u0 < 0.0) return Jet(u) *= kNaN;
        // binom(1/2, k) u0^(1/2 - k)
        double binom = 1.0;
        double p = std::sqrt(u0);
        for (int k = 0; k <= K; ++k) {
            a.push_back(binom * p);
            binom *= (0.5 - k) / (k + 1);
            p /= u0;
        }
        break;
    }
    case expr::Function::log: {
        if (u0 <= 0.0) return Jet(u) *= kNaN;
        a.push_back(std::log(u0));
        double p = 1.0 / u0;
        for (int k = 1; k <= K; ++k) {
            a.push_back((k % 2 == 1 ? 1.0 : -1.0) * p / k);
            p /= u0;
        }
        break;
    }
    case expr::Function::abs: {
        a.push_back(std::abs(u0));
        a.push_back(u0 > 0.0 ? 1.0 : u0 < 0.0 ? -1.0 : kNaN);
        break;
    }
    }
    return u.compose(a);
}

int coordinate_of(expr::Variable v, int dim)
{
    using expr::Variable;
    if (dim == 1) {
        switch (v) {
        case Variable::x: return 0;
        case Variable::xi: return 2;
        case Variable::eta: return 4;
        default: return -1;
        }
    }
    switch (v) {
    case Variable::x1: return 0;
    case Variable::x2: return 1;
    case Variable::xi1: return 2;
    case Variable::xi2: return 3;
    case Variable::eta1: return 4;
    case Variable::eta2: return 5;
    default: return -1;
    }
}

Jet evaluate_jet(const expr::Node& node, const JetShape& shape, const std::array<double, kCoords>& seeds, int dim)
{
    using K = expr::Node::Kind;
    switch (node.kind) {
    case K::number: return Jet(shape, node.number);
    case K::pi: return Jet(shape, pi);
    case K::variable: {
        const int c = coordinate_of(node.variable, dim);
        return Jet::variable(shape, c, seeds[c]);
    }
    case K::negate: return -evaluate_jet(*node.lhs, shape, seeds, dim);
    case K::power: return power(evaluate_jet(*node.lhs, shape, seeds, dim), node.exponent);
    case K::call: return apply(node.function, evaluate_jet(*node.lhs, shape, seeds, dim));
    case K::add: {
        Jet l = evaluate_jet(*node.lhs, shape, seeds, dim);
        return l += evaluate_jet(*node.rhs, shape, seeds, dim);
    }
    case K::subtract: {
        Jet l = evaluate_jet(*node.lhs, shape, seeds, dim);
        return l -= evaluate_jet(*node.rhs, shape, seeds, dim);
    }
    case K::multiply:
        return evaluate_jet(*node.lhs, shape, seeds, dim) * evaluate_jet(*node.rhs, shape, seeds, dim);
    case K::divide:
        return evaluate_jet(*node.lhs, shape, seeds, dim) * reciprocal(evaluate_jet(*node.rhs, shape, seeds, dim));
    }
    return Jet(shape, kNaN);
}

} // namespace bilop::detail
