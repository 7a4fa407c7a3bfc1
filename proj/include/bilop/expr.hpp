#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bilop/common.hpp"

namespace bilop::expr {

enum class Variable { x, xi, eta, x1, x2, xi1, xi2, eta1, eta2 };
enum class Function { sin, cos, exp, sqrt, abs, log };

std::string_view name_of(Variable v);
std::string_view name_of(Function f);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { number, pi, variable, negate, add, subtract, multiply, divide, power, call };

    Kind kind = Kind::number;
    double number = 0.0;
    Variable variable = Variable::x;
    Function function = Function::sin;
    int exponent = 0;
    NodePtr lhs;  // operand of negate, base of power, argument of call
    NodePtr rhs;
};

NodePtr make_number(double v);
NodePtr make_pi();
NodePtr make_variable(Variable v);
NodePtr make_negate(NodePtr operand);
NodePtr make_binary(Node::Kind kind, NodePtr lhs, NodePtr rhs);
NodePtr make_power(NodePtr base, int exponent);
NodePtr make_call(Function f, NodePtr argument);

bool structurally_equal(const NodePtr& a, const NodePtr& b);

/// Parse failure. offset() is the 1-based byte position of the offending
/// token; running off the end of the input reports size + 1.
class ParseError : public InvalidInput {
public:
    ParseError(std::size_t offset, const std::string& reason);
    std::size_t offset() const { return offset_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t offset_;
    std::string reason_;
};

/// Values bound to the free variables. In 1D only component 0 is read.
struct Bindings {
    Vec x{};
    Vec xi{};
    Vec eta{};
};

/**
 * Expr: an immutable parsed expression.
 *
 * Grammar (whitespace-insensitive):
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := '-' unary | power
 *   power   := primary ('^' integer)?      integer may carry a leading '-'
 *   primary := number | 'pi' | variable | function '(' expr ')' | '(' expr ')'
 *
 * Evaluation runs a postfix program compiled once at construction, so it is
 * cheap and safe to call concurrently. Domain violations (log of a
 * nonpositive number, sqrt of a negative one) evaluate to NaN.
 */
class Expr {
public:
    explicit Expr(NodePtr root);

    static Expr parse(std::string_view source);

    const NodePtr& root() const { return root_; }
    std::set<Variable> free_variables() const;
    double evaluate(const Bindings& b) const;

    /// Canonical text with the minimal parentheses needed to reparse to the
    /// same tree.
    std::string to_string() const;

private:
    struct Instr {
        enum class Op { push, pi, load, negate, add, subtract, multiply, divide, power, call };
        Op op;
        double value = 0.0;
        Variable variable = Variable::x;
        Function function = Function::sin;
        int exponent = 0;
    };

    void compile(const NodePtr& node, int depth);

    NodePtr root_;
    std::vector<Instr> program_;
    int max_depth_ = 0;
};

} // namespace bilop::expr
