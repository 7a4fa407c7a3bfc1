#include "bilop/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

namespace bilop::expr {
namespace {

struct VariableName {
    std::string_view name;
    Variable variable;
};

constexpr std::array<VariableName, 9> kVariables{{
    {"x", Variable::x},
    {"xi", Variable::xi},
    {"eta", Variable::eta},
    {"x1", Variable::x1},
    {"x2", Variable::x2},
    {"xi1", Variable::xi1},
    {"xi2", Variable::xi2},
    {"eta1", Variable::eta1},
    {"eta2", Variable::eta2},
}};

struct FunctionName {
    std::string_view name;
    Function function;
};

constexpr std::array<FunctionName, 6> kFunctions{{
    {"sin", Function::sin},
    {"cos", Function::cos},
    {"exp", Function::exp},
    {"sqrt", Function::sqrt},
    {"abs", Function::abs},
    {"log", Function::log},
}};

std::optional<Variable> lookup_variable(std::string_view s)
{
    for (const auto& v : kVariables)
        if (v.name == s) return v.variable;
    return std::nullopt;
}

std::optional<Function> lookup_function(std::string_view s)
{
    for (const auto& f : kFunctions)
        if (f.name == s) return f.function;
    return std::nullopt;
}

double apply_function(Function f, double v)
{
    switch (f) {
    case Function::sin: return std::sin(v);
    case Function::cos: return std::cos(v);
    case Function::exp: return std::exp(v);
    case Function::sqrt: return v < 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(v);
    case Function::abs: return std::abs(v);
    case Function::log: return v <= 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::log(v);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double bound_value(Variable v, const Bindings& b)
{
    switch (v) {
    case Variable::x:
    case Variable::x1: return b.x[0];
    case Variable::x2: return b.x[1];
    case Variable::xi:
    case Variable::xi1: return b.xi[0];
    case Variable::xi2: return b.xi[1];
    case Variable::eta:
    case Variable::eta1: return b.eta[0];
    case Variable::eta2: return b.eta[1];
    }
    return 0.0;
}

// -- parser ---------------------------------------------------------------

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse()
    {
        if (skip_space(), at_end()) throw ParseError(pos_ + 1, "empty expression");
        NodePtr root = parse_expr();
        skip_space();
        if (!at_end()) {
            if (src_[pos_] == ')') throw ParseError(pos_ + 1, "unbalanced parenthesis");
            throw ParseError(pos_ + 1, std::string("unexpected '") + src_[pos_] + "'");
        }
        return root;
    }

private:
    bool at_end() const { return pos_ >= src_.size(); }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (!at_end() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr()
    {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(Node::Kind::add, lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary(Node::Kind::subtract, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(Node::Kind::multiply, lhs, parse_unary());
            else if (accept('/'))
                lhs = make_binary(Node::Kind::divide, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-')) return make_negate(parse_unary());
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        if (!accept('^')) return base;
        return make_power(base, parse_exponent());
    }

    int parse_exponent()
    {
        const bool parenthesized = accept('(');
        const bool negative = accept('-');
        skip_space();
        const std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (start == pos_ || (!at_end() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')))
            throw ParseError(start + 1, "exponent must be an integer literal");
        int value = 0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (res.ec != std::errc()) throw ParseError(start + 1, "exponent out of range");
        if (parenthesized && !accept(')'))
            throw ParseError(pos_ + 1, "unbalanced parenthesis");
        return negative ? -value : value;
    }

    NodePtr parse_primary()
    {
        skip_space();
        if (at_end()) throw ParseError(pos_ + 1, "unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr();
            if (!accept(')')) throw ParseError(pos_ + 1, "unbalanced parenthesis");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        if (c == ')') throw ParseError(pos_ + 1, "unbalanced parenthesis");
        throw ParseError(pos_ + 1, std::string("unexpected '") + c + "'");
    }

    NodePtr parse_number()
    {
        const std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (!at_end() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                pos_ = look;
                while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double value = 0.0;
        const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_)
            throw ParseError(start + 1, "malformed number");
        return make_number(value);
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        if (auto f = lookup_function(name)) {
            if (!accept('(')) throw ParseError(pos_ + 1, "expected '(' after " + std::string(name));
            skip_space();
            if (!at_end() && src_[pos_] == ')')
                throw ParseError(pos_ + 1, "arity mismatch: " + std::string(name) + " takes 1 argument");
            NodePtr arg = parse_expr();
            skip_space();
            if (!at_end() && src_[pos_] == ',')
                throw ParseError(pos_ + 1, "arity mismatch: " + std::string(name) + " takes 1 argument");
            if (!accept(')')) throw ParseError(pos_ + 1, "unbalanced parenthesis");
            return make_call(*f, arg);
        }
        if (name == "pi") return make_pi();
        if (auto v = lookup_variable(name)) return make_variable(*v);
        throw ParseError(start + 1, "unknown identifier '" + std::string(name) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// -- printer --------------------------------------------------------------

int precedence(const Node& n)
{
    switch (n.kind) {
    case Node::Kind::add:
    case Node::Kind::subtract: return 1;
    case Node::Kind::multiply:
    case Node::Kind::divide: return 2;
    case Node::Kind::negate: return 3;
    case Node::Kind::power: return 4;
    default: return 5;
    }
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void print(const Node& n, std::string& out)
{
    auto child = [&out](const Node& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
    };

    switch (n.kind) {
    case Node::Kind::number: out += format_number(n.number); return;
    case Node::Kind::pi: out += "pi"; return;
    case Node::Kind::variable: out += name_of(n.variable); return;
    case Node::Kind::negate:
        out += '-';
        child(*n.lhs, precedence(*n.lhs) < 3);
        return;
    case Node::Kind::power:
        child(*n.lhs, precedence(*n.lhs) < 5);
        out += '^';
        out += std::to_string(n.exponent);
        return;
    case Node::Kind::call:
        out += name_of(n.function);
        out += '(';
        print(*n.lhs, out);
        out += ')';
        return;
    default: break;
    }

    const int p = precedence(n);
    const char op = n.kind == Node::Kind::add        ? '+'
                    : n.kind == Node::Kind::subtract ? '-'
                    : n.kind == Node::Kind::multiply ? '*'
                                                     : '/';
    child(*n.lhs, precedence(*n.lhs) < p);
    out += op;
    // All binary operators associate to the left.
    child(*n.rhs, precedence(*n.rhs) <= p);
}

void collect_variables(const NodePtr& n, std::set<Variable>& out)
{
    if (!n) return;
    if (n->kind == Node::Kind::variable) out.insert(n->variable);
    collect_variables(n->lhs, out);
    collect_variables(n->rhs, out);
}

} // namespace

std::string_view name_of(Variable v)
{
    for (const auto& e : kVariables)
        if (e.variable == v) return e.name;
    return "?";
}

std::string_view name_of(Function f)
{
    for (const auto& e : kFunctions)
        if (e.function == f) return e.name;
    return "?";
}

NodePtr make_number(double v)
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::number;
    n->number = v;
    return n;
}

NodePtr make_pi()
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::pi;
    return n;
}

NodePtr make_variable(Variable v)
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::variable;
    n->variable = v;
    return n;
}

NodePtr make_negate(NodePtr operand)
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::negate;
    n->lhs = std::move(operand);
    return n;
}

NodePtr make_binary(Node::Kind kind, NodePtr lhs, NodePtr rhs)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

NodePtr make_power(NodePtr base, int exponent)
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::power;
    n->lhs = std::move(base);
    n->exponent = exponent;
    return n;
}

NodePtr make_call(Function f, NodePtr argument)
{
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::call;
    n->function = f;
    n->lhs = std::move(argument);
    return n;
}

bool structurally_equal(const NodePtr& a, const NodePtr& b)
{
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case Node::Kind::number: return a->number == b->number;
    case Node::Kind::variable: return a->variable == b->variable;
    case Node::Kind::power:
        if (a->exponent != b->exponent) return false;
        break;
    case Node::Kind::call:
        if (a->function != b->function) return false;
        break;
    default: break;
    }
    return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
}

ParseError::ParseError(std::size_t offset, const std::string& reason)
    : InvalidInput("parse error at offset " + std::to_string(offset) + ": " + reason),
      offset_(offset), reason_(reason)
{
}

// -------------------------------------------------------------------------

Expr::Expr(NodePtr root) : root_(std::move(root))
{
    if (!root_) throw InvalidInput("Expr: null root");
    compile(root_, 0);
}

Expr Expr::parse(std::string_view source) { return Expr(Parser(source).parse()); }

std::set<Variable> Expr::free_variables() const
{
    std::set<Variable> out;
    collect_variables(root_, out);
    return out;
}

std::string Expr::to_string() const
{
    std::string out;
    print(*root_, out);
    return out;
}

void Expr::compile(const NodePtr& node, int depth)
{
    using Op = Instr::Op;
    const Node& n = *node;
    switch (n.kind) {
    case Node::Kind::number: program_.push_back({Op::push, n.number}); break;
    case Node::Kind::pi: program_.push_back({Op::pi}); break;
    case Node::Kind::variable: program_.push_back({Op::load, 0.0, n.variable}); break;
    case Node::Kind::negate:
        compile(n.lhs, depth);
        program_.push_back({Op::negate});
        break;
    case Node::Kind::power:
        compile(n.lhs, depth);
        program_.push_back({Op::power, 0.0, Variable::x, Function::sin, n.exponent});
        break;
    case Node::Kind::call:
        compile(n.lhs, depth);
        program_.push_back({Op::call, 0.0, Variable::x, n.function});
        break;
    default: {
        compile(n.lhs, depth);
        compile(n.rhs, depth + 1);
        const Op op = n.kind == Node::Kind::add        ? Op::add
                      : n.kind == Node::Kind::subtract ? Op::subtract
                      : n.kind == Node::Kind::multiply ? Op::multiply
                                                       : Op::divide;
        program_.push_back({op});
    }
    }
    max_depth_ = std::max(max_depth_, depth + 1);
}

double Expr::evaluate(const Bindings& b) const
{
    constexpr int kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_depth_ > kInline) {
        heap_stack.resize(max_depth_);
        stack = heap_stack.data();
    }

    int top = 0;
    using Op = Instr::Op;
    for (const Instr& in : program_) {
        switch (in.op) {
        case Op::push: stack[top++] = in.value; break;
        case Op::pi: stack[top++] = pi; break;
        case Op::load: stack[top++] = bound_value(in.variable, b); break;
        case Op::negate: stack[top - 1] = -stack[top - 1]; break;
        case Op::power: stack[top - 1] = std::pow(stack[top - 1], in.exponent); break;
        case Op::call: stack[top - 1] = apply_function(in.function, stack[top - 1]); break;
        case Op::add: --top; stack[top - 1] += stack[top]; break;
        case Op::subtract: --top; stack[top - 1] -= stack[top]; break;
        case Op::multiply: --top; stack[top - 1] *= stack[top]; break;
        case Op::divide: --top; stack[top - 1] /= stack[top]; break;
        }
    }
    return stack[0];
}

} // namespace bilop::expr
