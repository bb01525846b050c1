#include "snlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <vector>

namespace snlab::expr {

enum class Op { constant, variable, add, sub, mul, div, pow_int, neg, sin, cos, exp, sqrt };

struct Node {
    Op op;
    double value = 0.0;   // constant
    int var = -1;         // variable index; is_time marks the t variable
    bool is_time = false;
    int exponent = 1;     // pow_int
    NodePtr a, b;
};

namespace {

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    return n;
}

NodePtr make_var(int idx, bool is_time = false) {
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->var = idx;
    n->is_time = is_time;
    return n;
}

NodePtr make1(Op op, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    return n;
}

NodePtr make2(Op op, NodePtr a, NodePtr b) {
    // light constant folding keeps derivative trees small
    if (a->op == Op::constant && b->op == Op::constant) {
        switch (op) {
            case Op::add: return make_const(a->value + b->value);
            case Op::sub: return make_const(a->value - b->value);
            case Op::mul: return make_const(a->value * b->value);
            case Op::div: return make_const(a->value / b->value);
            default: break;
        }
    }
    if (op == Op::mul) {
        if (a->op == Op::constant && a->value == 0.0) return make_const(0.0);
        if (b->op == Op::constant && b->value == 0.0) return make_const(0.0);
        if (a->op == Op::constant && a->value == 1.0) return b;
        if (b->op == Op::constant && b->value == 1.0) return a;
    }
    if (op == Op::add) {
        if (a->op == Op::constant && a->value == 0.0) return b;
        if (b->op == Op::constant && b->value == 0.0) return a;
    }
    if (op == Op::sub && b->op == Op::constant && b->value == 0.0) return a;
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_pow(NodePtr a, int k) {
    if (k == 0) return make_const(1.0);
    if (k == 1) return a;
    auto n = std::make_shared<Node>();
    n->op = Op::pow_int;
    n->a = std::move(a);
    n->exponent = k;
    return n;
}

class Parser {
  public:
    Parser(const std::string& src, int dim) : src_(src), dim_(dim) {}

    NodePtr run() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("trailing input", pos_);
        return e;
    }

  private:
    const std::string& src_;
    int dim_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    NodePtr parse_sum() {
        NodePtr e = parse_term();
        for (;;) {
            if (eat('+')) e = make2(Op::add, e, parse_term());
            else if (eat('-')) e = make2(Op::sub, e, parse_term());
            else return e;
        }
    }

    NodePtr parse_term() {
        NodePtr e = parse_factor();
        for (;;) {
            if (eat('*')) e = make2(Op::mul, e, parse_factor());
            else if (eat('/')) e = make2(Op::div, e, parse_factor());
            else return e;
        }
    }

    NodePtr parse_factor() {
        NodePtr base = parse_unary();
        if (eat('^')) {
            skip_ws();
            bool negative = eat('-');
            std::size_t start = pos_;
            long v = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                v = v * 10 + (src_[pos_] - '0');
                ++pos_;
            }
            if (pos_ == start) throw ParseError("integer exponent expected", pos_);
            return make_pow(base, static_cast<int>(negative ? -v : v));
        }
        return base;
    }

    NodePtr parse_unary() {
        if (eat('-')) return make1(Op::neg, parse_unary());
        return parse_primary();
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_sum();
            if (!eat(')')) throw ParseError("')' expected", pos_);
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.' ||
                src_[end] == 'e' || src_[end] == 'E' ||
                ((src_[end] == '+' || src_[end] == '-') && end > pos_ &&
                 (src_[end - 1] == 'e' || src_[end - 1] == 'E'))))
            ++end;
        try {
            const double v = std::stod(src_.substr(pos_, end - pos_));
            pos_ = end;
            return make_const(v);
        } catch (...) {
            throw ParseError("malformed number", pos_);
        }
    }

    NodePtr parse_ident() {
        std::size_t end = pos_;
        while (end < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
            ++end;
        const std::string name = src_.substr(pos_, end - pos_);
        const std::size_t at = pos_;
        pos_ = end;

        if (name == "pi") return make_const(M_PI);
        if (name == "t") return make_var(dim_, true);
        if (name.size() >= 2 && name[0] == 'x') {
            int k = 0;
            for (std::size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i])))
                    throw ParseError("unknown identifier '" + name + "'", at);
                k = k * 10 + (name[i] - '0');
            }
            if (k < 1 || k > dim_)
                throw ParseError("variable '" + name + "' out of range for dimension " +
                                 std::to_string(dim_), at);
            return make_var(k - 1);
        }

        Op fn;
        if (name == "sin") fn = Op::sin;
        else if (name == "cos") fn = Op::cos;
        else if (name == "exp") fn = Op::exp;
        else if (name == "sqrt") fn = Op::sqrt;
        else throw ParseError("unknown identifier '" + name + "'", at);
        if (!eat('(')) throw ParseError("'(' expected after function name", pos_);
        NodePtr arg = parse_sum();
        if (!eat(')')) throw ParseError("')' expected", pos_);
        return make1(fn, std::move(arg));
    }
};

} // namespace

NodePtr parse(const std::string& src, int dim) { return Parser(src, dim).run(); }

NodePtr differentiate(const NodePtr& e, int var) {
    switch (e->op) {
        case Op::constant: return make_const(0.0);
        case Op::variable: return make_const(e->var == var ? 1.0 : 0.0);
        case Op::add: return make2(Op::add, differentiate(e->a, var), differentiate(e->b, var));
        case Op::sub: return make2(Op::sub, differentiate(e->a, var), differentiate(e->b, var));
        case Op::mul:
            return make2(Op::add, make2(Op::mul, differentiate(e->a, var), e->b),
                         make2(Op::mul, e->a, differentiate(e->b, var)));
        case Op::div:
            return make2(Op::div,
                         make2(Op::sub, make2(Op::mul, differentiate(e->a, var), e->b),
                               make2(Op::mul, e->a, differentiate(e->b, var))),
                         make_pow(e->b, 2));
        case Op::pow_int:
            return make2(Op::mul,
                         make2(Op::mul, make_const(e->exponent), make_pow(e->a, e->exponent - 1)),
                         differentiate(e->a, var));
        case Op::neg: return make1(Op::neg, differentiate(e->a, var));
        case Op::sin: return make2(Op::mul, make1(Op::cos, e->a), differentiate(e->a, var));
        case Op::cos:
            return make1(Op::neg, make2(Op::mul, make1(Op::sin, e->a), differentiate(e->a, var)));
        case Op::exp: return make2(Op::mul, e, differentiate(e->a, var));
        case Op::sqrt:
            return make2(Op::div, differentiate(e->a, var),
                         make2(Op::mul, make_const(2.0), e));
    }
    throw Error("unreachable expression node");
}

double evaluate(const NodePtr& e, std::span<const double> x, double t) {
    switch (e->op) {
        case Op::constant: return e->value;
        case Op::variable:
            if (e->is_time) return t;
            if (e->var < 0 || e->var >= static_cast<int>(x.size()))
                throw Error("expression variable out of range for the evaluation point");
            return x[e->var];
        case Op::add: return evaluate(e->a, x, t) + evaluate(e->b, x, t);
        case Op::sub: return evaluate(e->a, x, t) - evaluate(e->b, x, t);
        case Op::mul: return evaluate(e->a, x, t) * evaluate(e->b, x, t);
        case Op::div: return evaluate(e->a, x, t) / evaluate(e->b, x, t);
        case Op::pow_int: {
            const double base = evaluate(e->a, x, t);
            return e->exponent >= 0 ? std::pow(base, e->exponent)
                                    : 1.0 / std::pow(base, -e->exponent);
        }
        case Op::neg: return -evaluate(e->a, x, t);
        case Op::sin: return std::sin(evaluate(e->a, x, t));
        case Op::cos: return std::cos(evaluate(e->a, x, t));
        case Op::exp: return std::exp(evaluate(e->a, x, t));
        case Op::sqrt: return std::sqrt(evaluate(e->a, x, t));
    }
    throw Error("unreachable expression node");
}

std::string to_string(const NodePtr& e) {
    std::ostringstream os;
    switch (e->op) {
        case Op::constant: os << e->value; break;
        case Op::variable: os << (e->is_time ? std::string("t") : "x" + std::to_string(e->var + 1)); break;
        case Op::add: os << '(' << to_string(e->a) << " + " << to_string(e->b) << ')'; break;
        case Op::sub: os << '(' << to_string(e->a) << " - " << to_string(e->b) << ')'; break;
        case Op::mul: os << '(' << to_string(e->a) << " * " << to_string(e->b) << ')'; break;
        case Op::div: os << '(' << to_string(e->a) << " / " << to_string(e->b) << ')'; break;
        case Op::pow_int: os << to_string(e->a) << '^' << e->exponent; break;
        case Op::neg: os << "-(" << to_string(e->a) << ')'; break;
        case Op::sin: os << "sin(" << to_string(e->a) << ')'; break;
        case Op::cos: os << "cos(" << to_string(e->a) << ')'; break;
        case Op::exp: os << "exp(" << to_string(e->a) << ')'; break;
        case Op::sqrt: os << "sqrt(" << to_string(e->a) << ')'; break;
    }
    return os.str();
}

} // namespace snlab::expr
