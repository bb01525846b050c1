#ifndef SNLAB_EXPRESSION_HPP
#define SNLAB_EXPRESSION_HPP

#include <memory>
#include <span>
#include <string>

#include "snlab/errors.hpp"

namespace snlab::expr {

/// Parse error with the 0-based position in the source string.
struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Small expression grammar for analytic potentials and reparametrizations:
/// variables x1..x9 and t, numeric literals, pi, binary + - * /, integer ^,
/// unary -, and sin, cos, exp, sqrt.  Differentiation is symbolic, so the
/// Schwarzian gets exact third derivatives.
NodePtr parse(const std::string& src, int dim);

/// d/d(var); var = 0..dim-1 for x1..xd, var = dim for t.
NodePtr differentiate(const NodePtr& e, int var);

double evaluate(const NodePtr& e, std::span<const double> x, double t);

std::string to_string(const NodePtr& e);

} // namespace snlab::expr

#endif
