#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace perorbit::expr {

enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Func { Sin, Cos, Exp, Log, Sqrt, Abs };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Kind kind = Kind::Constant;
    double value = 0.0;
    /// Variable slot in the owning expression's variable list.
    std::size_t slot = 0;
    Func func = Func::Sin;
    NodePtr lhs, rhs;
};

/// Immutable expression over a declared, ordered variable set.
/// Grammar: + - * / ^ (right associative, binds tighter than unary minus),
/// parentheses, sin cos exp log sqrt abs, constants pi and e.
class Expr {
public:
    Expr(NodePtr root, std::vector<std::string> vars);

    const NodePtr& root() const noexcept { return root_; }
    const std::vector<std::string>& vars() const noexcept { return vars_; }
    /// Slot of a declared variable. Throws std::invalid_argument.
    std::size_t slot(std::string_view name) const;
    bool depends_on(std::string_view name) const;

private:
    NodePtr root_;
    std::vector<std::string> vars_;
};

/// Throws SyntaxError or UnknownIdentifier.
Expr parse(std::string_view src, const std::vector<std::string>& vars);

/// Values are given in the order of expr.vars(). Throws NonFiniteValue.
double eval(const Expr& e, std::span<const double> values);
double eval(const Expr& e, const std::map<std::string, double>& env);

/// Symbolic derivative with constant folding and 0/1 elimination. The
/// derivative of abs(a) is a/abs(a), undefined at a = 0.
Expr differentiate(const Expr& e, std::string_view var);

/// Text that parses back to an equivalent expression.
std::string to_string(const Expr& e);

}  // namespace perorbit::expr
