#include "perorbit/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "perorbit/errors.hpp"

namespace perorbit::expr {

namespace {

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = v;
    return n;
}

NodePtr make_var(std::size_t slot) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->slot = slot;
    return n;
}

NodePtr make_call(Func f, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->func = f;
    n->lhs = std::move(a);
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->kind == Kind::Constant && n->value == v; }
bool is_const(const NodePtr& n) { return n->kind == Kind::Constant; }

double apply(Func f, double a) {
    switch (f) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Exp: return std::exp(a);
        case Func::Log: return std::log(a);
        case Func::Sqrt: return std::sqrt(a);
        case Func::Abs: return std::abs(a);
    }
    return 0.0;
}

double apply(Kind k, double a, double b) {
    switch (k) {
        case Kind::Add: return a + b;
        case Kind::Sub: return a - b;
        case Kind::Mul: return a * b;
        case Kind::Div: return a / b;
        case Kind::Pow: return std::pow(a, b);
        default: return 0.0;
    }
}

// Builders with light simplification.

NodePtr make_neg(NodePtr a) {
    if (is_const(a)) return make_const(-a->value);
    if (a->kind == Kind::Neg) return a->lhs;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Neg;
    n->lhs = std::move(a);
    return n;
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
    if (is_const(a) && is_const(b)) {
        const double v = apply(k, a->value, b->value);
        if (std::isfinite(v)) return make_const(v);
    }
    switch (k) {
        case Kind::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Kind::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return make_neg(b);
            break;
        case Kind::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            if (is_const(a, -1.0)) return make_neg(b);
            if (is_const(b, -1.0)) return make_neg(a);
            break;
        case Kind::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Kind::Pow:
            if (is_const(b, 0.0)) return make_const(1.0);
            if (is_const(b, 1.0)) return a;
            break;
        default: break;
    }
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
}

bool uses_variables(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == Kind::Variable) return true;
    return uses_variables(n->lhs) || uses_variables(n->rhs);
}

// Recursive descent parser.
class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

    NodePtr run() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) throw SyntaxError(pos_, "operator or end of input");
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make_binary(Kind::Add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = make_binary(Kind::Sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_binary(Kind::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = make_binary(Kind::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make_neg(parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (!accept('^')) return base;
        NodePtr exponent = parse_unary();
        if (uses_variables(exponent)) {
            // a^b with variable b becomes exp(b log a)
            return make_call(Func::Exp, make_binary(Kind::Mul, exponent, make_call(Func::Log, base)));
        }
        return make_binary(Kind::Pow, base, exponent);
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError(pos_, "number, identifier or '('");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            if (!accept(')')) throw SyntaxError(pos_, "')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw SyntaxError(pos_, "number, identifier or '('");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        double v = 0.0;
        const auto [end, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), v);
        if (ec != std::errc()) throw SyntaxError(start, "number");
        pos_ = static_cast<std::size_t>(end - src_.data());
        return make_const(v);
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(src_.substr(start, pos_ - start));
        static const std::pair<const char*, Func> funcs[] = {{"sin", Func::Sin},   {"cos", Func::Cos},
                                                             {"exp", Func::Exp},   {"log", Func::Log},
                                                             {"sqrt", Func::Sqrt}, {"abs", Func::Abs}};
        for (const auto& [fname, f] : funcs) {
            if (name == fname) {
                if (!accept('(')) throw SyntaxError(pos_, "'(' after " + name);
                NodePtr arg = parse_sum();
                if (!accept(')')) throw SyntaxError(pos_, "')'");
                const NodePtr call = make_call(f, arg);
                if (is_const(arg)) {
                    const double v = apply(f, arg->value);
                    if (std::isfinite(v)) return make_const(v);
                }
                return call;
            }
        }
        const auto it = std::find(vars_.begin(), vars_.end(), name);
        if (it != vars_.end()) return make_var(static_cast<std::size_t>(it - vars_.begin()));
        if (name == "pi") return make_const(std::numbers::pi);
        if (name == "e") return make_const(std::numbers::e);
        throw UnknownIdentifier(name, start);
    }

    std::string_view src_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

const char* func_name(Func f) {
    switch (f) {
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
    }
    return "?";
}

int precedence(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        case Kind::Constant: return n->value < 0.0 ? 3 : 5;
        default: return 5;
    }
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string print(const NodePtr& n, const std::vector<std::string>& vars) {
    auto wrap = [&](const NodePtr& child, bool parens) {
        const std::string s = print(child, vars);
        return parens ? "(" + s + ")" : s;
    };
    switch (n->kind) {
        case Kind::Constant: return format_number(n->value);
        case Kind::Variable: return vars[n->slot];
        case Kind::Neg: return "-" + wrap(n->lhs, precedence(n->lhs) < 4);
        case Kind::Call: return std::string(func_name(n->func)) + "(" + print(n->lhs, vars) + ")";
        case Kind::Pow: return wrap(n->lhs, precedence(n->lhs) < 5) + "^" + wrap(n->rhs, precedence(n->rhs) < 3);
        default: break;
    }
    const int p = precedence(n);
    const char* op = n->kind == Kind::Add ? " + " : n->kind == Kind::Sub ? " - " : n->kind == Kind::Mul ? "*" : "/";
    return wrap(n->lhs, precedence(n->lhs) < p) + op + wrap(n->rhs, precedence(n->rhs) <= p);
}

double evaluate(const NodePtr& n, std::span<const double> values, const std::vector<std::string>& vars) {
    double v = 0.0;
    switch (n->kind) {
        case Kind::Constant: return n->value;
        case Kind::Variable: v = values[n->slot]; break;
        case Kind::Neg: v = -evaluate(n->lhs, values, vars); break;
        case Kind::Call: v = apply(n->func, evaluate(n->lhs, values, vars)); break;
        default: v = apply(n->kind, evaluate(n->lhs, values, vars), evaluate(n->rhs, values, vars)); break;
    }
    if (!std::isfinite(v)) throw NonFiniteValue(print(n, vars));
    return v;
}

NodePtr derive(const NodePtr& n, std::size_t slot) {
    switch (n->kind) {
        case Kind::Constant: return make_const(0.0);
        case Kind::Variable: return make_const(n->slot == slot ? 1.0 : 0.0);
        case Kind::Neg: return make_neg(derive(n->lhs, slot));
        case Kind::Add: return make_binary(Kind::Add, derive(n->lhs, slot), derive(n->rhs, slot));
        case Kind::Sub: return make_binary(Kind::Sub, derive(n->lhs, slot), derive(n->rhs, slot));
        case Kind::Mul:
            return make_binary(Kind::Add, make_binary(Kind::Mul, derive(n->lhs, slot), n->rhs),
                               make_binary(Kind::Mul, n->lhs, derive(n->rhs, slot)));
        case Kind::Div: {
            const NodePtr num = make_binary(Kind::Sub, make_binary(Kind::Mul, derive(n->lhs, slot), n->rhs),
                                            make_binary(Kind::Mul, n->lhs, derive(n->rhs, slot)));
            return make_binary(Kind::Div, num, make_binary(Kind::Pow, n->rhs, make_const(2.0)));
        }
        case Kind::Pow: {
            // exponent is constant by construction
            const double c = n->rhs->kind == Kind::Constant ? n->rhs->value : 0.0;
            const NodePtr outer = make_binary(Kind::Mul, make_const(c),
                                              make_binary(Kind::Pow, n->lhs, make_const(c - 1.0)));
            return make_binary(Kind::Mul, outer, derive(n->lhs, slot));
        }
        case Kind::Call: {
            const NodePtr& a = n->lhs;
            NodePtr outer;
            switch (n->func) {
                case Func::Sin: outer = make_call(Func::Cos, a); break;
                case Func::Cos: outer = make_neg(make_call(Func::Sin, a)); break;
                case Func::Exp: outer = n; break;
                case Func::Log: return make_binary(Kind::Div, derive(a, slot), a);
                case Func::Sqrt:
                    return make_binary(Kind::Div, derive(a, slot), make_binary(Kind::Mul, make_const(2.0), n));
                case Func::Abs: outer = make_binary(Kind::Div, a, n); break;
            }
            return make_binary(Kind::Mul, outer, derive(a, slot));
        }
    }
    return make_const(0.0);
}

bool mentions(const NodePtr& n, std::size_t slot) {
    if (!n) return false;
    if (n->kind == Kind::Variable) return n->slot == slot;
    return mentions(n->lhs, slot) || mentions(n->rhs, slot);
}

}  // namespace

Expr::Expr(NodePtr root, std::vector<std::string> vars) : root_(std::move(root)), vars_(std::move(vars)) {
    if (!root_) throw std::invalid_argument("empty expression");
}

std::size_t Expr::slot(std::string_view name) const {
    const auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) throw std::invalid_argument("variable '" + std::string(name) + "' is not declared");
    return static_cast<std::size_t>(it - vars_.begin());
}

bool Expr::depends_on(std::string_view name) const { return mentions(root_, slot(name)); }

Expr parse(std::string_view src, const std::vector<std::string>& vars) {
    for (const auto& v : vars) {
        if (v == "pi" || v == "e") throw std::invalid_argument("variable name shadows a constant: " + v);
    }
    return Expr(Parser(src, vars).run(), vars);
}

double eval(const Expr& e, std::span<const double> values) {
    if (values.size() < e.vars().size()) throw std::invalid_argument("eval: missing variable values");
    return evaluate(e.root(), values, e.vars());
}

double eval(const Expr& e, const std::map<std::string, double>& env) {
    std::vector<double> values;
    values.reserve(e.vars().size());
    for (const auto& name : e.vars()) {
        const auto it = env.find(name);
        if (it == env.end()) {
            if (mentions(e.root(), e.slot(name))) throw std::invalid_argument("eval: no value for '" + name + "'");
            values.push_back(0.0);
        } else {
            values.push_back(it->second);
        }
    }
    return eval(e, values);
}

Expr differentiate(const Expr& e, std::string_view var) { return Expr(derive(e.root(), e.slot(var)), e.vars()); }

std::string to_string(const Expr& e) { return print(e.root(), e.vars()); }

}  // namespace perorbit::expr
