#include "vdsc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace vdsc::expr {

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) { return Expr(std::make_shared<const Node>(Constant{value})); }
Expr Expr::time() { return Expr(std::make_shared<const Node>(Variable{0})); }
Expr Expr::state(int k) {
    if (k < 1) throw ExprError("state index must be >= 1");
    return Expr(std::make_shared<const Node>(Variable{k}));
}
Expr Expr::unary(UnaryOp op, Expr arg) {
    return Expr(std::make_shared<const Node>(Unary{op, std::move(arg)}));
}
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
    return Expr(std::make_shared<const Node>(Binary{op, std::move(lhs), std::move(rhs)}));
}

bool Expr::is_constant() const noexcept { return std::holds_alternative<Constant>(*node_); }

bool Expr::is_constant(double value) const noexcept {
    const auto* c = std::get_if<Constant>(node_.get());
    return c != nullptr && c->value == value;
}

std::string variable_name(int index) { return index == 0 ? "t" : "x" + std::to_string(index); }

namespace {

std::optional<int> variable_index(std::string_view name) {
    if (name == "t") return 0;
    if (name.size() < 2 || name[0] != 'x' || name[1] == '0') return std::nullopt;
    int k = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
    if (ec != std::errc{} || ptr != name.data() + name.size()) return std::nullopt;
    return k;
}

std::optional<UnaryOp> function_named(std::string_view name) {
    if (name == "sin") return UnaryOp::Sin;
    if (name == "cos") return UnaryOp::Cos;
    if (name == "exp") return UnaryOp::Exp;
    if (name == "ln") return UnaryOp::Ln;
    if (name == "abs") return UnaryOp::Abs;
    if (name == "sqrt") return UnaryOp::Sqrt;
    return std::nullopt;
}

const char* function_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Ln: return "ln";
        case UnaryOp::Abs: return "abs";
        case UnaryOp::Sqrt: return "sqrt";
        case UnaryOp::Neg: return "-";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
   public:
    Parser(std::string_view src, int order) : src_(src), order_(order) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

   private:
    [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
        throw ParseError("syntax error at offset " + std::to_string(at) + ": " + msg, at);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (src_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    // '*' that is not the first half of '**'
    bool accept_mul() {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '*' && src_.substr(pos_, 2) != "**") {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept("+")) {
                lhs = Expr::binary(BinaryOp::Add, lhs, parse_term());
            } else if (accept("-")) {
                lhs = Expr::binary(BinaryOp::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept_mul()) {
                lhs = Expr::binary(BinaryOp::Mul, lhs, parse_unary());
            } else if (accept("/")) {
                lhs = Expr::binary(BinaryOp::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (accept("-")) return Expr::unary(UnaryOp::Neg, parse_unary());
        if (accept("+")) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (accept("^") || accept("**")) return Expr::binary(BinaryOp::Pow, base, parse_unary());
        return base;
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr inner = parse_expr();
            if (!accept(")")) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits();
            } else {
                pos_ = save;  // 'e' belongs to whatever follows; rejected there
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (ec != std::errc{} || ptr != src_.data() + pos_) fail_at("malformed number", start);
        return Expr::constant(value);
    }

    Expr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (auto fn = function_named(name)) {
            if (!accept("(")) fail("expected '(' after " + std::string(name));
            Expr arg = parse_expr();
            if (!accept(")")) fail("expected ')'");
            return Expr::unary(*fn, std::move(arg));
        }
        if (auto idx = variable_index(name)) {
            if (*idx > order_) {
                throw ParseError("variable " + std::string(name) + " out of range for order " +
                                     std::to_string(order_) + " at offset " + std::to_string(start),
                                 start);
            }
            return *idx == 0 ? Expr::time() : Expr::state(*idx);
        }
        throw ParseError("unknown identifier '" + std::string(name) + "' at offset " + std::to_string(start),
                         start);
    }

    std::string_view src_;
    int order_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printer

int precedence(const Expr& e) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return std::signbit(n.value) ? 3 : 5;
            } else if constexpr (std::is_same_v<T, Variable>) {
                return 5;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return n.op == UnaryOp::Neg ? 3 : 5;
            } else {
                switch (n.op) {
                    case BinaryOp::Add:
                    case BinaryOp::Sub: return 1;
                    case BinaryOp::Mul:
                    case BinaryOp::Div: return 2;
                    case BinaryOp::Pow: return 4;
                }
                return 0;
            }
        },
        e.node());
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string print(const Expr& e, int min_prec);

std::string print_raw(const Expr& e) {
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return format_number(n.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return variable_name(n.index);
            } else if constexpr (std::is_same_v<T, Unary>) {
                if (n.op == UnaryOp::Neg) return "-" + print(n.arg, 3);
                return std::string(function_name(n.op)) + "(" + print(n.arg, 0) + ")";
            } else {
                switch (n.op) {
                    case BinaryOp::Add: return print(n.lhs, 1) + " + " + print(n.rhs, 2);
                    case BinaryOp::Sub: return print(n.lhs, 1) + " - " + print(n.rhs, 2);
                    case BinaryOp::Mul: return print(n.lhs, 2) + "*" + print(n.rhs, 3);
                    case BinaryOp::Div: return print(n.lhs, 2) + "/" + print(n.rhs, 3);
                    case BinaryOp::Pow: return print(n.lhs, 5) + "^" + print(n.rhs, 3);
                }
                return {};
            }
        },
        e.node());
}

std::string print(const Expr& e, int min_prec) {
    std::string s = print_raw(e);
    return precedence(e) < min_prec ? "(" + s + ")" : s;
}

// ---------------------------------------------------------------------------
// Evaluation

[[noreturn]] void domain_error(const std::string& what, const Expr& node) {
    std::string printed = to_string(node);
    throw DomainError(what + " in '" + printed + "'", printed);
}

double eval_node(const Expr& e, const Env& env);

double eval_unary(const Expr& self, const Unary& u, const Env& env) {
    const double a = eval_node(u.arg, env);
    switch (u.op) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Sin: return std::sin(a);
        case UnaryOp::Cos: return std::cos(a);
        case UnaryOp::Exp: return std::exp(a);
        case UnaryOp::Ln:
            if (!(a > 0.0)) domain_error("logarithm of non-positive value", self);
            return std::log(a);
        case UnaryOp::Abs: return std::fabs(a);
        case UnaryOp::Sqrt:
            if (a < 0.0 || std::isnan(a)) domain_error("square root of negative value", self);
            return std::sqrt(a);
    }
    return 0.0;
}

double eval_binary(const Expr& self, const Binary& b, const Env& env) {
    const double l = eval_node(b.lhs, env);
    const double r = eval_node(b.rhs, env);
    switch (b.op) {
        case BinaryOp::Add: return l + r;
        case BinaryOp::Sub: return l - r;
        case BinaryOp::Mul: return l * r;
        case BinaryOp::Div:
            if (r == 0.0) domain_error("division by zero", self);
            return l / r;
        case BinaryOp::Pow:
            if (l == 0.0 && r < 0.0) domain_error("zero raised to a negative power", self);
            if (l < 0.0 && std::isfinite(r) && std::trunc(r) != r) {
                domain_error("negative base with non-integer exponent", self);
            }
            return std::pow(l, r);
    }
    return 0.0;
}

double eval_node(const Expr& e, const Env& env) {
    return std::visit(
        [&](const auto& n) -> double {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return n.value;
            } else if constexpr (std::is_same_v<T, Variable>) {
                if (n.index == 0) return env.t;
                if (static_cast<std::size_t>(n.index) > env.x.size()) {
                    throw ExprError("variable " + variable_name(n.index) + " not bound: environment has " +
                                    std::to_string(env.x.size()) + " states");
                }
                return env.x[static_cast<std::size_t>(n.index - 1)];
            } else if constexpr (std::is_same_v<T, Unary>) {
                return eval_unary(e, n, env);
            } else {
                return eval_binary(e, n, env);
            }
        },
        e.node());
}

// ---------------------------------------------------------------------------
// Differentiation

Expr pow_folded(Expr base, Expr exponent) {
    if (exponent.is_constant(1.0)) return base;
    if (exponent.is_constant(0.0)) return Expr::constant(1.0);
    return Expr::binary(BinaryOp::Pow, std::move(base), std::move(exponent));
}

Expr derive(const Expr& e, int var) {
    return std::visit(
        [&](const auto& n) -> Expr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return Expr::constant(0.0);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return Expr::constant(n.index == var ? 1.0 : 0.0);
            } else if constexpr (std::is_same_v<T, Unary>) {
                const Expr& u = n.arg;
                Expr du = derive(u, var);
                if (du.is_constant(0.0)) return du;
                switch (n.op) {
                    case UnaryOp::Neg: return neg(du);
                    case UnaryOp::Sin: return mul(Expr::unary(UnaryOp::Cos, u), du);
                    case UnaryOp::Cos: return neg(mul(Expr::unary(UnaryOp::Sin, u), du));
                    case UnaryOp::Exp: return mul(e, du);
                    case UnaryOp::Ln: return div(du, u);
                    case UnaryOp::Abs: return mul(div(u, e), du);
                    case UnaryOp::Sqrt: return div(du, mul(Expr::constant(2.0), e));
                }
                return Expr::constant(0.0);
            } else {
                const Expr& u = n.lhs;
                const Expr& v = n.rhs;
                if (n.op == BinaryOp::Pow) {
                    if (depends_on(v, var)) {
                        throw DifferentiationError("cannot differentiate '" + to_string(e) + "' with respect to " +
                                                   variable_name(var) + ": exponent is not constant");
                    }
                    Expr du = derive(u, var);
                    if (du.is_constant(0.0)) return du;
                    return mul(mul(v, pow_folded(u, sub(v, Expr::constant(1.0)))), du);
                }
                Expr du = derive(u, var);
                Expr dv = derive(v, var);
                switch (n.op) {
                    case BinaryOp::Add: return add(du, dv);
                    case BinaryOp::Sub: return sub(du, dv);
                    case BinaryOp::Mul: return add(mul(du, v), mul(u, dv));
                    case BinaryOp::Div: return div(sub(mul(du, v), mul(u, dv)), mul(v, v));
                    case BinaryOp::Pow: break;
                }
                return Expr::constant(0.0);
            }
        },
        e.node());
}

void collect_vars(const Expr& e, std::set<int>& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Variable>) {
                out.insert(n.index);
            } else if constexpr (std::is_same_v<T, Unary>) {
                collect_vars(n.arg, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_vars(n.lhs, out);
                collect_vars(n.rhs, out);
            }
        },
        e.node());
}

double const_value(const Expr& e) { return std::get<Constant>(e.node()).value; }

}  // namespace

// ---------------------------------------------------------------------------

Expr parse(std::string_view source, int order) {
    if (order < 1) throw ExprError("order must be >= 1");
    return Parser(source, order).parse_all();
}

double eval(const Expr& e, const Env& env) { return eval_node(e, env); }

Expr differentiate(const Expr& e, std::string_view var) {
    auto idx = variable_index(var);
    if (!idx) throw DifferentiationError("unknown differentiation variable '" + std::string(var) + "'");
    return derive(e, *idx);
}

std::set<std::string> free_vars(const Expr& e) {
    std::set<int> idx;
    collect_vars(e, idx);
    std::set<std::string> names;
    for (int i : idx) names.insert(variable_name(i));
    return names;
}

bool depends_on(const Expr& e, int var_index) {
    std::set<int> idx;
    collect_vars(e, idx);
    return idx.count(var_index) != 0;
}

int max_state_index(const Expr& e) {
    std::set<int> idx;
    collect_vars(e, idx);
    return idx.empty() ? 0 : *idx.rbegin();
}

std::string to_string(const Expr& e) { return print(e, 0); }

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node().index() != b.node().index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b.node());
            if constexpr (std::is_same_v<T, Constant>) {
                return na.value == nb.value && std::signbit(na.value) == std::signbit(nb.value);
            } else if constexpr (std::is_same_v<T, Variable>) {
                return na.index == nb.index;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return na.op == nb.op && structurally_equal(na.arg, nb.arg);
            } else {
                return na.op == nb.op && structurally_equal(na.lhs, nb.lhs) && structurally_equal(na.rhs, nb.rhs);
            }
        },
        a.node());
}

Expr add(Expr a, Expr b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(const_value(a) + const_value(b));
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return Expr::binary(BinaryOp::Add, std::move(a), std::move(b));
}

Expr sub(Expr a, Expr b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(const_value(a) - const_value(b));
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return neg(std::move(b));
    return Expr::binary(BinaryOp::Sub, std::move(a), std::move(b));
}

Expr mul(Expr a, Expr b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(const_value(a) * const_value(b));
    if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    return Expr::binary(BinaryOp::Mul, std::move(a), std::move(b));
}

Expr div(Expr a, Expr b) {
    if (a.is_constant() && b.is_constant() && const_value(b) != 0.0) {
        return Expr::constant(const_value(a) / const_value(b));
    }
    if (b.is_constant(1.0)) return a;
    return Expr::binary(BinaryOp::Div, std::move(a), std::move(b));
}

Expr neg(Expr a) {
    if (a.is_constant()) return Expr::constant(-const_value(a));
    if (const auto* u = std::get_if<Unary>(&a.node()); u != nullptr && u->op == UnaryOp::Neg) return u->arg;
    return Expr::unary(UnaryOp::Neg, std::move(a));
}

}  // namespace vdsc::expr
