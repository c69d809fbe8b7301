#pragma once

// Scalar expression DSL used to describe plants and reference signals.
//
// Grammar (whitespace insignificant):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary (('^' | '**') unary)?        right-associative
//   primary := number | 't' | 'x'<k> | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | ln | abs | sqrt

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace vdsc::expr {

enum class UnaryOp { Neg, Sin, Cos, Exp, Ln, Abs, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

class ExprError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

class ParseError : public ExprError {
   public:
    ParseError(const std::string& what, std::size_t offset) : ExprError(what), offset_(offset) {}
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

   private:
    std::size_t offset_;
};

/// Evaluation outside the mathematical domain of a node (x/0, ln of x <= 0, ...).
class DomainError : public ExprError {
   public:
    DomainError(const std::string& what, std::string node) : ExprError(what), node_(std::move(node)) {}
    /// Printed form of the offending sub-expression.
    [[nodiscard]] const std::string& node() const noexcept { return node_; }

   private:
    std::string node_;
};

class DifferentiationError : public ExprError {
   public:
    using ExprError::ExprError;
};

/// Evaluation point. x[k-1] holds state x<k>.
struct Env {
    double t = 0.0;
    std::span<const double> x;
};

class Expr;

struct Constant {
    double value;
};

/// Index 0 is time; k >= 1 is state x<k>.
struct Variable {
    int index;
};

struct Unary;
struct Binary;

/// Immutable expression tree. Copies share structure.
class Expr {
   public:
    using Node = std::variant<Constant, Variable, Unary, Binary>;

    Expr();  // constant 0
    static Expr constant(double value);
    static Expr time();
    static Expr state(int k);
    static Expr unary(UnaryOp op, Expr arg);
    static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

    [[nodiscard]] const Node& node() const noexcept;

    [[nodiscard]] bool is_constant() const noexcept;
    [[nodiscard]] bool is_constant(double value) const noexcept;

   private:
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct Unary {
    UnaryOp op;
    Expr arg;
};

struct Binary {
    BinaryOp op;
    Expr lhs;
    Expr rhs;
};

inline const Expr::Node& Expr::node() const noexcept { return *node_; }

/// Parses `source` for a system of order `order` (variables t, x1..x<order>).
/// Throws ParseError with the byte offset of the offending token.
[[nodiscard]] Expr parse(std::string_view source, int order);

/// Throws DomainError at the first node evaluated outside its domain.
[[nodiscard]] double eval(const Expr& e, const Env& env);

/// Symbolic d/d`var`, where var is "t" or "x<k>". Light constant folding only.
[[nodiscard]] Expr differentiate(const Expr& e, std::string_view var);

[[nodiscard]] std::set<std::string> free_vars(const Expr& e);
[[nodiscard]] bool depends_on(const Expr& e, int var_index);
/// Highest state index referenced, 0 if only t or constants.
[[nodiscard]] int max_state_index(const Expr& e);

/// Re-parseable infix form with minimal parentheses.
[[nodiscard]] std::string to_string(const Expr& e);

[[nodiscard]] bool structurally_equal(const Expr& a, const Expr& b);

[[nodiscard]] std::string variable_name(int index);

// Folding builders, used by differentiate and the strict-form rewrite.
[[nodiscard]] Expr add(Expr a, Expr b);
[[nodiscard]] Expr sub(Expr a, Expr b);
[[nodiscard]] Expr mul(Expr a, Expr b);
[[nodiscard]] Expr div(Expr a, Expr b);
[[nodiscard]] Expr neg(Expr a);

}  // namespace vdsc::expr
