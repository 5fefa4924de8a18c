#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "barrierkit/linalg.hpp"

namespace barrierkit::expr {

// ---------------------------------------------------------------------------
// Dual numbers (forward-mode, one directional derivative per pass)
// ---------------------------------------------------------------------------

struct Dual {
  double value = 0.0;
  double deriv = 0.0;

  Dual() = default;
  Dual(double v) : value(v), deriv(0.0) {}
  Dual(double v, double d) : value(v), deriv(d) {}
};

inline Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.deriv + b.deriv}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.deriv - b.deriv}; }
inline Dual operator-(const Dual& a) { return {-a.value, -a.deriv}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
}

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

enum class UnaryFn { Neg, Sin, Cos, Tanh, Exp, Sqrt, Abs };
enum class BinaryFn { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Constant, Variable, Unary, Binary };
  Kind kind = Kind::Constant;
  double constant = 0.0;
  std::string name;  // Variable only
  UnaryFn ufn = UnaryFn::Neg;
  BinaryFn bfn = BinaryFn::Add;
  NodePtr a;
  NodePtr b;
  std::size_t offset = 0;  // byte offset in the source text, for diagnostics
};

/// Parse with standard precedence (pow > unary minus > mul/div > add/sub),
/// left associativity, parentheses, and function-call syntax for the unary
/// functions. Throws ParseError with a byte offset on malformed input.
NodePtr parse_expression(std::string_view text);

/// Fully parenthesised rendering; parse(render(t)) is structurally equal to t.
std::string render(const NodePtr& node);

bool ast_equal(const NodePtr& a, const NodePtr& b);

/// Check every variable against the declared symbol set, that pow exponents
/// are integer constants, and (optionally) that abs does not appear. Throws
/// ParseError carrying the offending node's offset.
void validate(const NodePtr& node, const std::set<std::string>& symbols, bool allow_abs);

/// Tree-walking evaluation against named bindings. Not the hot path.
double eval(const NodePtr& node, const std::map<std::string, double>& bindings);

/// One dual pass per requested variable; gradient[j] is the exact partial
/// derivative with respect to wrt[j].
std::pair<double, Vec> eval_with_gradient(const NodePtr& node,
                                          const std::map<std::string, double>& bindings,
                                          const std::vector<std::string>& wrt);

// ---------------------------------------------------------------------------
// Compiled form (slot-indexed postfix tape) for per-step evaluation
// ---------------------------------------------------------------------------

class CompiledExpr {
public:
  /// slots maps variable names to indices into the evaluation environment;
  /// params are substituted as constants at compile time.
  static CompiledExpr compile(const NodePtr& node, const std::map<std::string, int>& slots,
                              const std::map<std::string, double>& params);

  double eval(const double* env) const;
  /// Forward-mode pass seeded on one environment slot.
  Dual eval_dual(const double* env, int seed_slot) const;

private:
  enum class Op : unsigned char {
    PushConst, PushVar, Neg, Sin, Cos, Tanh, Exp, Sqrt, Abs,
    Add, Sub, Mul, Div, PowInt
  };
  struct Instr {
    Op op;
    int slot = 0;   // PushVar
    double c = 0;   // PushConst
    int iexp = 0;   // PowInt
    std::size_t offset = 0;
  };
  std::vector<Instr> tape_;
  std::size_t stack_depth_ = 0;
};

}  // namespace barrierkit::expr
