#include "barrierkit/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>

#include "barrierkit/errors.hpp"

namespace barrierkit::expr {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind = Tok::End;
  double number = 0.0;
  std::string text;
  std::size_t offset = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view s) : src_(s) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': tok_.kind = Tok::Plus; ++pos_; return;
      case '-': tok_.kind = Tok::Minus; ++pos_; return;
      case '*': tok_.kind = Tok::Star; ++pos_; return;
      case '/': tok_.kind = Tok::Slash; ++pos_; return;
      case '^': tok_.kind = Tok::Caret; ++pos_; return;
      case '(': tok_.kind = Tok::LParen; ++pos_; return;
      case ')': tok_.kind = Tok::RParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
        ++end;
      if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
        std::size_t e = end + 1;
        if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
        if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
          ++e;
          while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
          end = e;
        }
      }
      const std::string text(src_.substr(pos_, end - pos_));
      try {
        tok_.number = std::stod(text);
      } catch (const std::exception&) {
        throw ParseError("malformed number '" + text + "'", pos_);
      }
      tok_.kind = Tok::Number;
      tok_.text = text;
      pos_ = end;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) ||
                                   src_[end] == '_'))
        ++end;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(pos_, end - pos_));
      pos_ = end;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

// ---------------------------------------------------------------------------
// Parser (recursive descent)
// ---------------------------------------------------------------------------

NodePtr make_const(double v, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  n->constant = v;
  n->offset = off;
  return n;
}

NodePtr make_unary(UnaryFn f, NodePtr a, std::size_t off) {
  // Fold negation of constants so "-3" is Constant(-3), keeping the
  // parse/render round trip structural.
  if (f == UnaryFn::Neg && a->kind == Node::Kind::Constant)
    return make_const(-a->constant, off);
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->ufn = f;
  n->a = std::move(a);
  n->offset = off;
  return n;
}

NodePtr make_binary(BinaryFn f, NodePtr a, NodePtr b, std::size_t off) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->bfn = f;
  n->a = std::move(a);
  n->b = std::move(b);
  n->offset = off;
  return n;
}

class Parser {
public:
  explicit Parser(std::string_view s) : lex_(s) {}

  NodePtr parse() {
    NodePtr e = sum();
    if (lex_.peek().kind != Tok::End)
      throw ParseError("expected end of expression or operator", lex_.peek().offset);
    return e;
  }

private:
  NodePtr sum() {
    NodePtr lhs = product();
    for (;;) {
      const Tok k = lex_.peek().kind;
      if (k != Tok::Plus && k != Tok::Minus) return lhs;
      const Token op = lex_.take();
      NodePtr rhs = product();
      lhs = make_binary(k == Tok::Plus ? BinaryFn::Add : BinaryFn::Sub, lhs, rhs, op.offset);
    }
  }

  NodePtr product() {
    NodePtr lhs = unary();
    for (;;) {
      const Tok k = lex_.peek().kind;
      if (k != Tok::Star && k != Tok::Slash) return lhs;
      const Token op = lex_.take();
      NodePtr rhs = unary();
      lhs = make_binary(k == Tok::Star ? BinaryFn::Mul : BinaryFn::Div, lhs, rhs, op.offset);
    }
  }

  NodePtr unary() {
    if (lex_.peek().kind == Tok::Minus) {
      const Token op = lex_.take();
      return make_unary(UnaryFn::Neg, unary(), op.offset);
    }
    return power();
  }

  NodePtr power() {
    NodePtr lhs = primary();
    while (lex_.peek().kind == Tok::Caret) {
      const Token op = lex_.take();
      // Allow a sign directly on the exponent: x^-2.
      NodePtr rhs;
      if (lex_.peek().kind == Tok::Minus) {
        const Token neg = lex_.take();
        rhs = make_unary(UnaryFn::Neg, primary(), neg.offset);
      } else {
        rhs = primary();
      }
      lhs = make_binary(BinaryFn::Pow, lhs, rhs, op.offset);
    }
    return lhs;
  }

  NodePtr primary() {
    const Token t = lex_.peek();
    switch (t.kind) {
      case Tok::Number:
        lex_.take();
        return make_const(t.number, t.offset);
      case Tok::LParen: {
        lex_.take();
        NodePtr e = sum();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        lex_.take();
        if (lex_.peek().kind == Tok::LParen) {
          const UnaryFn f = function_named(t.text, t.offset);
          lex_.take();
          NodePtr arg = sum();
          expect(Tok::RParen, "')'");
          return make_unary(f, arg, t.offset);
        }
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Variable;
        n->name = t.text;
        n->offset = t.offset;
        return n;
      }
      case Tok::End:
        throw ParseError("expected number, identifier, '-' or '('; got end of input", t.offset);
      default:
        throw ParseError("expected number, identifier, '-' or '('", t.offset);
    }
  }

  void expect(Tok k, const char* what) {
    if (lex_.peek().kind != k)
      throw ParseError(std::string("expected ") + what, lex_.peek().offset);
    lex_.take();
  }

  static UnaryFn function_named(const std::string& name, std::size_t off) {
    if (name == "sin") return UnaryFn::Sin;
    if (name == "cos") return UnaryFn::Cos;
    if (name == "tanh") return UnaryFn::Tanh;
    if (name == "exp") return UnaryFn::Exp;
    if (name == "sqrt") return UnaryFn::Sqrt;
    if (name == "abs") return UnaryFn::Abs;
    throw ParseError("unknown function '" + name + "' (supported: sin, cos, tanh, exp, sqrt, abs)",
                     off);
  }

  Lexer lex_;
};

const char* unary_name(UnaryFn f) {
  switch (f) {
    case UnaryFn::Neg: return "-";
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::Tanh: return "tanh";
    case UnaryFn::Exp: return "exp";
    case UnaryFn::Sqrt: return "sqrt";
    case UnaryFn::Abs: return "abs";
  }
  return "?";
}

double apply_unary_value(UnaryFn f, double a, std::size_t off) {
  switch (f) {
    case UnaryFn::Neg: return -a;
    case UnaryFn::Sin: return std::sin(a);
    case UnaryFn::Cos: return std::cos(a);
    case UnaryFn::Tanh: return std::tanh(a);
    case UnaryFn::Exp: return std::exp(a);
    case UnaryFn::Sqrt:
      if (a < 0.0) throw NumericError("sqrt of negative value (at offset " + std::to_string(off) + ")");
      return std::sqrt(a);
    case UnaryFn::Abs: return std::fabs(a);
  }
  return 0.0;
}

Dual apply_unary_dual(UnaryFn f, const Dual& a, std::size_t off) {
  switch (f) {
    case UnaryFn::Neg: return -a;
    case UnaryFn::Sin: return {std::sin(a.value), a.deriv * std::cos(a.value)};
    case UnaryFn::Cos: return {std::cos(a.value), -a.deriv * std::sin(a.value)};
    case UnaryFn::Tanh: {
      const double t = std::tanh(a.value);
      return {t, a.deriv * (1.0 - t * t)};
    }
    case UnaryFn::Exp: {
      const double e = std::exp(a.value);
      return {e, a.deriv * e};
    }
    case UnaryFn::Sqrt: {
      if (a.value < 0.0)
        throw NumericError("sqrt of negative value (at offset " + std::to_string(off) + ")");
      const double s = std::sqrt(a.value);
      if (a.value == 0.0 && a.deriv != 0.0)
        throw NumericError("sqrt derivative singular at zero (at offset " + std::to_string(off) + ")");
      return {s, a.value == 0.0 ? 0.0 : a.deriv / (2.0 * s)};
    }
    case UnaryFn::Abs:
      return {std::fabs(a.value), a.value >= 0.0 ? a.deriv : -a.deriv};
  }
  return {};
}

double pow_int(double base, int k) {
  if (k == 0) return 1.0;
  const bool neg = k < 0;
  unsigned long long e = neg ? static_cast<unsigned long long>(-(long long)k)
                             : static_cast<unsigned long long>(k);
  double acc = 1.0, b = base;
  while (e) {
    if (e & 1ull) acc *= b;
    b *= b;
    e >>= 1;
  }
  return neg ? 1.0 / acc : acc;
}

int integer_exponent(const NodePtr& rhs, std::size_t off) {
  if (rhs->kind != Node::Kind::Constant)
    throw ParseError("pow exponent must be an integer constant", off);
  const double v = rhs->constant;
  const double r = std::nearbyint(v);
  if (std::fabs(v - r) > 0.0 || std::fabs(r) > 1e9)
    throw ParseError("pow exponent must be an integer constant", off);
  return static_cast<int>(r);
}

}  // namespace

NodePtr parse_expression(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) throw ParseError("empty expression", 0);
  return Parser(text).parse();
}

std::string render(const NodePtr& node) {
  char buf[40];
  switch (node->kind) {
    case Node::Kind::Constant:
      std::snprintf(buf, sizeof buf, "%.17g", node->constant);
      return buf;
    case Node::Kind::Variable:
      return node->name;
    case Node::Kind::Unary:
      if (node->ufn == UnaryFn::Neg) return "(-" + render(node->a) + ")";
      return std::string(unary_name(node->ufn)) + "(" + render(node->a) + ")";
    case Node::Kind::Binary: {
      const char* op = "?";
      switch (node->bfn) {
        case BinaryFn::Add: op = " + "; break;
        case BinaryFn::Sub: op = " - "; break;
        case BinaryFn::Mul: op = "*"; break;
        case BinaryFn::Div: op = "/"; break;
        case BinaryFn::Pow: op = "^"; break;
      }
      return "(" + render(node->a) + op + render(node->b) + ")";
    }
  }
  return "?";
}

bool ast_equal(const NodePtr& a, const NodePtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Node::Kind::Constant: return a->constant == b->constant;
    case Node::Kind::Variable: return a->name == b->name;
    case Node::Kind::Unary: return a->ufn == b->ufn && ast_equal(a->a, b->a);
    case Node::Kind::Binary:
      return a->bfn == b->bfn && ast_equal(a->a, b->a) && ast_equal(a->b, b->b);
  }
  return false;
}

void validate(const NodePtr& node, const std::set<std::string>& symbols, bool allow_abs) {
  switch (node->kind) {
    case Node::Kind::Constant:
      return;
    case Node::Kind::Variable: {
      if (symbols.count(node->name)) return;
      std::string valid;
      for (const auto& s : symbols) {
        if (!valid.empty()) valid += ", ";
        valid += s;
      }
      throw ParseError("unknown identifier '" + node->name + "' (valid symbols: " + valid + ")",
                       node->offset);
    }
    case Node::Kind::Unary:
      if (node->ufn == UnaryFn::Abs && !allow_abs)
        throw ParseError("abs is not smooth and is not allowed here", node->offset);
      validate(node->a, symbols, allow_abs);
      return;
    case Node::Kind::Binary:
      if (node->bfn == BinaryFn::Pow) {
        integer_exponent(node->b, node->offset);
        validate(node->a, symbols, allow_abs);
        return;
      }
      validate(node->a, symbols, allow_abs);
      validate(node->b, symbols, allow_abs);
      return;
  }
}

double eval(const NodePtr& node, const std::map<std::string, double>& bindings) {
  switch (node->kind) {
    case Node::Kind::Constant:
      return node->constant;
    case Node::Kind::Variable: {
      auto it = bindings.find(node->name);
      if (it == bindings.end())
        throw ArgumentError("unbound variable '" + node->name + "'");
      return it->second;
    }
    case Node::Kind::Unary:
      return apply_unary_value(node->ufn, eval(node->a, bindings), node->offset);
    case Node::Kind::Binary: {
      if (node->bfn == BinaryFn::Pow)
        return pow_int(eval(node->a, bindings), integer_exponent(node->b, node->offset));
      const double a = eval(node->a, bindings);
      const double b = eval(node->b, bindings);
      switch (node->bfn) {
        case BinaryFn::Add: return a + b;
        case BinaryFn::Sub: return a - b;
        case BinaryFn::Mul: return a * b;
        case BinaryFn::Div:
          if (b == 0.0)
            throw NumericError("division by zero (at offset " + std::to_string(node->offset) + ")");
          return a / b;
        default: return 0.0;
      }
    }
  }
  return 0.0;
}

namespace {

Dual eval_dual_tree(const NodePtr& node, const std::map<std::string, double>& bindings,
                    const std::string& seed) {
  switch (node->kind) {
    case Node::Kind::Constant:
      return {node->constant, 0.0};
    case Node::Kind::Variable: {
      auto it = bindings.find(node->name);
      if (it == bindings.end())
        throw ArgumentError("unbound variable '" + node->name + "'");
      return {it->second, node->name == seed ? 1.0 : 0.0};
    }
    case Node::Kind::Unary:
      return apply_unary_dual(node->ufn, eval_dual_tree(node->a, bindings, seed), node->offset);
    case Node::Kind::Binary: {
      if (node->bfn == BinaryFn::Pow) {
        const int k = integer_exponent(node->b, node->offset);
        const Dual a = eval_dual_tree(node->a, bindings, seed);
        if (a.value == 0.0 && k < 0)
          throw NumericError("zero raised to negative power (at offset " +
                             std::to_string(node->offset) + ")");
        const double v = pow_int(a.value, k);
        const double d = k == 0 ? 0.0 : k * pow_int(a.value, k - 1) * a.deriv;
        return {v, d};
      }
      const Dual a = eval_dual_tree(node->a, bindings, seed);
      const Dual b = eval_dual_tree(node->b, bindings, seed);
      switch (node->bfn) {
        case BinaryFn::Add: return a + b;
        case BinaryFn::Sub: return a - b;
        case BinaryFn::Mul: return a * b;
        case BinaryFn::Div:
          if (b.value == 0.0)
            throw NumericError("division by zero (at offset " + std::to_string(node->offset) + ")");
          return {a.value / b.value,
                  (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
        default: return {};
      }
    }
  }
  return {};
}

}  // namespace

std::pair<double, Vec> eval_with_gradient(const NodePtr& node,
                                          const std::map<std::string, double>& bindings,
                                          const std::vector<std::string>& wrt) {
  Vec grad(wrt.size(), 0.0);
  double value = 0.0;
  for (std::size_t j = 0; j < wrt.size(); ++j) {
    const Dual d = eval_dual_tree(node, bindings, wrt[j]);
    grad[j] = d.deriv;
    value = d.value;
  }
  if (wrt.empty()) value = eval(node, bindings);
  return {value, grad};
}

// ---------------------------------------------------------------------------
// CompiledExpr
// ---------------------------------------------------------------------------

CompiledExpr CompiledExpr::compile(const NodePtr& node, const std::map<std::string, int>& slots,
                                   const std::map<std::string, double>& params) {
  CompiledExpr out;
  std::size_t depth = 0, max_depth = 0;
  std::function<void(const NodePtr&)> emit = [&](const NodePtr& nd) {
    switch (nd->kind) {
      case Node::Kind::Constant:
        out.tape_.push_back({Op::PushConst, 0, nd->constant, 0, nd->offset});
        max_depth = std::max(max_depth, ++depth);
        return;
      case Node::Kind::Variable: {
        if (auto it = slots.find(nd->name); it != slots.end()) {
          out.tape_.push_back({Op::PushVar, it->second, 0.0, 0, nd->offset});
        } else if (auto pit = params.find(nd->name); pit != params.end()) {
          out.tape_.push_back({Op::PushConst, 0, pit->second, 0, nd->offset});
        } else {
          throw ArgumentError("compile: unresolved symbol '" + nd->name + "'");
        }
        max_depth = std::max(max_depth, ++depth);
        return;
      }
      case Node::Kind::Unary: {
        emit(nd->a);
        Op op = Op::Neg;
        switch (nd->ufn) {
          case UnaryFn::Neg: op = Op::Neg; break;
          case UnaryFn::Sin: op = Op::Sin; break;
          case UnaryFn::Cos: op = Op::Cos; break;
          case UnaryFn::Tanh: op = Op::Tanh; break;
          case UnaryFn::Exp: op = Op::Exp; break;
          case UnaryFn::Sqrt: op = Op::Sqrt; break;
          case UnaryFn::Abs: op = Op::Abs; break;
        }
        out.tape_.push_back({op, 0, 0.0, 0, nd->offset});
        return;
      }
      case Node::Kind::Binary: {
        if (nd->bfn == BinaryFn::Pow) {
          const int k = integer_exponent(nd->b, nd->offset);
          emit(nd->a);
          out.tape_.push_back({Op::PowInt, 0, 0.0, k, nd->offset});
          return;
        }
        emit(nd->a);
        emit(nd->b);
        Op op = Op::Add;
        switch (nd->bfn) {
          case BinaryFn::Add: op = Op::Add; break;
          case BinaryFn::Sub: op = Op::Sub; break;
          case BinaryFn::Mul: op = Op::Mul; break;
          case BinaryFn::Div: op = Op::Div; break;
          default: break;
        }
        out.tape_.push_back({op, 0, 0.0, 0, nd->offset});
        --depth;
        return;
      }
    }
  };
  emit(node);
  out.stack_depth_ = max_depth + 1;
  if (out.stack_depth_ > 64)
    throw ArgumentError("expression nests too deeply to compile");
  return out;
}

double CompiledExpr::eval(const double* env) const {
  double stack[64];
  std::size_t sp = 0;
  for (const Instr& in : tape_) {
    switch (in.op) {
      case Op::PushConst: stack[sp++] = in.c; break;
      case Op::PushVar: stack[sp++] = env[in.slot]; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case Op::Cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case Op::Tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
      case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case Op::Sqrt:
        if (stack[sp - 1] < 0.0)
          throw NumericError("sqrt of negative value (at offset " + std::to_string(in.offset) + ")");
        stack[sp - 1] = std::sqrt(stack[sp - 1]);
        break;
      case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
      case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::Div:
        --sp;
        if (stack[sp] == 0.0)
          throw NumericError("division by zero (at offset " + std::to_string(in.offset) + ")");
        stack[sp - 1] /= stack[sp];
        break;
      case Op::PowInt: stack[sp - 1] = pow_int(stack[sp - 1], in.iexp); break;
    }
  }
  return stack[0];
}

Dual CompiledExpr::eval_dual(const double* env, int seed_slot) const {
  Dual stack[64];
  std::size_t sp = 0;
  for (const Instr& in : tape_) {
    switch (in.op) {
      case Op::PushConst: stack[sp++] = Dual{in.c, 0.0}; break;
      case Op::PushVar: stack[sp++] = Dual{env[in.slot], in.slot == seed_slot ? 1.0 : 0.0}; break;
      case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::Sin: stack[sp - 1] = apply_unary_dual(UnaryFn::Sin, stack[sp - 1], in.offset); break;
      case Op::Cos: stack[sp - 1] = apply_unary_dual(UnaryFn::Cos, stack[sp - 1], in.offset); break;
      case Op::Tanh: stack[sp - 1] = apply_unary_dual(UnaryFn::Tanh, stack[sp - 1], in.offset); break;
      case Op::Exp: stack[sp - 1] = apply_unary_dual(UnaryFn::Exp, stack[sp - 1], in.offset); break;
      case Op::Sqrt: stack[sp - 1] = apply_unary_dual(UnaryFn::Sqrt, stack[sp - 1], in.offset); break;
      case Op::Abs: stack[sp - 1] = apply_unary_dual(UnaryFn::Abs, stack[sp - 1], in.offset); break;
      case Op::Add: --sp; stack[sp - 1] = stack[sp - 1] + stack[sp]; break;
      case Op::Sub: --sp; stack[sp - 1] = stack[sp - 1] - stack[sp]; break;
      case Op::Mul: --sp; stack[sp - 1] = stack[sp - 1] * stack[sp]; break;
      case Op::Div: {
        --sp;
        const Dual& b = stack[sp];
        if (b.value == 0.0)
          throw NumericError("division by zero (at offset " + std::to_string(in.offset) + ")");
        Dual& a = stack[sp - 1];
        a = Dual{a.value / b.value, (a.deriv * b.value - a.value * b.deriv) / (b.value * b.value)};
        break;
      }
      case Op::PowInt: {
        Dual& a = stack[sp - 1];
        if (a.value == 0.0 && in.iexp < 0)
          throw NumericError("zero raised to negative power (at offset " +
                             std::to_string(in.offset) + ")");
        const double v = pow_int(a.value, in.iexp);
        const double d = in.iexp == 0 ? 0.0 : in.iexp * pow_int(a.value, in.iexp - 1) * a.deriv;
        a = Dual{v, d};
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace barrierkit::expr
