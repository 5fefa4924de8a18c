#include <doctest.h>

#include <cmath>
#include <random>

#include "barrierkit/errors.hpp"
#include "barrierkit/expr.hpp"

using namespace barrierkit;
using namespace barrierkit::expr;

TEST_CASE("parse shapes and precedence") {
  // "1 - x2^2" is sub(1, pow(x2, 2))
  const NodePtr ast = parse_expression("1 - x2^2");
  REQUIRE(ast->kind == Node::Kind::Binary);
  CHECK(ast->bfn == BinaryFn::Sub);
  CHECK(ast->a->kind == Node::Kind::Constant);
  CHECK(ast->a->constant == 1.0);
  REQUIRE(ast->b->kind == Node::Kind::Binary);
  CHECK(ast->b->bfn == BinaryFn::Pow);
  CHECK(ast->b->a->name == "x2");
  CHECK(ast->b->b->constant == 2.0);

  // pow binds tighter than unary minus: -x^2 == -(x^2)
  const NodePtr neg = parse_expression("-x1^2");
  REQUIRE(neg->kind == Node::Kind::Unary);
  CHECK(neg->ufn == UnaryFn::Neg);
  CHECK(neg->a->bfn == BinaryFn::Pow);

  // left associativity
  const NodePtr chain = parse_expression("8 - 4 - 2");
  CHECK(eval(chain, {}) == doctest::Approx(2.0));

  // the hardening-spring expression evaluates correctly
  const NodePtr spring = parse_expression("-(k/m)*(x1 + x1^3) - (b/m)*x2 + u1/m");
  const std::map<std::string, double> env{{"k", 2.0}, {"m", 1.0}, {"b", 2.0},
                                          {"x1", 1.0}, {"x2", 1.0}, {"u1", 0.0}};
  CHECK(eval(spring, env) == doctest::Approx(-6.0));
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse_expression("x1 +");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(parse_expression(""), ParseError);
  CHECK_THROWS_AS(parse_expression("   "), ParseError);
  CHECK_THROWS_AS(parse_expression("(x1"), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(x1)"), ParseError);  // unknown function
  CHECK_THROWS_AS(parse_expression("x1 $ 2"), ParseError);
}

TEST_CASE("validation") {
  const std::set<std::string> symbols{"x1", "x2", "u1", "k"};
  CHECK_NOTHROW(validate(parse_expression("k*x1 + sin(x2)*u1"), symbols, false));

  try {
    validate(parse_expression("x1 + bogus"), symbols, false);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    CHECK(std::string(e.what()).find("x1") != std::string::npos);  // lists valid symbols
  }

  CHECK_THROWS_AS(validate(parse_expression("abs(x1)"), symbols, false), ParseError);
  CHECK_NOTHROW(validate(parse_expression("abs(x1)"), symbols, true));

  // pow exponent must be an integer constant
  CHECK_THROWS_AS(validate(parse_expression("x1^x2"), symbols, false), ParseError);
  CHECK_THROWS_AS(validate(parse_expression("x1^0.5"), symbols, false), ParseError);
  CHECK_NOTHROW(validate(parse_expression("x1^-2"), symbols, false));
}

TEST_CASE("eval_with_gradient examples") {
  {
    const auto [v, g] = eval_with_gradient(parse_expression("1 - x2^2"),
                                           {{"x1", 0.0}, {"x2", 2.0}}, {"x1", "x2"});
    CHECK(v == doctest::Approx(-3.0));
    CHECK(g[0] == doctest::Approx(0.0));
    CHECK(g[1] == doctest::Approx(-4.0));
  }
  {
    const auto [v, g] = eval_with_gradient(parse_expression("x1 - 3"),
                                           {{"x1", 3.0}, {"x2", 9.0}}, {"x1", "x2"});
    CHECK(v == doctest::Approx(0.0));
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.0));
  }
  {
    const auto [v, g] =
        eval_with_gradient(parse_expression("x1*x2"), {{"x1", 2.0}, {"x2", 5.0}}, {"x1"});
    CHECK(v == doctest::Approx(10.0));
    CHECK(g[0] == doctest::Approx(5.0));
  }
}

TEST_CASE("numeric errors carry locations") {
  CHECK_THROWS_AS(eval(parse_expression("1/(x1 - 1)"), {{"x1", 1.0}}), NumericError);
  CHECK_THROWS_AS(eval(parse_expression("sqrt(x1)"), {{"x1", -4.0}}), NumericError);
  CHECK_THROWS_AS(eval_with_gradient(parse_expression("sqrt(x1)"), {{"x1", 0.0}}, {"x1"}),
                  NumericError);
  CHECK_THROWS_AS(eval(parse_expression("x1 + y"), {{"x1", 1.0}}), ArgumentError);
}

TEST_CASE("render/parse round trip over a corpus") {
  const std::vector<std::string> corpus = {
      "1 - x2^2",
      "u1",
      "-(k/m)*(x1 + x1^3) - (b/m)*x2 + u1/m",
      "-(k/m)*(x1 + x1^3/200) - (b/m)*x2 + u1/m",
      "a_lower - x1",
      "x1 - a_upper",
      "sin(x1)*cos(x2)",
      "tanh(x1 + x2)",
      "exp(-x1^2)",
      "sqrt(x1^2 + x2^2 + 1)",
      "abs(x1 - x2)",
      "x1^3 - 3*x1*x2^2",
      "1/(1 + x1^2)",
      "-x1",
      "--x1",
      "2^3^2",
      "x1^-1",
      "(x1 + x2)*(x1 - x2)",
      "0.5*x1 + 1e-3*x2",
      "3.25e2 - x1/7",
      "x1*x2*u1",
      "sin(cos(tanh(x1)))",
      "x1 - x2 - u1 - 1",
      "x1/(x2/(u1 + 2))",
      "((x1))",
      "x1 + 2*(x2 - 1)^2",
      "-(x1 + x2)^3",
      "1 - 2 - 3 - 4",
      "2*3/4*5",
      "exp(x1)*exp(x2)",
      "k*(x1 + b*x2)",
      "m/(k + 1e-9)",
      "x1^2^2",
      "sqrt(abs(x2) + 1)",
      "cos(2*x1 - 3*x2 + 0.5)",
      "x2^4 - x2^2 + 0.25",
      "(1 - x2)^2*(2 + x2)/3",
      "(1 + x2)^2*(2 - x2)/3",
      "u1 - u1",
      "x1*0 + 1",
      "1000000*x1",
      "1e-12 + x1",
      "-1e3*x2",
      "x1 - -x2",
      "tanh(x1)^2 - 1",
      "sin(x1)^2 + cos(x1)^2",
      "(x1 - 1)*(x1 - 2)*(x1 - 3)",
      "x1/2 + x2/3 + u1/6",
      "exp(x1 - x2^2)",
      "7",
  };
  REQUIRE(corpus.size() >= 50);
  for (const std::string& s : corpus) {
    const NodePtr a = parse_expression(s);
    const NodePtr b = parse_expression(render(a));
    CHECK_MESSAGE(ast_equal(a, b), "round trip failed for: ", s);
  }
}

TEST_CASE("dual gradients match central differences") {
  const std::vector<std::string> exprs = {
      "1 - x2^2",
      "-(k/m)*(x1 + x1^3) - (b/m)*x2 + u1/m",
      "sin(x1)*cos(x2) + tanh(u1)",
      "exp(-x1^2/4) + sqrt(x2^2 + 1)",
      "x1^3*x2 - u1/(x2^2 + 2)",
  };
  std::mt19937_64 rng(101);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  const std::vector<std::string> wrt{"x1", "x2", "u1"};
  for (const std::string& s : exprs) {
    const NodePtr ast = parse_expression(s);
    for (int trial = 0; trial < 200; ++trial) {
      std::map<std::string, double> env{{"x1", uniform(-2, 2)},
                                        {"x2", uniform(-2, 2)},
                                        {"u1", uniform(-1, 1)},
                                        {"k", 2.0},
                                        {"m", 1.0},
                                        {"b", 2.0}};
      const auto [value, grad] = eval_with_gradient(ast, env, wrt);
      (void)value;
      const double h = 1e-6;
      for (std::size_t j = 0; j < wrt.size(); ++j) {
        auto ep = env, em = env;
        ep[wrt[j]] += h;
        em[wrt[j]] -= h;
        const double fd = (eval(ast, ep) - eval(ast, em)) / (2 * h);
        CHECK(std::fabs(grad[j] - fd) <= 1e-6 + 1e-5 * std::fabs(fd));
      }
    }
  }
}

TEST_CASE("compiled expressions agree with tree evaluation") {
  const std::map<std::string, int> slots{{"x1", 0}, {"x2", 1}, {"u1", 2}};
  const std::map<std::string, double> params{{"k", 2.0}};
  const NodePtr ast = parse_expression("k*x1^2 - sin(x2)/(u1 + 3)");
  const CompiledExpr tape = CompiledExpr::compile(ast, slots, params);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double env[3] = {(rng() >> 11) * 0x1.0p-53 * 4 - 2, (rng() >> 11) * 0x1.0p-53 * 4 - 2,
                           (rng() >> 11) * 0x1.0p-53};
    const std::map<std::string, double> bindings{
        {"x1", env[0]}, {"x2", env[1]}, {"u1", env[2]}, {"k", 2.0}};
    CHECK(tape.eval(env) == doctest::Approx(eval(ast, bindings)).epsilon(1e-14));
    const auto [v, g] = eval_with_gradient(ast, bindings, {"x1", "x2", "u1"});
    (void)v;
    for (int j = 0; j < 3; ++j)
      CHECK(tape.eval_dual(env, j).deriv == doctest::Approx(g[j]).epsilon(1e-13));
  }
}
