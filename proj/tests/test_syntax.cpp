#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aam/syntax.hpp"

using namespace aam;

TEST_CASE("labels are pre-order positions starting at 1") {
  Program p = parse("((λ (x) x) (λ (y) (y y)))");
  // 1:(app) 2:(λ x) 3:x 4:(λ y) 5:(y y) 6:y 7:y
  CHECK(p.node_count() == 7);
  CHECK(p.root->label == 1);
  CHECK(p.node(1)->kind == ExprKind::App);
  CHECK(p.node(2)->kind == ExprKind::Lam);
  CHECK(p.node(2)->name == "x");
  CHECK(p.node(3)->kind == ExprKind::Var);
  CHECK(p.node(4)->kind == ExprKind::Lam);
  CHECK(p.node(5)->kind == ExprKind::App);
  CHECK(p.node(7)->name == "y");
  for (int l = 1; l <= p.node_count(); l++) {
    REQUIRE(p.node(l) != nullptr);
    CHECK(p.node(l)->label == l);
  }
  CHECK(p.node(0) == nullptr);
  CHECK(p.node(8) == nullptr);
}

TEST_CASE("lambda keyword and λ are interchangeable") {
  Program a = parse("((lambda (x) x) #f)");
  Program b = parse("((λ (x) x) #f)");
  CHECK(unparse(*a.root) == unparse(*b.root));
  CHECK(unparse(*a.root) == "((λ (x) x) #f)");
}

TEST_CASE("all forms unparse canonically") {
  const char* src = "(if (set! x callcc) #f (λ (y) (y x)))";
  Program p = parse(src);
  CHECK(unparse(*p.root) == src);
}

TEST_CASE("whitespace and newlines are insignificant") {
  Program p = parse("  (\n (λ   (x)\n x)  \t #f\n) ");
  CHECK(unparse(*p.root) == "((λ (x) x) #f)");
}

TEST_CASE("unparse parse round trip preserves labels") {
  const char* sources[] = {
      "#f",
      "callcc",
      "(λ (x) x)",
      "((λ (x) (x x)) (λ (y) y))",
      "(if #f (λ (a) a) (if callcc #f #f))",
      "(λ (x) (set! x (λ (y) (y x))))",
      "(callcc (λ (k) (k #f)))",
  };
  for (const char* src : sources) {
    Program p = parse(src);
    Program q = parse(unparse(*p.root));
    CHECK(unparse(*q.root) == unparse(*p.root));
    CHECK(q.node_count() == p.node_count());
    for (int l = 1; l <= p.node_count(); l++) CHECK(q.node(l)->kind == p.node(l)->kind);
  }
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("("), ParseError);
  CHECK_THROWS_AS(parse(")"), ParseError);
  CHECK_THROWS_AS(parse("(λ (x))"), ParseError);          // missing body
  CHECK_THROWS_AS(parse("(λ (x y) x)"), ParseError);      // two params
  CHECK_THROWS_AS(parse("(λ x x)"), ParseError);          // unparenthesized param
  CHECK_THROWS_AS(parse("(if #f #f)"), ParseError);       // two-armed if
  CHECK_THROWS_AS(parse("(set! (λ (x) x) #f)"), ParseError);
  CHECK_THROWS_AS(parse("(f g h)"), ParseError);          // ternary application
  CHECK_THROWS_AS(parse("#t"), ParseError);               // only #f exists
  CHECK_THROWS_AS(parse("(λ (x) x) extra"), ParseError);  // trailing tokens
  CHECK_THROWS_AS(parse("()"), ParseError);

  try {
    parse("(λ (x)\n  (y z w))");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.pos.line == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("free_vars") {
  Program p = parse("(λ (x) (y (λ (y) (x (y z)))))");
  std::set<std::string> fv = free_vars(*p.root);
  CHECK(fv == std::set<std::string>{"y", "z"});
  CHECK(free_vars(*parse("(λ (x) x)").root).empty());
  CHECK(free_vars(*parse("#f").root).empty());
  // set! both reads the target and recurses into the right-hand side
  fv = free_vars(*parse("(set! a b)").root);
  CHECK(fv == std::set<std::string>{"a", "b"});
  fv = free_vars(*parse("(λ (a) (set! a a))").root);
  CHECK(fv.empty());
}

TEST_CASE("check_closed lists every offender") {
  CHECK_NOTHROW(check_closed(*parse("((λ (x) x) (λ (y) y))").root));
  try {
    check_closed(*parse("(x (λ (a) (y a)))").root);
    FAIL("expected FreeVarError");
  } catch (const FreeVarError& e) {
    REQUIRE(e.vars.size() == 2);
    CHECK(e.vars[0].first == "x");
    CHECK(e.vars[1].first == "y");
    CHECK(std::string(e.what()).find('x') != std::string::npos);
  }
}

TEST_CASE("free_of uses the labeled table") {
  Program p = parse("(λ (x) (x y))");
  const auto& fv_body = p.free_of(2);  // (x y)
  REQUIRE(fv_body.size() == 2);
  CHECK(fv_body[0] == "x");
  CHECK(fv_body[1] == "y");  // sorted
  const auto& fv_root = p.free_of(1);
  REQUIRE(fv_root.size() == 1);
  CHECK(fv_root[0] == "y");
}

TEST_CASE("alpha_equal") {
  auto eq = [](const char* a, const char* b) {
    return alpha_equal(*parse(a).root, *parse(b).root);
  };
  CHECK(eq("(λ (x) x)", "(λ (y) y)"));
  CHECK(eq("(λ (x) (λ (y) (x y)))", "(λ (a) (λ (b) (a b)))"));
  CHECK_FALSE(eq("(λ (x) (λ (y) (x y)))", "(λ (a) (λ (b) (b a)))"));
  CHECK(eq("#f", "#f"));
  CHECK_FALSE(eq("#f", "callcc"));
  CHECK_FALSE(eq("(λ (x) x)", "(λ (x) (x x))"));
  // shadowing must rebind: inner x refers to the inner lambda
  CHECK(eq("(λ (x) (λ (x) x))", "(λ (a) (λ (b) b))"));
  CHECK_FALSE(eq("(λ (x) (λ (x) x))", "(λ (a) (λ (b) a))"));
  CHECK(eq("(set! x #f)", "(set! x #f)"));
  CHECK_FALSE(eq("(set! x #f)", "(set! y #f)"));  // both free, names differ
  CHECK(eq("(λ (x) (set! x #f))", "(λ (y) (set! y #f))"));
}

// random closed terms: build with the constructors, print, reparse
TEST_CASE("random round trip") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pick(0, 9);

  // depth-bounded closed term over the variables currently in scope
  std::function<ExprPtr(std::vector<std::string>&, int)> gen =
      [&](std::vector<std::string>& scope, int depth) -> ExprPtr {
    int c = pick(rng);
    if (depth <= 0 || c < 2) {
      if (!scope.empty() && c % 2 == 0) {
        std::uniform_int_distribution<size_t> vi(0, scope.size() - 1);
        return mk_var(scope[vi(rng)]);
      }
      return c < 5 ? mk_false() : mk_callcc();
    }
    if (c < 6) {
      std::string v = "v" + std::to_string(scope.size());
      scope.push_back(v);
      ExprPtr body = gen(scope, depth - 1);
      scope.pop_back();
      return mk_lam(v, body);
    }
    if (c < 8) return mk_app(gen(scope, depth - 1), gen(scope, depth - 1));
    if (c == 8 && !scope.empty()) {
      std::uniform_int_distribution<size_t> vi(0, scope.size() - 1);
      return mk_set(scope[vi(rng)], gen(scope, depth - 1));
    }
    return mk_if(gen(scope, depth - 1), gen(scope, depth - 1), gen(scope, depth - 1));
  };

  for (int i = 0; i < 200; i++) {
    std::vector<std::string> scope;
    ExprPtr t = gen(scope, 5);
    std::string s = unparse(*t);
    Program p = parse(s);
    CHECK(unparse(*p.root) == s);
    CHECK(alpha_equal(*p.root, *t));
    CHECK_NOTHROW(check_closed(*p.root));
    // the free-variable table agrees with the standalone computation
    for (int l = 1; l <= p.node_count(); l++) {
      std::set<std::string> direct = free_vars(*p.node(l));
      const auto& table = p.free_of(l);
      CHECK(std::set<std::string>(table.begin(), table.end()) == direct);
    }
  }
}
