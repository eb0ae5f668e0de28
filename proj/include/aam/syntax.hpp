#pragma once

// Labeled AST for the extended call-by-value lambda calculus:
//
//   e ::= x | (e e) | (lambda (x) e) | (if e e e) | (set! x e) | #f | callcc
//
// Single-parameter lambdas only. `lambda` and the unicode λ are
// interchangeable on input; the canonical printer emits λ. Labels are
// pre-order positions starting at 1 and double as allocation-site ids.

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aam {

using Label = int;

enum class ExprKind { Var, App, Lam, If, Set, LitFalse, LitCallcc };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  Label label = 0;
  std::string name;  // Var name, Lam param, Set target
  ExprPtr a, b, c;   // App: fn/arg; Lam: body in a; If: test/then/else; Set: rhs in a
};

struct SourcePos {
  int line = 1;
  int col = 1;
};

struct ParseError : std::runtime_error {
  SourcePos pos;
  ParseError(const std::string& msg, SourcePos p)
      : std::runtime_error(msg + " (line " + std::to_string(p.line) + ", col " +
                           std::to_string(p.col) + ")"),
        pos(p) {}
};

struct FreeVarError : std::runtime_error {
  // each offender as (name, label)
  std::vector<std::pair<std::string, Label>> vars;
  explicit FreeVarError(std::vector<std::pair<std::string, Label>> vs);
};

// A parsed program: the labeled tree plus derived tables the machines use.
struct Program {
  ExprPtr root;
  std::vector<const Expr*> by_label;                    // index 0 unused
  std::unordered_map<Label, std::vector<std::string>> fv;  // sorted names per node

  const Expr* node(Label l) const {
    return (l >= 1 && l < (int)by_label.size()) ? by_label[l] : nullptr;
  }
  const std::vector<std::string>& free_of(Label l) const;
  int node_count() const { return (int)by_label.size() - 1; }
};

Program parse(const std::string& text);

// Standalone trees (no labels required) are accepted by the helpers below.
std::set<std::string> free_vars(const Expr& e);
void check_closed(const Expr& e);  // throws FreeVarError listing each offender

// Canonical unparser; parse(unparse(p)) reproduces the labeled tree.
std::string unparse(const Expr& e);

// Structural equality modulo labels and bound names.
bool alpha_equal(const Expr& x, const Expr& y);

// Convenience constructors for tests and for substitution results.
ExprPtr mk_var(const std::string& n);
ExprPtr mk_lam(const std::string& p, ExprPtr body);
ExprPtr mk_app(ExprPtr f, ExprPtr a);
ExprPtr mk_if(ExprPtr t, ExprPtr c, ExprPtr a);
ExprPtr mk_set(const std::string& t, ExprPtr rhs);
ExprPtr mk_false();
ExprPtr mk_callcc();

}  // namespace aam
