#include "aam/reference.hpp"

#include <map>

namespace aam {

namespace {

bool is_value_term(const Expr& e) {
  return e.kind == ExprKind::Lam || e.kind == ExprKind::LitFalse ||
         e.kind == ExprKind::LitCallcc;
}

void reject_impure(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Set:
      throw UnsupportedError("set! has no substitution semantics here");
    case ExprKind::LitCallcc:
      throw UnsupportedError("callcc has no substitution semantics here");
    case ExprKind::App:
      reject_impure(*e.a);
      reject_impure(*e.b);
      return;
    case ExprKind::Lam:
      reject_impure(*e.a);
      return;
    case ExprKind::If:
      reject_impure(*e.a);
      reject_impure(*e.b);
      reject_impure(*e.c);
      return;
    default:
      return;
  }
}

// capture-safe only because every substituted value is closed
ExprPtr subst(const Expr& e, const std::string& x, const ExprPtr& v) {
  switch (e.kind) {
    case ExprKind::Var:
      return e.name == x ? v : mk_var(e.name);
    case ExprKind::Lam:
      if (e.name == x) {
        // rebuild without labels; shadowed occurrences stay put
        ExprPtr body = subst(*e.a, "\0none", v);
        return mk_lam(e.name, body);
      }
      return mk_lam(e.name, subst(*e.a, x, v));
    case ExprKind::App:
      return mk_app(subst(*e.a, x, v), subst(*e.b, x, v));
    case ExprKind::If:
      return mk_if(subst(*e.a, x, v), subst(*e.b, x, v), subst(*e.c, x, v));
    case ExprKind::Set:
      return mk_set(e.name, subst(*e.a, x, v));
    case ExprKind::LitFalse:
      return mk_false();
    case ExprKind::LitCallcc:
      return mk_callcc();
  }
  return nullptr;
}

// Decompose-and-contract in one walk. Returns the new whole term, or
// nullopt when e is a value or no rule applies (stuck).
std::optional<ExprPtr> step_rec(const ExprPtr& e, std::string* why) {
  switch (e->kind) {
    case ExprKind::Var:
      if (why) *why = "free variable " + e->name;
      return std::nullopt;
    case ExprKind::Lam:
    case ExprKind::LitFalse:
    case ExprKind::LitCallcc:
      return std::nullopt;  // a value; caller decides
    case ExprKind::Set:
      if (why) *why = "set! outside the pure core";
      return std::nullopt;
    case ExprKind::App: {
      if (!is_value_term(*e->a)) {
        auto inner = step_rec(e->a, why);
        if (!inner) return std::nullopt;
        return mk_app(*inner, e->b);
      }
      if (!is_value_term(*e->b)) {
        auto inner = step_rec(e->b, why);
        if (!inner) return std::nullopt;
        return mk_app(e->a, *inner);
      }
      if (e->a->kind != ExprKind::Lam) {
        if (why) *why = unparse(*e->a) + " is not a procedure";
        return std::nullopt;
      }
      if (!free_vars(*e->b).empty())
        throw std::logic_error("substituting an open value");
      return subst(*e->a->a, e->a->name, e->b);
    }
    case ExprKind::If: {
      if (!is_value_term(*e->a)) {
        auto inner = step_rec(e->a, why);
        if (!inner) return std::nullopt;
        return mk_if(*inner, e->b, e->c);
      }
      return e->a->kind == ExprKind::LitFalse ? e->c : e->b;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<ExprPtr> step_reference(const ExprPtr& e, std::string* stuck_why) {
  return step_rec(e, stuck_why);
}

RefResult eval_reference(const Program& p, long fuel, bool keep_trace) {
  check_closed(*p.root);
  reject_impure(*p.root);
  RefResult r;
  ExprPtr cur = p.root;
  if (keep_trace) r.trace.push_back(cur);
  for (long i = 0; i < fuel; i++) {
    if (is_value_term(*cur)) {
      r.tag = RefResult::Tag::Value;
      r.value = cur;
      return r;
    }
    std::string why;
    auto nxt = step_rec(cur, &why);
    if (!nxt) {
      r.tag = RefResult::Tag::Stuck;
      r.stuck_why = why;
      return r;
    }
    cur = *nxt;
    r.steps++;
    if (keep_trace) r.trace.push_back(cur);
  }
  if (is_value_term(*cur)) {
    r.tag = RefResult::Tag::Value;
    r.value = cur;
    return r;
  }
  // out of fuel: distinguish a genuinely stuck term from a live one
  std::string why;
  if (!step_rec(cur, &why)) {
    r.tag = RefResult::Tag::Stuck;
    r.stuck_why = why;
    return r;
  }
  r.tag = RefResult::Tag::Timeout;
  return r;
}

}  // namespace aam
