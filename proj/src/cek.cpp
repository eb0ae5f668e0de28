#include "aam/cek.hpp"

#include <map>

namespace aam {

namespace {

CekClosure mk_cek_clo(ValueTerm v, CekEnv env) {
  auto n = std::make_shared<CekClosureNode>();
  n->v = std::move(v);
  n->env = std::move(env);
  return n;
}

CekEnv restrict_cek(const CekEnv& env, const std::vector<std::string>& names) {
  CekEnv out;
  for (const auto& n : names) {
    if (const CekClosure* c = env.find(n)) out = out.set(n, *c);
  }
  return out;
}

int cmp_cek_clo(const CekClosure& a, const CekClosure& b);

int cmp_cek_env(const CekEnv& a, const CekEnv& b) {
  return CekEnv::compare(a, b, [](const CekClosure& x, const CekClosure& y) {
    return cmp_cek_clo(x, y);
  });
}

int cmp_cek_clo(const CekClosure& a, const CekClosure& b) {
  if (a == b) return 0;
  int c = cmp(a->v, b->v);
  if (c != 0) return c;
  return cmp_cek_env(a->env, b->env);
}

int cmp_cek_kont(const CekKont& a, const CekKont& b) {
  if (a == b) return 0;
  if (!a) return -1;
  if (!b) return 1;
  if (a->kind != b->kind) return (int)a->kind < (int)b->kind ? -1 : 1;
  Label a0 = a->e0 ? a->e0->label : 0, b0 = b->e0 ? b->e0->label : 0;
  if (a0 != b0) return a0 < b0 ? -1 : 1;
  Label a1 = a->e1 ? a->e1->label : 0, b1 = b->e1 ? b->e1->label : 0;
  if (a1 != b1) return a1 < b1 ? -1 : 1;
  int c = cmp(a->v, b->v);
  if (c != 0) return c;
  c = cmp_cek_env(a->env, b->env);
  if (c != 0) return c;
  return cmp_cek_kont(a->next, b->next);
}

}  // namespace

CekState inject_cek(const Program& p) {
  check_closed(*p.root);
  CekState s;
  s.control = control_eval(p.root.get());
  return s;
}

CekStepOut step_cek(const CekState& s, const Program& p) {
  auto stuck = [](std::string why) {
    CekStepOut o;
    o.tag = CekStepOut::Tag::Stuck;
    o.stuck_why = std::move(why);
    return o;
  };
  auto step = [](CekState n) {
    CekStepOut o;
    o.tag = CekStepOut::Tag::Step;
    o.next = std::move(n);
    return o;
  };

  if (!is_value(s.control)) {
    const Expr* e = s.control.expr;
    switch (e->kind) {
      case ExprKind::Var: {
        const CekClosure* c = s.env.find(e->name);
        if (!c) return stuck("unbound variable " + e->name);
        CekState n;
        n.control = control_value((*c)->v);
        n.env = (*c)->env;
        n.kont = s.kont;
        return step(std::move(n));
      }
      case ExprKind::App: {
        auto k = std::make_shared<CekKontNode>();
        k->kind = CekKontNode::Kind::Ar;
        k->e0 = e->b.get();
        k->env = restrict_cek(s.env, p.free_of(e->b->label));
        k->next = s.kont;
        CekState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_cek(s.env, p.free_of(e->a->label));
        n.kont = k;
        return step(std::move(n));
      }
      case ExprKind::If: {
        auto k = std::make_shared<CekKontNode>();
        k->kind = CekKontNode::Kind::If;
        k->e0 = e->b.get();
        k->e1 = e->c.get();
        CekEnv kenv = restrict_cek(s.env, p.free_of(e->b->label));
        for (const auto& nm : p.free_of(e->c->label)) {
          if (const CekClosure* c = s.env.find(nm)) kenv = kenv.set(nm, *c);
        }
        k->env = kenv;
        k->next = s.kont;
        CekState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_cek(s.env, p.free_of(e->a->label));
        n.kont = k;
        return step(std::move(n));
      }
      default:
        return stuck("form not handled by this machine");
    }
  }

  ValueTerm v = value_term_of(s.control);
  if (!s.kont) {
    CekStepOut o;
    o.tag = CekStepOut::Tag::Final;
    o.next = s;
    return o;
  }
  const CekKontNode& k = *s.kont;
  switch (k.kind) {
    case CekKontNode::Kind::Ar: {
      auto f = std::make_shared<CekKontNode>();
      f->kind = CekKontNode::Kind::Fn;
      f->v = v;
      f->env = s.env;
      f->next = k.next;
      CekState n;
      n.control = control_eval(k.e0);
      n.env = k.env;
      n.kont = f;
      return step(std::move(n));
    }
    case CekKontNode::Kind::Fn: {
      if (k.v.kind != ValueTerm::Kind::Lam)
        return stuck(render_value(k.v) + " is not a procedure");
      const Expr* lam = k.v.lam;
      CekState n;
      n.env = restrict_cek(k.env.set(lam->name, mk_cek_clo(v, s.env)),
                           p.free_of(lam->a->label));
      n.control = control_eval(lam->a.get());
      n.kont = k.next;
      return step(std::move(n));
    }
    case CekKontNode::Kind::If: {
      const Expr* branch = (v.kind == ValueTerm::Kind::False) ? k.e1 : k.e0;
      CekState n;
      n.control = control_eval(branch);
      n.env = restrict_cek(k.env, p.free_of(branch->label));
      n.kont = k.next;
      return step(std::move(n));
    }
  }
  return stuck("unreachable");
}

namespace {

ExprPtr subst_cek(const Expr& e, std::map<std::string, ExprPtr>& sub) {
  switch (e.kind) {
    case ExprKind::Var: {
      auto it = sub.find(e.name);
      return it == sub.end() ? mk_var(e.name) : it->second;
    }
    case ExprKind::Lam: {
      auto it = sub.find(e.name);
      ExprPtr shadowed;
      if (it != sub.end()) {
        shadowed = it->second;
        sub.erase(it);
      }
      ExprPtr body = subst_cek(*e.a, sub);
      if (shadowed) sub[e.name] = shadowed;
      return mk_lam(e.name, body);
    }
    case ExprKind::App:
      return mk_app(subst_cek(*e.a, sub), subst_cek(*e.b, sub));
    case ExprKind::If:
      return mk_if(subst_cek(*e.a, sub), subst_cek(*e.b, sub), subst_cek(*e.c, sub));
    case ExprKind::LitFalse:
      return mk_false();
    case ExprKind::LitCallcc:
      return mk_callcc();
    case ExprKind::Set:
      throw UnloadError("set! has no pure-core reading");
  }
  throw UnloadError("unreachable");
}

}  // namespace

ExprPtr unload_cek(const ValueTerm& v, const CekEnv& env) {
  switch (v.kind) {
    case ValueTerm::Kind::False:
      return mk_false();
    case ValueTerm::Kind::Callcc:
      return mk_callcc();
    case ValueTerm::Kind::Kont:
      throw UnloadError("continuation values have no closed-term reading");
    case ValueTerm::Kind::Lam: {
      std::map<std::string, ExprPtr> sub;
      env.for_each([&](const std::string& x, const CekClosure& c) {
        sub[x] = unload_cek(c->v, c->env);
      });
      return subst_cek(*v.lam, sub);
    }
  }
  throw UnloadError("unreachable");
}

bool cek_equal(const CekState& a, const CekState& b) {
  if (cmp(a.control, b.control) != 0) return false;
  if (cmp_cek_env(a.env, b.env) != 0) return false;
  return cmp_cek_kont(a.kont, b.kont) == 0;
}

namespace {

CekEnv reify_env(const Env& env, const Store& store);

CekClosure reify_storable(const Storable& s, const Store& store) {
  if (s.kind != Storable::Kind::Clo)
    throw UnloadError("continuation frame where a value was expected");
  return mk_cek_clo(s.v, reify_env(s.env, store));
}

CekEnv reify_env(const Env& env, const Store& store) {
  CekEnv out;
  env.for_each([&](const std::string& x, const Addr& a) {
    const Storable* sv = store.find(a);
    if (!sv) throw UnloadError("dangling address " + render_addr(a));
    out = out.set(x, reify_storable(*sv, store));
  });
  return out;
}

CekKont reify_kont(const Addr& a, const Store& store) {
  const Storable* sv = store.find(a);
  if (!sv) throw UnloadError("dangling continuation address " + render_addr(a));
  if (sv->kind != Storable::Kind::Kont)
    throw UnloadError("value where a continuation was expected");
  const Frame& f = sv->frame;
  switch (f.kind) {
    case Frame::Kind::Mt:
      return nullptr;
    case Frame::Kind::Ar: {
      auto k = std::make_shared<CekKontNode>();
      k->kind = CekKontNode::Kind::Ar;
      k->e0 = f.e0;
      k->env = reify_env(f.env, store);
      k->next = reify_kont(f.next, store);
      return k;
    }
    case Frame::Kind::Fn: {
      auto k = std::make_shared<CekKontNode>();
      k->kind = CekKontNode::Kind::Fn;
      k->v = f.v;
      k->env = reify_env(f.env, store);
      k->next = reify_kont(f.next, store);
      return k;
    }
    case Frame::Kind::If: {
      auto k = std::make_shared<CekKontNode>();
      k->kind = CekKontNode::Kind::If;
      k->e0 = f.e0;
      k->e1 = f.e1;
      k->env = reify_env(f.env, store);
      k->next = reify_kont(f.next, store);
      return k;
    }
    case Frame::Kind::Set:
      throw UnloadError("set! frame in a pure-core execution");
  }
  throw UnloadError("unreachable");
}

}  // namespace

CekState reify_cek(const CeskState& s) {
  CekState out;
  out.control = s.control;
  out.env = reify_env(s.env, s.store);
  out.kont = reify_kont(s.kont, s.store);
  return out;
}

}  // namespace aam
