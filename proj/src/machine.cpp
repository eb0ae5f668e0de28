#include "aam/machine.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace aam {

// --- comparisons ---

int cmp_contour(const Contour& a, const Contour& b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; i++) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

int cmp(const Addr& a, const Addr& b) {
  if (a.kind != b.kind) return (int)a.kind < (int)b.kind ? -1 : 1;
  switch (a.kind) {
    case Addr::Kind::Conc:
      if (a.num != b.num) return a.num < b.num ? -1 : 1;
      return 0;
    case Addr::Kind::Bind: {
      int c = a.var.compare(b.var);
      if (c != 0) return c < 0 ? -1 : 1;
      return cmp_contour(a.ctx, b.ctx);
    }
    case Addr::Kind::Site:
      if (a.site != b.site) return a.site < b.site ? -1 : 1;
      return cmp_contour(a.ctx, b.ctx);
  }
  return 0;
}

size_t AddrHash::operator()(const Addr& a) const {
  uint64_t h = mix64((uint64_t)a.kind);
  switch (a.kind) {
    case Addr::Kind::Conc:
      h = mix64(h ^ (uint64_t)a.num);
      break;
    case Addr::Kind::Bind:
      h = mix64(h ^ std::hash<std::string>{}(a.var));
      break;
    case Addr::Kind::Site:
      h = mix64(h ^ (uint64_t)a.site);
      break;
  }
  for (Label l : a.ctx) h = mix64(h ^ (uint64_t)l);
  return (size_t)h;
}

std::string render_addr(const Addr& a) {
  std::string out;
  switch (a.kind) {
    case Addr::Kind::Conc:
      return "a" + std::to_string(a.num);
    case Addr::Kind::Bind:
      out = a.var;
      break;
    case Addr::Kind::Site:
      out = "#" + std::to_string(a.site);
      break;
  }
  out += "{";
  for (size_t i = 0; i < a.ctx.size(); i++) {
    if (i) out += " ";
    out += std::to_string(a.ctx[i]);
  }
  out += "}";
  return out;
}

int cmp(const ValueTerm& a, const ValueTerm& b) {
  if (a.kind != b.kind) return (int)a.kind < (int)b.kind ? -1 : 1;
  switch (a.kind) {
    case ValueTerm::Kind::Lam: {
      Label la = a.lam->label, lb = b.lam->label;
      if (la != lb) return la < lb ? -1 : 1;
      return 0;
    }
    case ValueTerm::Kind::Kont:
      return cmp(a.kont, b.kont);
    default:
      return 0;
  }
}

int cmp_env(const Env& a, const Env& b) {
  return Env::compare(a, b, [](const Addr& x, const Addr& y) { return cmp(x, y); });
}

static Label label_of(const Expr* e) { return e ? e->label : 0; }

int cmp(const Frame& a, const Frame& b) {
  if (a.kind != b.kind) return (int)a.kind < (int)b.kind ? -1 : 1;
  if (a.site != b.site) return a.site < b.site ? -1 : 1;
  if (label_of(a.e0) != label_of(b.e0)) return label_of(a.e0) < label_of(b.e0) ? -1 : 1;
  if (label_of(a.e1) != label_of(b.e1)) return label_of(a.e1) < label_of(b.e1) ? -1 : 1;
  int c = cmp(a.v, b.v);
  if (c != 0) return c;
  c = cmp_env(a.env, b.env);
  if (c != 0) return c;
  c = cmp(a.target, b.target);
  if (c != 0) return c;
  if (a.kind == Frame::Kind::Mt) return 0;
  return cmp(a.next, b.next);
}

int cmp(const Storable& a, const Storable& b) {
  if (a.kind != b.kind) return (int)a.kind < (int)b.kind ? -1 : 1;
  if (a.kind == Storable::Kind::Clo) {
    int c = cmp(a.v, b.v);
    if (c != 0) return c;
    return cmp_env(a.env, b.env);
  }
  return cmp(a.frame, b.frame);
}

// --- controls ---

static const Expr* false_node() {
  static const ExprPtr n = mk_false();
  return n.get();
}
static const Expr* callcc_node() {
  static const ExprPtr n = mk_callcc();
  return n.get();
}

Control control_eval(const Expr* e) {
  if (e->kind == ExprKind::LitFalse) return Control::eval(false_node());
  if (e->kind == ExprKind::LitCallcc) return Control::eval(callcc_node());
  return Control::eval(e);
}

Control control_value(const ValueTerm& v) {
  switch (v.kind) {
    case ValueTerm::Kind::Lam:
      return Control::eval(v.lam);
    case ValueTerm::Kind::False:
      return Control::eval(false_node());
    case ValueTerm::Kind::Callcc:
      return Control::eval(callcc_node());
    case ValueTerm::Kind::Kont:
      return Control::kont(v.kont);
  }
  return Control::eval(false_node());
}

bool is_value(const Control& c) {
  if (c.is_kont()) return true;
  switch (c.expr->kind) {
    case ExprKind::Lam:
    case ExprKind::LitFalse:
    case ExprKind::LitCallcc:
      return true;
    default:
      return false;
  }
}

ValueTerm value_term_of(const Control& c) {
  if (c.is_kont()) return ValueTerm::mk_kont(c.kaddr);
  switch (c.expr->kind) {
    case ExprKind::Lam:
      return ValueTerm::mk_lam(c.expr);
    case ExprKind::LitFalse:
      return ValueTerm::mk_false();
    case ExprKind::LitCallcc:
      return ValueTerm::mk_callcc();
    default:
      throw std::logic_error("value_term_of on a non-value control");
  }
}

int cmp(const Control& a, const Control& b) {
  if (a.is_kont() != b.is_kont()) return a.is_kont() ? 1 : -1;
  if (a.is_kont()) return cmp(a.kaddr, b.kaddr);
  if (a.expr->kind != b.expr->kind)
    return (int)a.expr->kind < (int)b.expr->kind ? -1 : 1;
  Label la = a.expr->label, lb = b.expr->label;
  if (la != lb) return la < lb ? -1 : 1;
  return 0;
}

// --- env restriction ---

Env restrict_env(const Env& env, const std::vector<std::string>& names) {
  Env out;
  for (const auto& n : names) {
    if (const Addr* a = env.find(n)) out = out.set(n, *a);
  }
  return out;
}

static Env restrict_for(const Program& p, const Env& env, const Expr* e) {
  return restrict_env(env, p.free_of(e->label));
}

static Env restrict_for2(const Program& p, const Env& env, const Expr* x, const Expr* y) {
  Env out = restrict_for(p, env, x);
  for (const auto& n : p.free_of(y->label)) {
    if (const Addr* a = env.find(n)) out = out.set(n, *a);
  }
  return out;
}

// --- allocator ---

Allocator counter_allocator() {
  Allocator a;
  a.alloc = [](const CeskState& s) { return Addr::conc(s.time.counter + 1); };
  a.tick = [](const CeskState& s, Label site, bool lam_entry) {
    CTime t;
    t.counter = s.time.counter + 1;
    t.calls = lam_entry ? s.time.calls.push(site) : s.time.calls;
    return t;
  };
  return a;
}

// --- concrete machine ---

struct MachineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CeskState inject_ceskt(const Program& p) {
  check_closed(*p.root);
  CeskState s;
  s.control = control_eval(p.root.get());
  Addr a0 = Addr::conc(0);
  JournalEntry j;
  j.role = JournalEntry::Role::Kont;
  j.site = p.root->label;
  j.birth = CTime{};
  s.store = Store{}.set(a0, Storable::kont(Frame::mt()), j);
  s.kont = a0;
  s.time = CTime{};
  return s;
}

static JournalEntry journal_kont(Label site, CTime birth) {
  JournalEntry j;
  j.role = JournalEntry::Role::Kont;
  j.site = site;
  j.birth = std::move(birth);
  return j;
}

static JournalEntry journal_bind(std::string var, CTime birth) {
  JournalEntry j;
  j.role = JournalEntry::Role::Binding;
  j.var = std::move(var);
  j.birth = std::move(birth);
  return j;
}

StepOut step_ceskt(const CeskState& s, const Allocator& al, const Program& p) {
  auto stuck = [](std::string why) {
    StepOut o;
    o.tag = StepOut::Tag::Stuck;
    o.stuck_why = std::move(why);
    return o;
  };
  auto step = [](CeskState n) {
    StepOut o;
    o.tag = StepOut::Tag::Step;
    o.next = std::move(n);
    return o;
  };

  if (!is_value(s.control)) {
    const Expr* e = s.control.expr;
    switch (e->kind) {
      case ExprKind::Var: {
        const Addr* ad = s.env.find(e->name);
        if (!ad) return stuck("unbound variable " + e->name);
        const Storable* sv = s.store.find(*ad);
        if (!sv) throw MachineError("dangling address " + render_addr(*ad));
        if (sv->kind != Storable::Kind::Clo)
          throw MachineError("variable address holds a continuation");
        CeskState n;
        n.control = control_value(sv->v);
        n.env = sv->env;
        n.store = s.store;
        n.kont = s.kont;
        n.time = al.tick(s, 0, false);
        return step(std::move(n));
      }
      case ExprKind::App: {
        Addr b = al.alloc(s);
        Frame f;
        f.kind = Frame::Kind::Ar;
        f.e0 = e->b.get();
        f.env = restrict_for(p, s.env, e->b.get());
        f.next = s.kont;
        f.site = e->label;
        CeskState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = s.store.set(b, Storable::kont(f), journal_kont(e->a->label, s.time));
        n.kont = b;
        n.time = al.tick(s, 0, false);
        return step(std::move(n));
      }
      case ExprKind::If: {
        Addr b = al.alloc(s);
        Frame f;
        f.kind = Frame::Kind::If;
        f.e0 = e->b.get();
        f.e1 = e->c.get();
        f.env = restrict_for2(p, s.env, e->b.get(), e->c.get());
        f.next = s.kont;
        f.site = e->label;
        CeskState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = s.store.set(b, Storable::kont(f), journal_kont(e->a->label, s.time));
        n.kont = b;
        n.time = al.tick(s, 0, false);
        return step(std::move(n));
      }
      case ExprKind::Set: {
        const Addr* tgt = s.env.find(e->name);
        if (!tgt) return stuck("unbound variable " + e->name);
        Addr b = al.alloc(s);
        Frame f;
        f.kind = Frame::Kind::Set;
        f.target = *tgt;
        f.next = s.kont;
        f.site = e->label;
        CeskState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = s.store.set(b, Storable::kont(f), journal_kont(e->a->label, s.time));
        n.kont = b;
        n.time = al.tick(s, 0, false);
        return step(std::move(n));
      }
      default:
        throw MachineError("unreachable eval kind");
    }
  }

  // value in control: consult the continuation
  ValueTerm v = value_term_of(s.control);
  const Storable* ks = s.store.find(s.kont);
  if (!ks) throw MachineError("dangling continuation address " + render_addr(s.kont));
  if (ks->kind != Storable::Kind::Kont)
    throw MachineError("continuation address holds a value");
  const Frame& k = ks->frame;

  switch (k.kind) {
    case Frame::Kind::Mt: {
      StepOut o;
      o.tag = StepOut::Tag::Final;
      o.next = s;
      return o;
    }
    case Frame::Kind::Ar: {
      Addr b = al.alloc(s);
      Frame f;
      f.kind = Frame::Kind::Fn;
      f.v = v;
      f.env = s.env;
      f.next = k.next;
      f.site = k.site;
      CeskState n;
      n.control = control_eval(k.e0);
      n.env = k.env;
      n.store = s.store.set(b, Storable::kont(f), journal_kont(k.e0->label, s.time));
      n.kont = b;
      n.time = al.tick(s, 0, false);
      return step(std::move(n));
    }
    case Frame::Kind::Fn: {
      switch (k.v.kind) {
        case ValueTerm::Kind::Lam: {
          const Expr* lam = k.v.lam;
          Addr b = al.alloc(s);
          CeskState n;
          n.store = s.store.set(b, Storable::clo(v, s.env), journal_bind(lam->name, s.time));
          n.env = restrict_for(p, k.env.set(lam->name, b), lam->a.get());
          n.control = control_eval(lam->a.get());
          n.kont = k.next;
          n.time = al.tick(s, k.site, true);
          return step(std::move(n));
        }
        case ValueTerm::Kind::Callcc: {
          if (v.kind == ValueTerm::Kind::Lam) {
            // call with current continuation: the formal is bound to an
            // address holding the captured continuation address
            const Expr* lam = v.lam;
            Addr b = al.alloc(s);
            CeskState n;
            n.store = s.store.set(b, Storable::clo(ValueTerm::mk_kont(k.next), Env{}),
                                  journal_bind(lam->name, s.time));
            n.env = restrict_for(p, s.env.set(lam->name, b), lam->a.get());
            n.control = control_eval(lam->a.get());
            n.kont = k.next;
            n.time = al.tick(s, k.site, true);
            return step(std::move(n));
          }
          if (v.kind == ValueTerm::Kind::Kont) {
            // callcc on a continuation: deliver the current continuation
            // address as a value to it
            CeskState n;
            n.control = control_value(ValueTerm::mk_kont(s.kont));
            n.env = Env{};
            n.store = s.store;
            n.kont = v.kont;
            n.time = al.tick(s, 0, false);
            return step(std::move(n));
          }
          return stuck("callcc applied to a non-procedure");
        }
        case ValueTerm::Kind::Kont: {
          // applying a reified continuation discards the local one
          CeskState n;
          n.control = s.control;
          n.env = s.env;
          n.store = s.store;
          n.kont = k.v.kont;
          n.time = al.tick(s, 0, false);
          return step(std::move(n));
        }
        case ValueTerm::Kind::False:
          return stuck("#f is not a procedure");
      }
      throw MachineError("unreachable fn operator");
    }
    case Frame::Kind::If: {
      const Expr* branch = (v.kind == ValueTerm::Kind::False) ? k.e1 : k.e0;
      CeskState n;
      n.control = control_eval(branch);
      n.env = restrict_for(p, k.env, branch);
      n.store = s.store;
      n.kont = k.next;
      n.time = al.tick(s, 0, false);
      return step(std::move(n));
    }
    case Frame::Kind::Set: {
      const Storable* old = s.store.find(k.target);
      if (!old) throw MachineError("dangling set! target");
      if (old->kind != Storable::Kind::Clo)
        throw MachineError("set! target holds a continuation frame");
      // the expression's value is the previous content; the new value
      // replaces it (strong update)
      CeskState n;
      n.store = s.store.update(k.target, Storable::clo(v, s.env));
      n.control = control_value(old->v);
      n.env = old->env;
      n.kont = k.next;
      n.time = al.tick(s, 0, false);
      return step(std::move(n));
    }
  }
  throw MachineError("unreachable frame kind");
}

// --- unload ---

namespace {

ExprPtr subst_many(const Expr& e, std::map<std::string, ExprPtr>& sub);

ExprPtr unload_rec(const ValueTerm& v, const Env& env, const Store& store,
                   std::vector<Addr>& path) {
  switch (v.kind) {
    case ValueTerm::Kind::False:
      return mk_false();
    case ValueTerm::Kind::Callcc:
      return mk_callcc();
    case ValueTerm::Kind::Kont:
      throw UnloadError("continuation values have no closed-term reading");
    case ValueTerm::Kind::Lam: {
      std::map<std::string, ExprPtr> sub;
      bool failed = false;
      std::string missing;
      env.for_each([&](const std::string& x, const Addr& a) {
        if (failed) return;
        for (const Addr& seen : path) {
          if (seen == a) throw CycleError("address cycle through " + render_addr(a));
        }
        const Storable* sv = store.find(a);
        if (!sv || sv->kind != Storable::Kind::Clo) {
          failed = true;
          missing = render_addr(a);
          return;
        }
        path.push_back(a);
        sub[x] = unload_rec(sv->v, sv->env, store, path);
        path.pop_back();
      });
      if (failed) throw UnloadError("dangling address " + missing);
      return subst_many(*v.lam, sub);
    }
  }
  throw UnloadError("unreachable");
}

ExprPtr subst_many(const Expr& e, std::map<std::string, ExprPtr>& sub) {
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
      ExprPtr body = subst_many(*e.a, sub);
      if (shadowed) sub[e.name] = shadowed;
      return mk_lam(e.name, body);
    }
    case ExprKind::App:
      return mk_app(subst_many(*e.a, sub), subst_many(*e.b, sub));
    case ExprKind::If:
      return mk_if(subst_many(*e.a, sub), subst_many(*e.b, sub), subst_many(*e.c, sub));
    case ExprKind::Set: {
      if (sub.count(e.name))
        throw UnloadError("set! target reached through an environment");
      return mk_set(e.name, subst_many(*e.a, sub));
    }
    case ExprKind::LitFalse:
      return mk_false();
    case ExprKind::LitCallcc:
      return mk_callcc();
  }
  throw UnloadError("unreachable");
}

}  // namespace

ExprPtr unload_ceskt(const ValueTerm& v, const Env& env, const Store& store) {
  std::vector<Addr> path;
  return unload_rec(v, env, store, path);
}

// --- rendering ---

std::string render_value(const ValueTerm& v) {
  switch (v.kind) {
    case ValueTerm::Kind::Lam:
      return "lam@" + std::to_string(v.lam->label);
    case ValueTerm::Kind::False:
      return "#f";
    case ValueTerm::Kind::Callcc:
      return "callcc";
    case ValueTerm::Kind::Kont:
      return "kont:" + render_addr(v.kont);
  }
  return "";
}

static std::string render_control(const Control& c) {
  if (c.is_kont()) return "(val kont:" + render_addr(c.kaddr) + ")";
  if (is_value(c)) return "(val " + render_value(value_term_of(c)) + ")";
  return "(ev " + std::to_string(c.expr->label) + ")";
}

static std::string render_env(const Env& e) {
  std::string out = "(";
  bool first = true;
  e.for_each([&](const std::string& x, const Addr& a) {
    if (!first) out += " ";
    first = false;
    out += "(" + x + " . " + render_addr(a) + ")";
  });
  return out + ")";
}

static std::string render_frame(const Frame& f) {
  switch (f.kind) {
    case Frame::Kind::Mt:
      return "mt";
    case Frame::Kind::Ar:
      return "(ar " + std::to_string(f.e0->label) + " " + render_env(f.env) + " " +
             render_addr(f.next) + ")";
    case Frame::Kind::Fn:
      return "(fn " + render_value(f.v) + " " + render_env(f.env) + " " +
             render_addr(f.next) + ")";
    case Frame::Kind::If:
      return "(if " + std::to_string(f.e0->label) + " " + std::to_string(f.e1->label) +
             " " + render_env(f.env) + " " + render_addr(f.next) + ")";
    case Frame::Kind::Set:
      return "(set " + render_addr(f.target) + " " + render_addr(f.next) + ")";
  }
  return "";
}

std::string render_storable(const Storable& s) {
  if (s.kind == Storable::Kind::Clo)
    return "(clo " + render_value(s.v) + " " + render_env(s.env) + ")";
  return render_frame(s.frame);
}

std::string render_state(const CeskState& s) {
  std::string out = "(" + render_control(s.control) + " " + render_env(s.env) + " (";
  bool first = true;
  s.store.slots.for_each([&](const Addr& a, const Storable& sv) {
    if (!first) out += " ";
    first = false;
    out += "(" + render_addr(a) + " . " + render_storable(sv) + ")";
  });
  out += ") " + render_addr(s.kont) + " " + std::to_string(s.time.counter) + ")";
  return out;
}

}  // namespace aam
