#include "aam/abstract.hpp"

#include <algorithm>
#include <stdexcept>

namespace aam {

// --- storable sets ---

static int lower_index(const std::vector<Storable>& xs, const Storable& s) {
  int lo = 0, hi = (int)xs.size();
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (cmp(xs[mid], s) < 0) lo = mid + 1;
    else hi = mid;
  }
  return lo;
}

bool StorableSet::member(const Storable& s) const {
  const auto& xs = vec();
  int i = lower_index(xs, s);
  return i < (int)xs.size() && cmp(xs[i], s) == 0;
}

StorableSet StorableSet::with(const Storable& s) const {
  const auto& xs = vec();
  int i = lower_index(xs, s);
  if (i < (int)xs.size() && cmp(xs[i], s) == 0) return *this;
  auto out = std::make_shared<std::vector<Storable>>();
  out->reserve(xs.size() + 1);
  out->insert(out->end(), xs.begin(), xs.begin() + i);
  out->push_back(s);
  out->insert(out->end(), xs.begin() + i, xs.end());
  return StorableSet{out};
}

bool StorableSet::subset_of(const StorableSet& o) const {
  const auto& a = vec();
  const auto& b = o.vec();
  size_t j = 0;
  for (const auto& x : a) {
    while (j < b.size() && cmp(b[j], x) < 0) j++;
    if (j == b.size() || cmp(b[j], x) != 0) return false;
    j++;
  }
  return true;
}

int cmp(const StorableSet& a, const StorableSet& b) {
  if (a.items == b.items) return 0;
  const auto& xs = a.vec();
  const auto& ys = b.vec();
  size_t n = std::min(xs.size(), ys.size());
  for (size_t i = 0; i < n; i++) {
    int c = cmp(xs[i], ys[i]);
    if (c != 0) return c;
  }
  if (xs.size() != ys.size()) return xs.size() < ys.size() ? -1 : 1;
  return 0;
}

AbstractStore store_join(const AbstractStore& s, const Addr& a, const Storable& v) {
  const StorableSet* cur = s.find(a);
  if (cur) {
    StorableSet next = cur->with(v);
    if (next.items == cur->items) return s;
    return s.set(a, next);
  }
  return s.set(a, StorableSet{}.with(v));
}

int cmp_astore(const AbstractStore& a, const AbstractStore& b) {
  return AbstractStore::compare(
      a, b, [](const StorableSet& x, const StorableSet& y) { return cmp(x, y); });
}

bool store_leq(const AbstractStore& a, const AbstractStore& b) {
  if (a.same_root(b)) return true;
  bool ok = true;
  a.for_each([&](const Addr& k, const StorableSet& xs) {
    if (!ok) return;
    const StorableSet* ys = b.find(k);
    if (!ys || !xs.subset_of(*ys)) ok = false;
  });
  return ok;
}

// --- states ---

int cmp_astate(const AbstractState& a, const AbstractState& b) {
  int c = cmp(a.control, b.control);
  if (c != 0) return c;
  c = cmp(a.kont, b.kont);
  if (c != 0) return c;
  c = cmp_contour(a.time, b.time);
  if (c != 0) return c;
  c = cmp_env(a.env, b.env);
  if (c != 0) return c;
  return cmp_astore(a.store, b.store);
}

// States are ordered pointwise: stores by pointwise set inclusion,
// every other component exactly equal.
bool leq_state(const AbstractState& a, const AbstractState& b) {
  if (cmp(a.control, b.control) != 0) return false;
  if (cmp(a.kont, b.kont) != 0) return false;
  if (cmp_contour(a.time, b.time) != 0) return false;
  if (cmp_env(a.env, b.env) != 0) return false;
  return store_leq(a.store, b.store);
}

// --- policies ---

static Contour take_k(const CallHist& h, int k) { return h.take(k); }

Policy policy_k_cfa(const Program&, int k) {
  if (k < 0) throw std::invalid_argument("contour depth must be nonnegative");
  Policy pol;
  pol.name = "kcfa";
  pol.k = k;
  pol.tick = [k](const AbstractState& s, const Frame* f, bool lam_entry) {
    if (!lam_entry || !f || k == 0) return s.time;
    Contour t;
    t.reserve(k);
    t.push_back(f->site);
    for (Label l : s.time) {
      if ((int)t.size() >= k) break;
      t.push_back(l);
    }
    return t;
  };
  pol.alloc = [](const AbstractState& s, const AllocRole& r) {
    if (r.kind == AllocRole::Kind::Binding) return Addr::bind(r.var, s.time);
    return Addr::at(r.site, s.time);
  };
  pol.alpha_addr = [k](const Addr&, const JournalEntry& j) {
    if (j.role == JournalEntry::Role::Binding)
      return Addr::bind(j.var, take_k(j.birth.calls, k));
    return Addr::at(j.site, take_k(j.birth.calls, k));
  };
  pol.alpha_time = [k](const CTime& t) { return take_k(t.calls, k); };
  return pol;
}

Policy policy_zero_cfa(const Program& p) {
  Policy pol = policy_k_cfa(p, 0);
  pol.name = "0cfa";
  return pol;
}

// --- abstraction map ---

Addr alpha_addr_of(const Addr& a, const Store& st, const Policy& pol) {
  if (a.kind != Addr::Kind::Conc)
    throw std::logic_error("abstraction applied to a non-concrete address");
  const JournalEntry* j = st.journal.find(a);
  if (!j)
    throw std::logic_error("address " + render_addr(a) + " missing from the journal");
  return pol.alpha_addr(a, *j);
}

Env alpha_env_of(const Env& env, const Store& st, const Policy& pol) {
  Env out;
  env.for_each([&](const std::string& x, const Addr& a) {
    out = out.set(x, alpha_addr_of(a, st, pol));
  });
  return out;
}

static ValueTerm alpha_value(const ValueTerm& v, const Store& st, const Policy& pol) {
  if (v.kind == ValueTerm::Kind::Kont)
    return ValueTerm::mk_kont(alpha_addr_of(v.kont, st, pol));
  return v;
}

static Frame alpha_frame(const Frame& f, const Store& st, const Policy& pol) {
  Frame out = f;
  out.env = alpha_env_of(f.env, st, pol);
  if (f.kind == Frame::Kind::Fn) out.v = alpha_value(f.v, st, pol);
  if (f.kind == Frame::Kind::Set) out.target = alpha_addr_of(f.target, st, pol);
  if (f.kind != Frame::Kind::Mt) out.next = alpha_addr_of(f.next, st, pol);
  return out;
}

Storable alpha_storable_of(const Storable& s, const Store& st, const Policy& pol) {
  if (s.kind == Storable::Kind::Clo)
    return Storable::clo(alpha_value(s.v, st, pol), alpha_env_of(s.env, st, pol));
  return Storable::kont(alpha_frame(s.frame, st, pol));
}

AbstractState alpha_state(const CeskState& s, const Policy& pol) {
  AbstractState out;
  if (s.control.is_kont())
    out.control = Control::kont(alpha_addr_of(s.control.kaddr, s.store, pol));
  else
    out.control = s.control;
  out.env = alpha_env_of(s.env, s.store, pol);
  s.store.slots.for_each([&](const Addr& a, const Storable& sv) {
    out.store = store_join(out.store, alpha_addr_of(a, s.store, pol),
                           alpha_storable_of(sv, s.store, pol));
  });
  out.kont = alpha_addr_of(s.kont, s.store, pol);
  out.time = pol.alpha_time(s.time);
  return out;
}

AbstractState inject_abstract(const Program& p, const Policy& pol) {
  return alpha_state(inject_ceskt(p), pol);
}

// --- stepping ---

static Env restrict_for(const Program& p, const Env& env, const Expr* e) {
  return restrict_env(env, p.free_of(e->label));
}

AbsStepOut abs_step(const AbstractState& s, const Policy& pol, const Program& p) {
  AbsStepOut out;
  auto emit = [&](AbstractState n) { out.succs.push_back(std::move(n)); };

  if (!is_value(s.control)) {
    const Expr* e = s.control.expr;
    switch (e->kind) {
      case ExprKind::Var: {
        const Addr* ad = s.env.find(e->name);
        if (!ad) {
          out.stuck_branches++;
          break;
        }
        const StorableSet* vs = s.store.find(*ad);
        if (!vs || vs->empty()) {
          out.stuck_branches++;
          break;
        }
        for (const Storable& sv : vs->vec()) {
          if (sv.kind != Storable::Kind::Clo) {
            out.stuck_branches++;
            continue;
          }
          AbstractState n;
          n.control = control_value(sv.v);
          n.env = sv.env;
          n.store = s.store;
          n.kont = s.kont;
          n.time = s.time;
          emit(std::move(n));
        }
        break;
      }
      case ExprKind::App: {
        Addr b = pol.alloc(s, AllocRole::kont(e->a->label));
        Frame f;
        f.kind = Frame::Kind::Ar;
        f.e0 = e->b.get();
        f.env = restrict_for(p, s.env, e->b.get());
        f.next = s.kont;
        f.site = e->label;
        AbstractState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = store_join(s.store, b, Storable::kont(f));
        n.kont = b;
        n.time = pol.tick(s, nullptr, false);
        emit(std::move(n));
        break;
      }
      case ExprKind::If: {
        Addr b = pol.alloc(s, AllocRole::kont(e->a->label));
        Frame f;
        f.kind = Frame::Kind::If;
        f.e0 = e->b.get();
        f.e1 = e->c.get();
        Env fe = restrict_for(p, s.env, e->b.get());
        for (const auto& n2 : p.free_of(e->c->label)) {
          if (const Addr* a2 = s.env.find(n2)) fe = fe.set(n2, *a2);
        }
        f.env = fe;
        f.next = s.kont;
        f.site = e->label;
        AbstractState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = store_join(s.store, b, Storable::kont(f));
        n.kont = b;
        n.time = pol.tick(s, nullptr, false);
        emit(std::move(n));
        break;
      }
      case ExprKind::Set: {
        const Addr* tgt = s.env.find(e->name);
        if (!tgt) {
          out.stuck_branches++;
          break;
        }
        Addr b = pol.alloc(s, AllocRole::kont(e->a->label));
        Frame f;
        f.kind = Frame::Kind::Set;
        f.target = *tgt;
        f.next = s.kont;
        f.site = e->label;
        AbstractState n;
        n.control = control_eval(e->a.get());
        n.env = restrict_for(p, s.env, e->a.get());
        n.store = store_join(s.store, b, Storable::kont(f));
        n.kont = b;
        n.time = pol.tick(s, nullptr, false);
        emit(std::move(n));
        break;
      }
      default:
        throw std::logic_error("unreachable eval kind");
    }
  } else {
    ValueTerm v = value_term_of(s.control);
    const StorableSet* ks = s.store.find(s.kont);
    if (!ks || ks->empty()) {
      out.stuck_branches++;
    } else {
      for (const Storable& kitem : ks->vec()) {
        if (kitem.kind != Storable::Kind::Kont) {
          out.stuck_branches++;
          continue;
        }
        const Frame& k = kitem.frame;
        switch (k.kind) {
          case Frame::Kind::Mt:
            out.final_branch = true;
            break;
          case Frame::Kind::Ar: {
            Addr b = pol.alloc(s, AllocRole::kont(k.e0->label));
            Frame f;
            f.kind = Frame::Kind::Fn;
            f.v = v;
            f.env = s.env;
            f.next = k.next;
            f.site = k.site;
            AbstractState n;
            n.control = control_eval(k.e0);
            n.env = k.env;
            n.store = store_join(s.store, b, Storable::kont(f));
            n.kont = b;
            n.time = pol.tick(s, &k, false);
            emit(std::move(n));
            break;
          }
          case Frame::Kind::Fn: {
            switch (k.v.kind) {
              case ValueTerm::Kind::Lam: {
                const Expr* lam = k.v.lam;
                Addr b = pol.alloc(s, AllocRole::binding(lam->name));
                AbstractState n;
                n.store = store_join(s.store, b, Storable::clo(v, s.env));
                n.env = restrict_for(p, k.env.set(lam->name, b), lam->a.get());
                n.control = control_eval(lam->a.get());
                n.kont = k.next;
                n.time = pol.tick(s, &k, true);
                emit(std::move(n));
                break;
              }
              case ValueTerm::Kind::Callcc: {
                if (v.kind == ValueTerm::Kind::Lam) {
                  const Expr* lam = v.lam;
                  Addr b = pol.alloc(s, AllocRole::binding(lam->name));
                  AbstractState n;
                  n.store = store_join(s.store, b,
                                       Storable::clo(ValueTerm::mk_kont(k.next), Env{}));
                  n.env = restrict_for(p, s.env.set(lam->name, b), lam->a.get());
                  n.control = control_eval(lam->a.get());
                  n.kont = k.next;
                  n.time = pol.tick(s, &k, true);
                  emit(std::move(n));
                } else if (v.kind == ValueTerm::Kind::Kont) {
                  AbstractState n;
                  n.control = control_value(ValueTerm::mk_kont(s.kont));
                  n.env = Env{};
                  n.store = s.store;
                  n.kont = v.kont;
                  n.time = pol.tick(s, &k, false);
                  emit(std::move(n));
                } else {
                  out.stuck_branches++;
                }
                break;
              }
              case ValueTerm::Kind::Kont: {
                AbstractState n;
                n.control = s.control;
                n.env = s.env;
                n.store = s.store;
                n.kont = k.v.kont;
                n.time = pol.tick(s, &k, false);
                emit(std::move(n));
                break;
              }
              case ValueTerm::Kind::False:
                out.stuck_branches++;
                break;
            }
            break;
          }
          case Frame::Kind::If: {
            const Expr* branch = (v.kind == ValueTerm::Kind::False) ? k.e1 : k.e0;
            AbstractState n;
            n.control = control_eval(branch);
            n.env = restrict_for(p, k.env, branch);
            n.store = s.store;
            n.kont = k.next;
            n.time = pol.tick(s, &k, false);
            emit(std::move(n));
            break;
          }
          case Frame::Kind::Set: {
            const StorableSet* olds = s.store.find(k.target);
            AbstractStore joined = store_join(s.store, k.target, Storable::clo(v, s.env));
            bool any = false;
            if (olds) {
              // the produced value ranges over the set before the write
              for (const Storable& old : olds->vec()) {
                if (old.kind != Storable::Kind::Clo) {
                  out.stuck_branches++;
                  continue;
                }
                any = true;
                AbstractState n;
                n.control = control_value(old.v);
                n.env = old.env;
                n.store = joined;
                n.kont = k.next;
                n.time = pol.tick(s, &k, false);
                emit(std::move(n));
              }
            }
            if (!olds || (!any && olds->empty())) out.stuck_branches++;
            break;
          }
        }
      }
    }
  }

  std::sort(out.succs.begin(), out.succs.end(),
            [](const AbstractState& a, const AbstractState& b) {
              return cmp_astate(a, b) < 0;
            });
  out.succs.erase(std::unique(out.succs.begin(), out.succs.end(),
                              [](const AbstractState& a, const AbstractState& b) {
                                return cmp_astate(a, b) == 0;
                              }),
                  out.succs.end());
  return out;
}

// --- rendering ---

static std::string render_contour(const Contour& c) {
  std::string out = "[";
  for (size_t i = 0; i < c.size(); i++) {
    if (i) out += " ";
    out += std::to_string(c[i]);
  }
  return out + "]";
}

static std::string render_acontrol(const Control& c) {
  if (c.is_kont()) return "(val kont:" + render_addr(c.kaddr) + ")";
  if (is_value(c)) return "(val " + render_value(value_term_of(c)) + ")";
  return "(ev " + std::to_string(c.expr->label) + ")";
}

std::string render_astate(const AbstractState& s) {
  std::string out = "(" + render_acontrol(s.control) + " (";
  bool first = true;
  s.env.for_each([&](const std::string& x, const Addr& a) {
    if (!first) out += " ";
    first = false;
    out += "(" + x + " . " + render_addr(a) + ")";
  });
  out += ") (";
  first = true;
  s.store.for_each([&](const Addr& a, const StorableSet& vs) {
    if (!first) out += " ";
    first = false;
    out += "(" + render_addr(a) + " . {";
    bool f2 = true;
    for (const Storable& sv : vs.vec()) {
      if (!f2) out += " ";
      f2 = false;
      out += render_storable(sv);
    }
    out += "})";
  });
  out += ") " + render_addr(s.kont) + " " + render_contour(s.time) + ")";
  return out;
}

}  // namespace aam
