#include "aam/gc.hpp"

#include <algorithm>

namespace aam {

// --- shallow liveness ---

static void add_restricted(AddrSet& out, const Env& rho, const Expr* e) {
  if (!e) return;
  std::set<std::string> names = free_vars(*e);
  for (const auto& x : names) {
    if (const Addr* a = rho.find(x)) out.insert(*a);
  }
}

static void add_value(AddrSet& out, const ValueTerm& v, const Env& rho) {
  if (v.kind == ValueTerm::Kind::Lam) add_restricted(out, rho, v.lam);
  if (v.kind == ValueTerm::Kind::Kont) out.insert(v.kont);
}

static void add_frame(AddrSet& out, const Frame& k) {
  switch (k.kind) {
    case Frame::Kind::Mt:
      return;
    case Frame::Kind::Ar:
      add_restricted(out, k.env, k.e0);
      break;
    case Frame::Kind::If:
      add_restricted(out, k.env, k.e0);
      add_restricted(out, k.env, k.e1);
      break;
    case Frame::Kind::Fn:
      add_value(out, k.v, k.env);
      break;
    case Frame::Kind::Set:
      out.insert(k.target);
      break;
  }
  out.insert(k.next);
}

AddrSet live_shallow(const Storable& s) {
  AddrSet out;
  if (s.kind == Storable::Kind::Clo) add_value(out, s.v, s.env);
  else add_frame(out, s.frame);
  return out;
}

AddrSet live_shallow(const StorableSet& s) {
  AddrSet out;
  for (const Storable& item : s.vec()) {
    if (item.kind == Storable::Kind::Clo) add_value(out, item.v, item.env);
    else add_frame(out, item.frame);
  }
  return out;
}

// --- grey/black machine ---

bool gc_machine_step(GcState& g) {
  if (g.grey.empty()) return false;
  Addr a = *g.grey.begin();
  g.grey.erase(g.grey.begin());
  g.black.insert(a);
  AddrSet mentioned;
  if (g.store) {
    const Storable* sv = g.store->find(a);
    if (!sv) throw DanglingAddressError("collection reached unmapped address " + render_addr(a));
    mentioned = live_shallow(*sv);
  } else {
    const StorableSet* vs = g.astore->find(a);
    if (!vs) throw DanglingAddressError("collection reached unmapped address " + render_addr(a));
    mentioned = live_shallow(*vs);
  }
  for (const Addr& b : mentioned) {
    if (!g.black.count(b)) g.grey.insert(b);
  }
  return true;
}

AddrSet gc_fixpoint(AddrSet grey0, AddrSet black0, const Store& s) {
  GcState g;
  for (const Addr& a : black0) grey0.erase(a);
  g.grey = std::move(grey0);
  g.black = std::move(black0);
  g.store = &s;
  while (gc_machine_step(g)) {
  }
  return g.black;
}

AddrSet gc_fixpoint(AddrSet grey0, AddrSet black0, const AbstractStore& s) {
  GcState g;
  for (const Addr& a : black0) grey0.erase(a);
  g.grey = std::move(grey0);
  g.black = std::move(black0);
  g.astore = &s;
  while (gc_machine_step(g)) {
  }
  return g.black;
}

// --- live-location equations ---

// Frame clauses recurse through the stored continuation chain; the
// worklist carries continuation addresses whose contents are still to
// be visited. Addresses in environment ranges are leaves here (the
// collection machine, by contrast, expands those too).

namespace {

struct Chase {
  AddrSet out;
  std::vector<Addr> work;
  AddrSet queued;

  void kont_addr(const Addr& a) {
    out.insert(a);
    if (queued.insert(a).second) work.push_back(a);
  }

  void value(const ValueTerm& v, const Env& rho) {
    if (v.kind == ValueTerm::Kind::Lam) add_restricted(out, rho, v.lam);
    if (v.kind == ValueTerm::Kind::Kont) kont_addr(v.kont);
  }

  void frame(const Frame& k) {
    switch (k.kind) {
      case Frame::Kind::Mt:
        return;
      case Frame::Kind::Ar:
        add_restricted(out, k.env, k.e0);
        break;
      case Frame::Kind::If:
        add_restricted(out, k.env, k.e0);
        add_restricted(out, k.env, k.e1);
        break;
      case Frame::Kind::Fn:
        value(k.v, k.env);
        break;
      case Frame::Kind::Set:
        out.insert(k.target);
        break;
    }
    kont_addr(k.next);
  }

  void item(const Storable& s) {
    if (s.kind == Storable::Kind::Clo) value(s.v, s.env);
    else frame(s.frame);
  }

  void run(const Store& st) {
    while (!work.empty()) {
      Addr a = work.back();
      work.pop_back();
      const Storable* sv = st.find(a);
      if (!sv) throw DanglingAddressError("live chain reached unmapped address " + render_addr(a));
      item(*sv);
    }
  }

  void run(const AbstractStore& st) {
    while (!work.empty()) {
      Addr a = work.back();
      work.pop_back();
      const StorableSet* vs = st.find(a);
      if (!vs) throw DanglingAddressError("live chain reached unmapped address " + render_addr(a));
      for (const Storable& s : vs->vec()) item(s);
    }
  }
};

}  // namespace

AddrSet live_locs(const Store&, const Expr&) { return {}; }

AddrSet live_locs(const Store&, const Expr& e, const Env& rho) {
  AddrSet out;
  add_restricted(out, rho, &e);
  return out;
}

AddrSet live_locs(const Store&, const Env& rho) {
  AddrSet out;
  rho.for_each([&](const std::string&, const Addr& a) { out.insert(a); });
  return out;
}

AddrSet live_locs(const Store& s, const Frame& k) {
  Chase ch;
  ch.frame(k);
  ch.run(s);
  return std::move(ch.out);
}

AddrSet live_locs(const Store& s, const Storable& item) {
  Chase ch;
  ch.item(item);
  ch.run(s);
  return std::move(ch.out);
}

AddrSet live_locs(const AbstractStore&, const Expr&) { return {}; }

AddrSet live_locs(const AbstractStore&, const Expr& e, const Env& rho) {
  AddrSet out;
  add_restricted(out, rho, &e);
  return out;
}

AddrSet live_locs(const AbstractStore&, const Env& rho) {
  AddrSet out;
  rho.for_each([&](const std::string&, const Addr& a) { out.insert(a); });
  return out;
}

AddrSet live_locs(const AbstractStore& s, const Frame& k) {
  Chase ch;
  ch.frame(k);
  ch.run(s);
  return std::move(ch.out);
}

AddrSet live_locs(const AbstractStore& s, const Storable& item) {
  Chase ch;
  ch.item(item);
  ch.run(s);
  return std::move(ch.out);
}

AddrSet live_locs(const AbstractStore& s, const StorableSet& items) {
  Chase ch;
  for (const Storable& it : items.vec()) ch.item(it);
  ch.run(s);
  return std::move(ch.out);
}

// --- collection ---

static AddrSet control_seed(const Control& c, const Env& rho) {
  AddrSet out;
  if (c.is_kont()) out.insert(c.kaddr);
  else add_restricted(out, rho, c.expr);
  return out;
}

CeskState collect(const CeskState& s) {
  AddrSet grey = control_seed(s.control, s.env);
  const Storable* k = s.store.find(s.kont);
  if (!k) throw DanglingAddressError("continuation address unmapped at collection");
  for (const Addr& a : live_shallow(*k)) grey.insert(a);
  AddrSet live = gc_fixpoint(std::move(grey), AddrSet{s.kont}, s.store);

  if (live.size() == s.store.size()) return s;
  CeskState out = s;
  Store pruned;
  s.store.slots.for_each([&](const Addr& a, const Storable& sv) {
    if (!live.count(a)) return;
    const JournalEntry* j = s.store.journal.find(a);
    pruned = pruned.set(a, sv, *j);
  });
  out.store = std::move(pruned);
  return out;
}

AbstractState collect(const AbstractState& s) {
  AddrSet grey = control_seed(s.control, s.env);
  const StorableSet* k = s.store.find(s.kont);
  if (!k) throw DanglingAddressError("continuation address unmapped at collection");
  for (const Addr& a : live_shallow(*k)) grey.insert(a);
  AddrSet live = gc_fixpoint(std::move(grey), AddrSet{s.kont}, s.store);

  if (live.size() == s.store.size()) return s;
  AbstractState out = s;
  AbstractStore pruned;
  s.store.for_each([&](const Addr& a, const StorableSet& vs) {
    if (live.count(a)) pruned = pruned.set(a, vs);
  });
  out.store = std::move(pruned);
  return out;
}

// --- garbage-free steppers ---

StepOut gc_step(const CeskState& s, const Allocator& al, const Program& p) {
  StepOut o = step_ceskt(s, al, p);
  if (o.tag == StepOut::Tag::Step) o.next = collect(o.next);
  return o;
}

AbsStepOut gc_step(const AbstractState& s, const Policy& pol, const Program& p) {
  AbsStepOut o = abs_step(s, pol, p);
  for (AbstractState& n : o.succs) n = collect(n);
  // collection can identify successors that differed only in dead entries
  std::sort(o.succs.begin(), o.succs.end(),
            [](const AbstractState& a, const AbstractState& b) {
              return cmp_astate(a, b) < 0;
            });
  o.succs.erase(std::unique(o.succs.begin(), o.succs.end(),
                            [](const AbstractState& a, const AbstractState& b) {
                              return cmp_astate(a, b) == 0;
                            }),
                o.succs.end());
  return o;
}

}  // namespace aam
