#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aam/abstract.hpp"
#include "aam/run.hpp"

using namespace aam;

namespace {

Storable clo_false() { return Storable::clo(ValueTerm::mk_false(), Env{}); }

Storable clo_lam(const Program& p, Label l) {
  return Storable::clo(ValueTerm::mk_lam(p.node(l)), Env{});
}

// exhaustive reachable-state closure, small graphs only
std::set<AbstractState, AStateLess> reach(const Program& p, const Policy& pol,
                                          size_t cap = 4000) {
  std::set<AbstractState, AStateLess> seen;
  std::vector<AbstractState> work{inject_abstract(p, pol)};
  seen.insert(work[0]);
  while (!work.empty()) {
    AbstractState s = work.back();
    work.pop_back();
    for (const AbstractState& n : abs_step(s, pol, p).succs) {
      if (seen.insert(n).second) {
        REQUIRE(seen.size() <= cap);
        work.push_back(n);
      }
    }
  }
  return seen;
}

}  // namespace

TEST_CASE("storable sets are ordered and deduplicated") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  StorableSet s;
  CHECK(s.empty());
  s = s.with(clo_lam(p, 4));
  s = s.with(clo_lam(p, 2));
  s = s.with(clo_lam(p, 4));
  CHECK(s.size() == 2);
  CHECK(cmp(s.vec()[0], s.vec()[1]) < 0);
  CHECK(s.member(clo_lam(p, 2)));
  CHECK_FALSE(s.member(clo_false()));
  // inserting a member returns the identical set, not a copy
  StorableSet t = s.with(clo_lam(p, 2));
  CHECK(t.items == s.items);
  CHECK(StorableSet{}.subset_of(s));
  CHECK(s.subset_of(s));
  CHECK_FALSE(s.subset_of(StorableSet{}.with(clo_lam(p, 2))));
}

TEST_CASE("store_join accumulates and never drops") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  Addr a = Addr::bind("x", {});
  AbstractStore s0;
  AbstractStore s1 = store_join(s0, a, clo_lam(p, 2));
  AbstractStore s2 = store_join(s1, a, clo_lam(p, 4));
  AbstractStore s2b = store_join(s2, a, clo_lam(p, 2));  // already present
  CHECK(s1.find(a)->size() == 1);
  CHECK(s2.find(a)->size() == 2);
  CHECK(store_leq(s0, s1));
  CHECK(store_leq(s1, s2));
  CHECK_FALSE(store_leq(s2, s1));
  CHECK(cmp_astore(s2, s2b) == 0);
  // joins at one address never disturb another
  Addr b = Addr::bind("y", {});
  AbstractStore s3 = store_join(s2, b, clo_false());
  CHECK(cmp(*s3.find(a), *s2.find(a)) == 0);
}

TEST_CASE("store_leq is a partial order on random stores") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> coin(0, 3);
  std::vector<Storable> pool{clo_lam(p, 2), clo_lam(p, 4), clo_false()};
  std::vector<Addr> addrs{Addr::bind("x", {}), Addr::bind("y", {}), Addr::at(1, {})};

  for (int round = 0; round < 100; round++) {
    AbstractStore lo, hi;
    for (const Addr& a : addrs) {
      for (const Storable& v : pool) {
        int c = coin(rng);
        if (c == 0) continue;
        hi = store_join(hi, a, v);
        if (c == 1) lo = store_join(lo, a, v);
      }
    }
    CHECK(store_leq(lo, lo));
    CHECK(store_leq(lo, hi));
    if (store_leq(hi, lo)) CHECK(cmp_astore(lo, hi) == 0);  // antisymmetry
    // joining the two pointwise gives an upper bound of both
    AbstractStore join = hi;
    lo.for_each([&](const Addr& a, const StorableSet& vs) {
      for (const Storable& v : vs.vec()) join = store_join(join, a, v);
    });
    CHECK(store_leq(lo, join));
    CHECK(store_leq(hi, join));
  }
}

TEST_CASE("0cfa policy erases time and context") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  Policy pol = policy_zero_cfa(p);
  CHECK(pol.name == "0cfa");
  CHECK(pol.k == 0);
  AbstractState s0 = inject_abstract(p, pol);
  CHECK(s0.time.empty());
  Frame f;
  f.kind = Frame::Kind::Fn;
  f.site = 1;
  CHECK(pol.tick(s0, &f, true).empty());
  Addr bx = pol.alloc(s0, AllocRole::binding("x"));
  CHECK((bx == Addr::bind("x", {})));
  Addr k3 = pol.alloc(s0, AllocRole::kont(3));
  CHECK((k3 == Addr::at(3, {})));
}

TEST_CASE("kcfa policy truncates call strings at k") {
  Program p = parse("((λ (f) (f (f (λ (x) x)))) (λ (y) y))");
  Policy pol = policy_k_cfa(p, 2);
  CHECK(pol.name == "kcfa");
  CHECK(pol.k == 2);
  AbstractState s = inject_abstract(p, pol);
  Frame f;
  f.kind = Frame::Kind::Fn;
  f.site = 3;
  Contour t1 = pol.tick(s, &f, true);
  CHECK((t1 == Contour{3}));
  s.time = t1;
  f.site = 4;
  Contour t2 = pol.tick(s, &f, true);
  CHECK((t2 == Contour{4, 3}));
  s.time = t2;
  f.site = 5;
  Contour t3 = pol.tick(s, &f, true);
  CHECK((t3 == Contour{5, 4}));  // truncated to the newest two sites
  // non-entry transitions leave time alone
  CHECK((pol.tick(s, nullptr, false) == t2));
  // binding addresses carry the current contour
  CHECK((pol.alloc(s, AllocRole::binding("x")) == Addr::bind("x", t2)));
}

TEST_CASE("alpha maps journaled addresses by role and birth time") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  Policy zero = policy_zero_cfa(p);
  Allocator al = counter_allocator();
  CeskState s = inject_ceskt(p);
  for (int i = 0; i < 2; i++) s = step_ceskt(s, al, p).next;
  // after two transitions x is about to be bound; step once more
  s = step_ceskt(s, al, p).next;
  const Addr* xa = s.env.find("x");
  REQUIRE(xa != nullptr);
  CHECK(xa->kind == Addr::Kind::Conc);
  CHECK((alpha_addr_of(*xa, s.store, zero) == Addr::bind("x", {})));
  CHECK(alpha_addr_of(s.kont, s.store, zero).kind == Addr::Kind::Site);
  // an address the journal has never seen is a hard error
  CHECK_THROWS_AS(alpha_addr_of(Addr::conc(4242), s.store, zero), std::logic_error);
}

TEST_CASE("alpha_state of the injected state is the abstract injection") {
  for (const char* src : {"((λ (x) x) (λ (y) y))", "(callcc (λ (k) (k #f)))"}) {
    Program p = parse(src);
    Policy pol = policy_k_cfa(p, 1);
    CHECK((alpha_state(inject_ceskt(p), pol) == inject_abstract(p, pol)));
  }
}

TEST_CASE("alpha commutes with concrete stepping into the graph order") {
  // alpha of each concrete state is dominated by some abstract successor
  // of alpha of the previous state; spot-check a short run by hand here
  Program p = parse("((λ (x) x) (λ (y) y))");
  Policy pol = policy_zero_cfa(p);
  Allocator al = counter_allocator();
  CeskState c = inject_ceskt(p);
  for (;;) {
    StepOut out = step_ceskt(c, al, p);
    if (out.tag != StepOut::Tag::Step) break;
    AbstractState before = alpha_state(c, pol);
    AbstractState after = alpha_state(out.next, pol);
    bool dominated = false;
    for (const AbstractState& n : abs_step(before, pol, p).succs)
      dominated = dominated || leq_state(after, n);
    CHECK(dominated);
    c = out.next;
  }
}

TEST_CASE("abstract identity application stays deterministic") {
  Program p = parse("((λ (x) x) (λ (y) y))");
  Policy pol = policy_zero_cfa(p);
  auto states = reach(p, pol);
  CHECK(states.size() == 5);
  int finals = 0;
  for (const AbstractState& s : states) {
    AbsStepOut out = abs_step(s, pol, p);
    CHECK(out.stuck_branches == 0);
    if (out.final_branch) finals++;
    CHECK(out.succs.size() <= 1);
  }
  CHECK(finals == 1);
}

TEST_CASE("omega reaches a finite abstract closure") {
  Program p = parse("((λ (x) (x x)) (λ (x) (x x)))");
  auto z = reach(p, policy_zero_cfa(p));
  CHECK(z.size() == 16);
  auto one = reach(p, policy_k_cfa(p, 1));
  CHECK(one.size() > z.size() - 8);  // both finite, sizes are regression pins
  CHECK(one.size() == 25);
}

TEST_CASE("merged operands make the abstract machine branch") {
  // both identity results flow into b's binding under 0cfa
  Program p = parse(
      "((λ (id) ((λ (a) ((λ (b) b) (id (λ (w) w)))) (id (λ (z) z)))) (λ (x) x))");
  Policy pol = policy_zero_cfa(p);
  bool branched = false;
  for (const AbstractState& s : reach(p, pol))
    branched = branched || abs_step(s, pol, p).succs.size() > 1;
  CHECK(branched);
}

TEST_CASE("abstract stuck branches are counted per choice") {
  Program p = parse("(#f (λ (x) x))");
  Policy pol = policy_zero_cfa(p);
  long stucks = 0;
  for (const AbstractState& s : reach(p, pol)) stucks += abs_step(s, pol, p).stuck_branches;
  CHECK(stucks == 1);
}

TEST_CASE("set! joins instead of overwriting") {
  Program p = parse("((λ (x) (set! x #f)) (λ (y) y))");
  Policy pol = policy_zero_cfa(p);
  Addr bx = Addr::bind("x", {});
  bool saw_join = false;
  for (const AbstractState& s : reach(p, pol)) {
    const StorableSet* vs = s.store.find(bx);
    if (vs && vs->size() == 2) saw_join = true;
  }
  CHECK(saw_join);
}

TEST_CASE("cmp_astate orders states consistently") {
  Program p = parse("((λ (x) (x x)) (λ (x) (x x)))");
  Policy pol = policy_zero_cfa(p);
  auto states = reach(p, pol);
  std::vector<AbstractState> v(states.begin(), states.end());
  REQUIRE(v.size() >= 3);
  for (size_t i = 0; i < v.size(); i++) {
    CHECK(cmp_astate(v[i], v[i]) == 0);
    CHECK(leq_state(v[i], v[i]));
    for (size_t j = i + 1; j < v.size(); j++) {
      CHECK(cmp_astate(v[i], v[j]) == -cmp_astate(v[j], v[i]));
      // flat components differ between distinct reachable states here,
      // so leq in both directions would mean equality
      if (leq_state(v[i], v[j]) && leq_state(v[j], v[i]))
        CHECK(cmp_astate(v[i], v[j]) == 0);
    }
  }
}

TEST_CASE("render_astate is injective on reachable states") {
  Program p = parse("((λ (c) ((λ (d) (c c)) (set! c c))) (callcc (λ (k) k)))");
  Policy pol = policy_k_cfa(p, 1);
  std::set<std::string> rendered;
  auto states = reach(p, pol);
  for (const AbstractState& s : states) rendered.insert(render_astate(s));
  CHECK(rendered.size() == states.size());
}
