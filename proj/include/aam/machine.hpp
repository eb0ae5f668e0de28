#pragma once

// Shared machine vocabulary: addresses, times, values, frames, stores,
// plus the concrete time-stamped CESK* machine for the full language.
// Continuations are store-allocated; the continuation component of a
// state is an address. Every allocation is journaled with its role and
// birth time so a concrete run can be replayed through an abstraction
// map later.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aam/pmap.hpp"
#include "aam/syntax.hpp"

namespace aam {

// --- times ---

// Abstract time: a call-site string, most recent first, length <= k.
using Contour = std::vector<Label>;

// Concrete call history as a shared-tail list; pushes are O(1) and the
// trace of a long run shares tails instead of copying vectors.
struct CallHist {
  struct Node {
    Label head;
    std::shared_ptr<const Node> tail;
  };
  std::shared_ptr<const Node> top;

  CallHist push(Label l) const {
    auto n = std::make_shared<Node>();
    n->head = l;
    n->tail = top;
    return CallHist{n};
  }
  Contour take(int k) const {
    Contour out;
    const Node* n = top.get();
    while (n && (int)out.size() < k) {
      out.push_back(n->head);
      n = n->tail.get();
    }
    return out;
  }
};

struct CTime {
  int64_t counter = 0;
  CallHist calls;
};

// --- addresses ---

struct Addr {
  enum class Kind : uint8_t { Conc, Bind, Site };
  Kind kind = Kind::Conc;
  int64_t num = 0;   // Conc
  std::string var;   // Bind
  Label site = 0;    // Site
  Contour ctx;       // Bind and Site

  static Addr conc(int64_t n) {
    Addr a;
    a.kind = Kind::Conc;
    a.num = n;
    return a;
  }
  static Addr bind(std::string v, Contour c) {
    Addr a;
    a.kind = Kind::Bind;
    a.var = std::move(v);
    a.ctx = std::move(c);
    return a;
  }
  static Addr at(Label l, Contour c) {
    Addr a;
    a.kind = Kind::Site;
    a.site = l;
    a.ctx = std::move(c);
    return a;
  }
};

int cmp_contour(const Contour& a, const Contour& b);
int cmp(const Addr& a, const Addr& b);
inline bool operator==(const Addr& a, const Addr& b) { return cmp(a, b) == 0; }
inline bool operator!=(const Addr& a, const Addr& b) { return cmp(a, b) != 0; }

struct AddrLess {
  bool operator()(const Addr& a, const Addr& b) const { return cmp(a, b) < 0; }
};
struct AddrHash {
  size_t operator()(const Addr& a) const;
};

std::string render_addr(const Addr& a);

// --- values and frames ---

struct ValueTerm {
  enum class Kind : uint8_t { Lam, False, Callcc, Kont };
  Kind kind = Kind::False;
  const Expr* lam = nullptr;  // Lam
  Addr kont;                  // Kont

  static ValueTerm mk_lam(const Expr* e) {
    ValueTerm v;
    v.kind = Kind::Lam;
    v.lam = e;
    return v;
  }
  static ValueTerm mk_false() { return ValueTerm{}; }
  static ValueTerm mk_callcc() {
    ValueTerm v;
    v.kind = Kind::Callcc;
    return v;
  }
  static ValueTerm mk_kont(Addr a) {
    ValueTerm v;
    v.kind = Kind::Kont;
    v.kont = std::move(a);
    return v;
  }
};

int cmp(const ValueTerm& a, const ValueTerm& b);
inline bool operator==(const ValueTerm& a, const ValueTerm& b) { return cmp(a, b) == 0; }

using Env = pmap<std::string, Addr>;
int cmp_env(const Env& a, const Env& b);

struct Frame {
  enum class Kind : uint8_t { Mt, Ar, Fn, If, Set };
  Kind kind = Kind::Mt;
  const Expr* e0 = nullptr;  // Ar: operand; If: then
  const Expr* e1 = nullptr;  // If: else
  ValueTerm v;               // Fn: operator value
  Env env;                   // Ar/If: closes pending exprs; Fn: closes v
  Addr target;               // Set: address being written
  Addr next;                 // saved continuation (absent for Mt)
  Label site = 0;            // label of the inducing App/If/Set expression

  static Frame mt() { return Frame{}; }
};

int cmp(const Frame& a, const Frame& b);

struct Storable {
  enum class Kind : uint8_t { Clo, Kont };
  Kind kind = Kind::Clo;
  ValueTerm v;  // Clo
  Env env;      // Clo: closes v
  Frame frame;  // Kont

  static Storable clo(ValueTerm v, Env env) {
    Storable s;
    s.kind = Kind::Clo;
    s.v = std::move(v);
    s.env = std::move(env);
    return s;
  }
  static Storable kont(Frame f) {
    Storable s;
    s.kind = Kind::Kont;
    s.frame = std::move(f);
    return s;
  }
};

int cmp(const Storable& a, const Storable& b);
inline bool operator==(const Storable& a, const Storable& b) { return cmp(a, b) == 0; }

// --- store with allocation journal ---

struct JournalEntry {
  enum class Role : uint8_t { Binding, Kont } role = Role::Binding;
  std::string var;  // Binding
  Label site = 0;   // Kont: label of the expression whose evaluation begins
  CTime birth;
};

struct Store {
  pmap<Addr, Storable, AddrLess, AddrHash> slots;
  pmap<Addr, JournalEntry, AddrLess, AddrHash> journal;

  const Storable* find(const Addr& a) const { return slots.find(a); }
  bool contains(const Addr& a) const { return slots.contains(a); }
  size_t size() const { return slots.size(); }

  Store set(const Addr& a, Storable s, JournalEntry j) const {
    Store out;
    out.slots = slots.set(a, std::move(s));
    out.journal = journal.set(a, std::move(j));
    return out;
  }
  // strong update of an existing slot; the journal entry is kept
  Store update(const Addr& a, Storable s) const {
    Store out;
    out.slots = slots.set(a, std::move(s));
    out.journal = journal;
    return out;
  }
};

// --- machine states ---

// Control is either an expression to evaluate or a reified continuation
// value (which has no syntax). Value-ness of an expression control is
// syntactic: lambdas and the two literals are values.
struct Control {
  const Expr* expr = nullptr;
  Addr kaddr;

  static Control eval(const Expr* e) {
    Control ct;
    ct.expr = e;
    return ct;
  }
  static Control kont(Addr a) {
    Control ct;
    ct.kaddr = std::move(a);
    return ct;
  }
  bool is_kont() const { return expr == nullptr; }
};

bool is_value(const Control& c);
// valid only when is_value; env is the state env closing the term
ValueTerm value_term_of(const Control& c);
int cmp(const Control& a, const Control& b);

// Constructors that canonicalize literal controls (a looked-up #f and a
// syntactic #f are the same machine state).
Control control_eval(const Expr* e);
Control control_value(const ValueTerm& v);

Env restrict_env(const Env& env, const std::vector<std::string>& names);

struct CeskState {
  Control control;
  Env env;
  Store store;
  Addr kont;
  CTime time;
};

// --- concrete allocator ---

// alloc must return an address outside the store domain; tick must be
// strictly increasing. The counter allocator satisfies both: addresses
// and times share one counter, alloc hands out counter+1, tick advances
// it. The call history grows only when a lambda body is entered.
struct Allocator {
  std::function<Addr(const CeskState&)> alloc;
  std::function<CTime(const CeskState&, Label site, bool lam_entry)> tick;
};

Allocator counter_allocator();

// --- stepping ---

struct StepOut {
  enum class Tag { Step, Final, Stuck } tag = Tag::Step;
  CeskState next;
  std::string stuck_why;
};

CeskState inject_ceskt(const Program& p);
StepOut step_ceskt(const CeskState& s, const Allocator& alloc, const Program& p);

struct CycleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pure-core result read-back: follows environment indirections through
// the store, substituting closed terms. Throws CycleError when an
// address repeats on the current path (possible after mutation).
ExprPtr unload_ceskt(const ValueTerm& v, const Env& env, const Store& store);

std::string render_value(const ValueTerm& v);
std::string render_storable(const Storable& s);
std::string render_state(const CeskState& s);

}  // namespace aam
