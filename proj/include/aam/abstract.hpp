#pragma once

// The finite nondeterministic abstraction of the time-stamped machine.
// Stores map addresses to sets of storables and every write is a join;
// a precision policy owns the address and time carriers in both
// directions (allocation during abstract stepping, and the abstraction
// of journaled concrete addresses and times).

#include <functional>
#include <string>
#include <vector>

#include "aam/machine.hpp"

namespace aam {

// sorted, deduplicated, immutable
struct StorableSet {
  std::shared_ptr<const std::vector<Storable>> items;

  size_t size() const { return items ? items->size() : 0; }
  bool empty() const { return size() == 0; }
  const std::vector<Storable>& vec() const {
    static const std::vector<Storable> none;
    return items ? *items : none;
  }
  bool member(const Storable& s) const;
  StorableSet with(const Storable& s) const;
  bool subset_of(const StorableSet& o) const;
};

int cmp(const StorableSet& a, const StorableSet& b);

using AbstractStore = pmap<Addr, StorableSet, AddrLess, AddrHash>;

AbstractStore store_join(const AbstractStore& s, const Addr& a, const Storable& v);
int cmp_astore(const AbstractStore& a, const AbstractStore& b);
bool store_leq(const AbstractStore& a, const AbstractStore& b);

struct AbstractState {
  Control control;
  Env env;
  AbstractStore store;
  Addr kont;
  Contour time;
};

int cmp_astate(const AbstractState& a, const AbstractState& b);
inline bool operator==(const AbstractState& a, const AbstractState& b) {
  return cmp_astate(a, b) == 0;
}
struct AStateLess {
  bool operator()(const AbstractState& a, const AbstractState& b) const {
    return cmp_astate(a, b) < 0;
  }
};

bool leq_state(const AbstractState& a, const AbstractState& b);

// --- policies ---

struct AllocRole {
  enum class Kind { Binding, Kont } kind = Kind::Binding;
  std::string var;  // Binding
  Label site = 0;   // Kont: label of the expression whose evaluation begins

  static AllocRole binding(std::string v) {
    AllocRole r;
    r.kind = Kind::Binding;
    r.var = std::move(v);
    return r;
  }
  static AllocRole kont(Label l) {
    AllocRole r;
    r.kind = Kind::Kont;
    r.site = l;
    return r;
  }
};

struct Policy {
  std::string name;
  int k = 0;
  // frame is null for rules that do not consult the continuation
  std::function<Contour(const AbstractState&, const Frame*, bool lam_entry)> tick;
  std::function<Addr(const AbstractState&, const AllocRole&)> alloc;
  std::function<Addr(const Addr&, const JournalEntry&)> alpha_addr;
  std::function<Contour(const CTime&)> alpha_time;
};

Policy policy_zero_cfa(const Program& p);
Policy policy_k_cfa(const Program& p, int k);

// --- stepping and abstraction ---

struct AbsStepOut {
  std::vector<AbstractState> succs;  // canonical order, deduplicated
  int stuck_branches = 0;            // choices with no applicable rule
  bool final_branch = false;         // a value met the empty continuation
};

AbsStepOut abs_step(const AbstractState& s, const Policy& pol, const Program& p);

AbstractState alpha_state(const CeskState& s, const Policy& pol);
AbstractState inject_abstract(const Program& p, const Policy& pol);

// Pieces of the abstraction map. The store provides the journal that
// classifies each concrete address; unjournaled addresses are an error.
Addr alpha_addr_of(const Addr& a, const Store& st, const Policy& pol);
Env alpha_env_of(const Env& env, const Store& st, const Policy& pol);
Storable alpha_storable_of(const Storable& s, const Store& st, const Policy& pol);

std::string render_astate(const AbstractState& s);

}  // namespace aam
