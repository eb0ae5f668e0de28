#pragma once

// Live-location equations, the grey/black collection machine, store
// collection for both machines, and the step-then-collect steppers.
// Collection computes the transitive closure of every address the
// control and continuation can reach; a collected store is closed
// (retained entries mention only retained addresses).

#include <set>
#include <stdexcept>

#include "aam/abstract.hpp"

namespace aam {

using AddrSet = std::set<Addr, AddrLess>;

struct DanglingAddressError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grey/black machine state. Exactly one of the two store pointers is
// bound; grey and black stay disjoint.
struct GcState {
  AddrSet grey;
  AddrSet black;
  const Store* store = nullptr;
  const AbstractStore* astore = nullptr;
};

// One transition: move an address from grey to black and shade what its
// content mentions. Returns false once grey is empty. Which grey address
// is picked does not affect the final black set; this picks the smallest.
bool gc_machine_step(GcState& g);

AddrSet gc_fixpoint(AddrSet grey0, AddrSet black0, const Store& s);
AddrSet gc_fixpoint(AddrSet grey0, AddrSet black0, const AbstractStore& s);

// Addresses directly mentioned by one stored item: frame environments
// restricted to the pending term's free variables, the saved
// continuation address, a set! target, and the address inside a
// reified continuation value.
AddrSet live_shallow(const Storable& s);
AddrSet live_shallow(const StorableSet& s);

// The live-location equations. Expression and environment forms are
// shallow; frame and storable forms chase saved continuation addresses
// (and reified continuation values) through the store to a least
// fixpoint, which terminates on cyclic abstract stores.
AddrSet live_locs(const Store& s, const Expr& e);
AddrSet live_locs(const Store& s, const Expr& e, const Env& rho);
AddrSet live_locs(const Store& s, const Env& rho);
AddrSet live_locs(const Store& s, const Frame& k);
AddrSet live_locs(const Store& s, const Storable& item);
AddrSet live_locs(const AbstractStore& s, const Expr& e);
AddrSet live_locs(const AbstractStore& s, const Expr& e, const Env& rho);
AddrSet live_locs(const AbstractStore& s, const Env& rho);
AddrSet live_locs(const AbstractStore& s, const Frame& k);
AddrSet live_locs(const AbstractStore& s, const Storable& item);
AddrSet live_locs(const AbstractStore& s, const StorableSet& items);

// Restrict the store (and, concretely, the journal) to what the state
// can reach. The continuation address seeds the black set, so it always
// survives.
CeskState collect(const CeskState& s);
AbstractState collect(const AbstractState& s);

// Step followed by collection of every produced state: the
// deterministic garbage-free machines.
StepOut gc_step(const CeskState& s, const Allocator& al, const Program& p);
AbsStepOut gc_step(const AbstractState& s, const Policy& pol, const Program& p);

}  // namespace aam
