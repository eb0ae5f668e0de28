#pragma once

// The CEK machine for the pure core plus if. Environments map variables
// directly to closures and continuations are an in-state chain; this is
// the lockstep anchor the store-refined machine is checked against.

#include <memory>
#include <string>

#include "aam/machine.hpp"
#include "aam/syntax.hpp"

namespace aam {

struct CekClosureNode;
using CekClosure = std::shared_ptr<const CekClosureNode>;
using CekEnv = pmap<std::string, CekClosure>;

struct CekClosureNode {
  ValueTerm v;
  CekEnv env;
};

struct CekKontNode;
using CekKont = std::shared_ptr<const CekKontNode>;  // null means mt

struct CekKontNode {
  enum class Kind { Ar, Fn, If } kind;
  const Expr* e0 = nullptr;  // Ar: operand; If: then
  const Expr* e1 = nullptr;  // If: else
  ValueTerm v;               // Fn
  CekEnv env;
  CekKont next;
};

struct CekState {
  Control control;
  CekEnv env;
  CekKont kont;
};

struct CekStepOut {
  enum class Tag { Step, Final, Stuck } tag = Tag::Step;
  CekState next;
  std::string stuck_why;
};

CekState inject_cek(const Program& p);
CekStepOut step_cek(const CekState& s, const Program& p);
ExprPtr unload_cek(const ValueTerm& v, const CekEnv& env);

bool cek_equal(const CekState& a, const CekState& b);

// Resolve a store-refined state into a CEK state by chasing addresses.
// Only valid for pure-core executions (finite chains, no mutation).
CekState reify_cek(const CeskState& s);

}  // namespace aam
