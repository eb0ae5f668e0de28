#pragma once

// Substitution-based standard reduction for the pure core plus if.
// Each step decomposes the program into an evaluation context and a
// redex (operator before operand), contracts, and plugs. Serves as the
// ground-truth evaluator the machines are measured against.

#include <optional>
#include <string>
#include <vector>

#include "aam/syntax.hpp"

namespace aam {

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RefResult {
  enum class Tag { Value, Timeout, Stuck } tag = Tag::Value;
  ExprPtr value;                 // closed value term when tag == Value
  long steps = 0;                // contractions performed
  std::vector<ExprPtr> trace;    // whole-program terms, one per step
  std::string stuck_why;
};

// Throws UnsupportedError if e contains set! or callcc; if is handled.
RefResult eval_reference(const Program& p, long fuel, bool keep_trace = false);

// One standard-reduction step; nullopt when e is a value or stuck.
// stuck_why is set when the term is stuck (non-value, no redex).
std::optional<ExprPtr> step_reference(const ExprPtr& e, std::string* stuck_why);

}  // namespace aam
