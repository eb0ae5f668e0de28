#pragma once

// Fuel-bounded driver for the three concrete evaluators, with optional
// per-step collection and trace capture.

#include <string>
#include <vector>

#include "aam/cek.hpp"
#include "aam/gc.hpp"
#include "aam/reference.hpp"

namespace aam {

enum class MachineKind { Ref, Cek, Ceskt };

struct RunResult {
  enum class Tag { Value, Timeout, Stuck } tag = Tag::Timeout;
  // Canonical term when read-back succeeds; otherwise a summary tag
  // (continuation results and mutation cycles have no closed term).
  std::string value;
  ExprPtr value_term;
  long steps = 0;
  std::string stuck_why;
  std::vector<std::string> trace;  // one state per line, canonical form
  std::vector<long> live_sizes;    // store size after each step (gc runs)
};

// gc_free is only meaningful for Ceskt; passing it with Ref or Cek is a
// usage error surfaced as std::invalid_argument.
RunResult run_machine(const Program& p, MachineKind kind, long fuel,
                      bool gc_free = false, bool keep_trace = false);

std::string render_cek_state(const CekState& s);

}  // namespace aam
