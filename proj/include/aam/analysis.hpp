#pragma once

// Reachable-state fixpoint over the abstract machine, flow-fact
// read-back, graph export, and the harness that checks an abstract run
// against a journaled concrete run.

#include <string>
#include <utility>
#include <vector>

#include "aam/gc.hpp"

namespace aam {

struct CapExceededError : std::runtime_error {
  long cap;
  explicit CapExceededError(long c)
      : std::runtime_error("state graph exceeded the node cap (" + std::to_string(c) +
                           ")"),
        cap(c) {}
};

struct UnknownLabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GraphStats {
  long steps = 0;             // successor instances processed
  size_t max_store = 0;       // largest store domain over all nodes
  double wall_ms = 0.0;       // measured, never serialized
  long stuck_branches = 0;    // choices with no applicable rule
  std::vector<long> live_sizes;  // per-node store sizes (collected runs)
  std::string ceiling;        // decimal state-space bound, or ">=1e18"
};

struct StateGraph {
  Program program;  // keeps the expression nodes the states point into
  std::string policy_name;
  int policy_k = 0;
  bool gc_free = false;
  std::vector<AbstractState> nodes;  // discovery order; index is the id
  int root = 0;
  std::vector<std::pair<int, int>> edges;  // sorted, deduplicated
  std::vector<int> stuck_nodes;            // ids with a stuck branch
  std::vector<int> final_nodes;            // ids where a value meets mt
  GraphStats stats;
};

struct AnalyzeOptions {
  bool gc_free = false;
  long node_cap = 1000000;
  int jobs = 1;
};

// Worklist closure from the abstract initial state. Deterministic for
// fixed inputs, including across jobs counts; throws CapExceededError
// rather than truncating.
StateGraph analyze(const Program& p, const Policy& pol, const AnalyzeOptions& opt = {});

struct FlowFact {
  Label site = 0;
  std::vector<std::string> values;  // sorted: lam@N | #f | callcc | kont
};

// site must label a variable reference (values read from the binding)
// or an application (operator values observed at that call).
FlowFact flows_at(const StateGraph& g, Label site);

// Variable sites only: the same read-back keyed by the binding address
// consulted, one entry per distinct address.
std::vector<std::pair<std::string, std::vector<std::string>>> flows_at_by_context(
    const StateGraph& g, Label site);

struct SoundnessReport {
  bool ok = true;
  long concrete_steps = 0;
  size_t graph_nodes = 0;
  long fail_step = -1;   // index of the offending concrete state
  std::string failure;   // first counterexample, empty when ok
};

// Runs the journaled concrete machine (collected per step when
// opt.gc_free) for at most fuel transitions and checks, per step, that
// stepping the state's abstraction yields a successor dominating the
// next state's abstraction, and, globally, that every concrete state's
// abstraction is covered by a graph node.
SoundnessReport soundness_check(const Program& p, const Policy& pol, long fuel,
                                const AnalyzeOptions& opt = {});

enum class GraphFormat { Dot, Json };
std::string export_graph(const StateGraph& g, GraphFormat f);

// Crude but sound bound on the number of distinct abstract states,
// from the policy's address and time counts; saturates at 10^18.
std::string policy_ceiling(const Program& p, const Policy& pol);

}  // namespace aam
