// C shim over the library. Exceptions stop here: every entry point maps
// them onto aam_status codes and a thread-local message.

#include "aam.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "aam/analysis.hpp"
#include "aam/run.hpp"
#include "json.hpp"

struct aam_program {
  aam::Program p;
};

struct aam_run {
  aam::RunResult r;
};

struct aam_graph {
  aam::StateGraph g;
};

namespace {

thread_local std::string g_error = "ok";

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

aam_status fail(aam_status st, const std::string& msg) {
  g_error = msg;
  return st;
}

// Runs f, translating the library's exception vocabulary. f is only
// responsible for the happy path.
template <typename F>
aam_status guarded(F&& f) {
  try {
    return f();
  } catch (const aam::ParseError& e) {
    return fail(AAM_ERR_PARSE, e.what());
  } catch (const aam::FreeVarError& e) {
    return fail(AAM_ERR_FREE_VAR, e.what());
  } catch (const aam::CapExceededError& e) {
    return fail(AAM_ERR_CAP, e.what());
  } catch (const aam::UnknownLabelError& e) {
    return fail(AAM_ERR_USAGE, e.what());
  } catch (const aam::UnsupportedError& e) {
    return fail(AAM_ERR_USAGE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AAM_ERR_USAGE, e.what());
  } catch (const std::exception& e) {
    return fail(AAM_ERR_INTERNAL, e.what());
  }
}

aam_status parse_text(const std::string& text, aam_program** out) {
  return guarded([&]() {
    auto owned = std::make_unique<aam_program>();
    owned->p = aam::parse(text);
    aam::check_closed(*owned->p.root);
    *out = owned.release();
    return AAM_OK;
  });
}

bool parse_mode(const char* mode, aam::MachineKind& out) {
  std::string m = mode ? mode : "";
  if (m == "ref") {
    out = aam::MachineKind::Ref;
  } else if (m == "cek") {
    out = aam::MachineKind::Cek;
  } else if (m == "cesk") {
    out = aam::MachineKind::Ceskt;
  } else {
    return false;
  }
  return true;
}

aam::Policy make_policy(const aam::Program& p, const char* policy, int k) {
  std::string name = policy ? policy : "";
  if (name == "0cfa") return aam::policy_zero_cfa(p);
  if (name == "kcfa") {
    if (k < 0) throw std::invalid_argument("k must be non-negative");
    return aam::policy_k_cfa(p, k);
  }
  throw std::invalid_argument("unknown policy: " + name +
                              " (expected 0cfa or kcfa)");
}

aam::AnalyzeOptions make_options(int gc_free, long node_cap, int jobs) {
  aam::AnalyzeOptions opt;
  opt.gc_free = gc_free != 0;
  if (node_cap > 0) opt.node_cap = node_cap;
  opt.jobs = jobs > 0 ? jobs : 1;
  return opt;
}

}  // namespace

extern "C" {

const char* aam_version(void) { return "0.1.0"; }

const char* aam_last_error(void) { return g_error.c_str(); }

void aam_string_free(char* s) { std::free(s); }

aam_status aam_parse(const char* text, aam_program** out) {
  if (!text || !out) return fail(AAM_ERR_USAGE, "aam_parse: null argument");
  return parse_text(text, out);
}

aam_status aam_parse_file(const char* path, aam_program** out) {
  if (!path || !out) return fail(AAM_ERR_USAGE, "aam_parse_file: null argument");
  std::ifstream in(path);
  if (!in) return fail(AAM_ERR_IO, std::string("cannot open ") + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), out);
}

void aam_program_free(aam_program* p) { delete p; }

char* aam_program_unparse(const aam_program* p) {
  if (!p) return nullptr;
  return dup_string(aam::unparse(*p->p.root));
}

int aam_program_node_count(const aam_program* p) {
  return p ? p->p.node_count() : 0;
}

aam_status aam_run_machine(const aam_program* p, const char* mode, long fuel,
                           int gc_free, int keep_trace, aam_run** out) {
  if (!p || !out) return fail(AAM_ERR_USAGE, "aam_run_machine: null argument");
  aam::MachineKind kind;
  if (!parse_mode(mode, kind))
    return fail(AAM_ERR_USAGE,
                std::string("unknown mode: ") + (mode ? mode : "(null)") +
                    " (expected ref, cek, or cesk)");
  return guarded([&]() {
    auto owned = std::make_unique<aam_run>();
    owned->r = aam::run_machine(p->p, kind, fuel, gc_free != 0, keep_trace != 0);
    *out = owned.release();
    return AAM_OK;
  });
}

const char* aam_run_outcome(const aam_run* r) {
  if (!r) return "";
  switch (r->r.tag) {
    case aam::RunResult::Tag::Value:
      return "value";
    case aam::RunResult::Tag::Timeout:
      return "timeout";
    case aam::RunResult::Tag::Stuck:
      return "stuck";
  }
  return "";
}

const char* aam_run_value(const aam_run* r) { return r ? r->r.value.c_str() : ""; }

const char* aam_run_stuck_reason(const aam_run* r) {
  return r ? r->r.stuck_why.c_str() : "";
}

long aam_run_steps(const aam_run* r) { return r ? r->r.steps : 0; }

long aam_run_trace_count(const aam_run* r) {
  return r ? static_cast<long>(r->r.trace.size()) : 0;
}

const char* aam_run_trace_line(const aam_run* r, long i) {
  if (!r || i < 0 || i >= static_cast<long>(r->r.trace.size())) return nullptr;
  return r->r.trace[static_cast<size_t>(i)].c_str();
}

long aam_run_live_count(const aam_run* r) {
  return r ? static_cast<long>(r->r.live_sizes.size()) : 0;
}

long aam_run_live_size(const aam_run* r, long i) {
  if (!r || i < 0 || i >= static_cast<long>(r->r.live_sizes.size())) return 0;
  return r->r.live_sizes[static_cast<size_t>(i)];
}

void aam_run_free(aam_run* r) { delete r; }

aam_status aam_analyze(const aam_program* p, const char* policy, int k, int gc_free,
                       long node_cap, int jobs, aam_graph** out) {
  if (!p || !out) return fail(AAM_ERR_USAGE, "aam_analyze: null argument");
  return guarded([&]() {
    aam::Policy pol = make_policy(p->p, policy, k);
    auto owned = std::make_unique<aam_graph>();
    owned->g = aam::analyze(p->p, pol, make_options(gc_free, node_cap, jobs));
    *out = owned.release();
    return AAM_OK;
  });
}

long aam_graph_node_count(const aam_graph* g) {
  return g ? static_cast<long>(g->g.nodes.size()) : 0;
}

long aam_graph_edge_count(const aam_graph* g) {
  return g ? static_cast<long>(g->g.edges.size()) : 0;
}

long aam_graph_stuck_count(const aam_graph* g) {
  return g ? static_cast<long>(g->g.stuck_nodes.size()) : 0;
}

long aam_graph_final_count(const aam_graph* g) {
  return g ? static_cast<long>(g->g.final_nodes.size()) : 0;
}

char* aam_graph_json(const aam_graph* g) {
  if (!g) return nullptr;
  return dup_string(aam::export_graph(g->g, aam::GraphFormat::Json));
}

char* aam_graph_dot(const aam_graph* g) {
  if (!g) return nullptr;
  return dup_string(aam::export_graph(g->g, aam::GraphFormat::Dot));
}

char* aam_graph_flows(const aam_graph* g, int label) {
  if (!g) return nullptr;
  char* result = nullptr;
  aam_status st = guarded([&]() {
    aam::FlowFact f = aam::flows_at(g->g, label);
    nlohmann::ordered_json j;
    j["label"] = f.site;
    j["values"] = f.values;
    result = dup_string(j.dump());
    return AAM_OK;
  });
  return st == AAM_OK ? result : nullptr;
}

void aam_graph_free(aam_graph* g) { delete g; }

aam_status aam_soundness_check(const aam_program* p, const char* policy, int k,
                               int gc_free, long fuel, long node_cap, int jobs,
                               int* ok_out, char** report_out) {
  if (!p || !ok_out) return fail(AAM_ERR_USAGE, "aam_soundness_check: null argument");
  return guarded([&]() {
    aam::Policy pol = make_policy(p->p, policy, k);
    aam::SoundnessReport rep =
        aam::soundness_check(p->p, pol, fuel, make_options(gc_free, node_cap, jobs));
    *ok_out = rep.ok ? 1 : 0;
    if (report_out) {
      std::ostringstream msg;
      if (rep.ok) {
        msg << "ok: " << rep.concrete_steps << " concrete steps covered by "
            << rep.graph_nodes << " graph nodes";
      } else {
        msg << "violation at concrete step " << rep.fail_step << ": " << rep.failure;
      }
      *report_out = dup_string(msg.str());
    }
    return AAM_OK;
  });
}

}  // extern "C"
