#include "aam/run.hpp"

#include <stdexcept>

namespace aam {

// --- CEK rendering ---

static std::string render_cek_env(const CekEnv& e);

static std::string render_cek_clo(const CekClosure& c) {
  return "(clo " + render_value(c->v) + " " + render_cek_env(c->env) + ")";
}

static std::string render_cek_env(const CekEnv& e) {
  std::string out = "(";
  bool first = true;
  e.for_each([&](const std::string& x, const CekClosure& c) {
    if (!first) out += " ";
    first = false;
    out += "(" + x + " . " + render_cek_clo(c) + ")";
  });
  return out + ")";
}

static std::string render_cek_kont(const CekKont& k) {
  if (!k) return "mt";
  switch (k->kind) {
    case CekKontNode::Kind::Ar:
      return "(ar " + std::to_string(k->e0->label) + " " + render_cek_env(k->env) +
             " " + render_cek_kont(k->next) + ")";
    case CekKontNode::Kind::Fn:
      return "(fn " + render_value(k->v) + " " + render_cek_env(k->env) + " " +
             render_cek_kont(k->next) + ")";
    case CekKontNode::Kind::If:
      return "(if " + std::to_string(k->e0->label) + " " +
             std::to_string(k->e1->label) + " " + render_cek_env(k->env) + " " +
             render_cek_kont(k->next) + ")";
  }
  return "";
}

std::string render_cek_state(const CekState& s) {
  std::string ctl;
  if (is_value(s.control)) ctl = "(val " + render_value(value_term_of(s.control)) + ")";
  else ctl = "(ev " + std::to_string(s.control.expr->label) + ")";
  return "(" + ctl + " " + render_cek_env(s.env) + " " + render_cek_kont(s.kont) + ")";
}

// --- drivers ---

static RunResult run_ref(const Program& p, long fuel, bool keep_trace) {
  RefResult rr = eval_reference(p, fuel, keep_trace);
  RunResult out;
  out.steps = rr.steps;
  if (keep_trace) {
    for (const ExprPtr& t : rr.trace) out.trace.push_back(unparse(*t));
  }
  switch (rr.tag) {
    case RefResult::Tag::Value:
      out.tag = RunResult::Tag::Value;
      out.value_term = rr.value;
      out.value = unparse(*rr.value);
      break;
    case RefResult::Tag::Timeout:
      out.tag = RunResult::Tag::Timeout;
      break;
    case RefResult::Tag::Stuck:
      out.tag = RunResult::Tag::Stuck;
      out.stuck_why = rr.stuck_why;
      break;
  }
  return out;
}

static RunResult run_cek(const Program& p, long fuel, bool keep_trace) {
  RunResult out;
  CekState cur = inject_cek(p);
  if (keep_trace) out.trace.push_back(render_cek_state(cur));
  for (long i = 0; i <= fuel; i++) {
    CekStepOut o = step_cek(cur, p);
    if (o.tag == CekStepOut::Tag::Final) {
      out.tag = RunResult::Tag::Value;
      ValueTerm v = value_term_of(cur.control);
      out.value_term = unload_cek(v, cur.env);
      out.value = unparse(*out.value_term);
      return out;
    }
    if (o.tag == CekStepOut::Tag::Stuck) {
      out.tag = RunResult::Tag::Stuck;
      out.stuck_why = o.stuck_why;
      return out;
    }
    if (i == fuel) break;  // the peek above only checks for a final state
    cur = std::move(o.next);
    out.steps++;
    if (keep_trace) out.trace.push_back(render_cek_state(cur));
  }
  out.tag = RunResult::Tag::Timeout;
  return out;
}

static RunResult run_ceskt(const Program& p, long fuel, bool gc_free, bool keep_trace) {
  RunResult out;
  Allocator al = counter_allocator();
  CeskState cur = inject_ceskt(p);
  if (keep_trace) out.trace.push_back(render_state(cur));
  for (long i = 0; i <= fuel; i++) {
    StepOut o = gc_free ? gc_step(cur, al, p) : step_ceskt(cur, al, p);
    if (o.tag == StepOut::Tag::Final) {
      out.tag = RunResult::Tag::Value;
      ValueTerm v = value_term_of(cur.control);
      try {
        out.value_term = unload_ceskt(v, cur.env, cur.store);
        out.value = unparse(*out.value_term);
      } catch (const std::runtime_error&) {
        out.value = render_value(v);
      }
      return out;
    }
    if (o.tag == StepOut::Tag::Stuck) {
      out.tag = RunResult::Tag::Stuck;
      out.stuck_why = o.stuck_why;
      return out;
    }
    if (i == fuel) break;
    cur = std::move(o.next);
    out.steps++;
    if (gc_free) out.live_sizes.push_back((long)cur.store.size());
    if (keep_trace) out.trace.push_back(render_state(cur));
  }
  out.tag = RunResult::Tag::Timeout;
  return out;
}

RunResult run_machine(const Program& p, MachineKind kind, long fuel, bool gc_free,
                      bool keep_trace) {
  if (fuel < 1) throw std::invalid_argument("fuel must be positive");
  if (gc_free && kind != MachineKind::Ceskt)
    throw std::invalid_argument("per-step collection requires the store machine");
  switch (kind) {
    case MachineKind::Ref:
      return run_ref(p, fuel, keep_trace);
    case MachineKind::Cek:
      return run_cek(p, fuel, keep_trace);
    case MachineKind::Ceskt:
      return run_ceskt(p, fuel, gc_free, keep_trace);
  }
  throw std::logic_error("unreachable machine kind");
}

}  // namespace aam
