#include "aam/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

namespace aam {

// --- the reachability engine ---

// Waves keep parallel runs deterministic: every state in the current
// frontier is stepped (possibly concurrently), then successors are
// merged in frontier order, so discovery order never depends on the
// worker count.
StateGraph analyze(const Program& p, const Policy& pol, const AnalyzeOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  if (opt.node_cap < 1) throw CapExceededError(opt.node_cap);

  StateGraph g;
  g.program = p;
  g.policy_name = pol.name;
  g.policy_k = pol.k;
  g.gc_free = opt.gc_free;
  g.stats.ceiling = policy_ceiling(p, pol);

  AbstractState root = inject_abstract(p, pol);
  std::map<AbstractState, int, AStateLess> seen;
  std::set<std::pair<int, int>> edges;
  std::set<int> stuck, finals;

  g.nodes.push_back(root);
  seen.emplace(root, 0);
  std::vector<int> frontier{0};
  const int jobs = std::max(1, opt.jobs);

  while (!frontier.empty()) {
    std::vector<AbsStepOut> results(frontier.size());
    auto work = [&](int w, std::exception_ptr& ep) {
      try {
        for (size_t i = (size_t)w; i < frontier.size(); i += (size_t)jobs) {
          results[i] = opt.gc_free ? gc_step(g.nodes[frontier[i]], pol, p)
                                   : abs_step(g.nodes[frontier[i]], pol, p);
        }
      } catch (...) {
        ep = std::current_exception();
      }
    };
    if (jobs == 1 || frontier.size() == 1) {
      std::exception_ptr ep;
      work(0, ep);
      if (ep) std::rethrow_exception(ep);
    } else {
      std::vector<std::exception_ptr> eps(jobs);
      std::vector<std::thread> pool;
      pool.reserve(jobs);
      for (int w = 0; w < jobs; w++)
        pool.emplace_back(work, w, std::ref(eps[w]));
      for (auto& t : pool) t.join();
      for (auto& ep : eps)
        if (ep) std::rethrow_exception(ep);
    }

    std::vector<int> next;
    for (size_t i = 0; i < frontier.size(); i++) {
      const int src = frontier[i];
      AbsStepOut& o = results[i];
      g.stats.stuck_branches += o.stuck_branches;
      if (o.stuck_branches > 0) stuck.insert(src);
      if (o.final_branch) finals.insert(src);
      for (AbstractState& succ : o.succs) {
        g.stats.steps++;
        auto it = seen.find(succ);
        int id;
        if (it != seen.end()) {
          id = it->second;
        } else {
          if ((long)g.nodes.size() + 1 > opt.node_cap) throw CapExceededError(opt.node_cap);
          id = (int)g.nodes.size();
          g.nodes.push_back(succ);
          seen.emplace(std::move(succ), id);
          next.push_back(id);
        }
        edges.insert({src, id});
      }
    }
    frontier = std::move(next);
  }

  g.edges.assign(edges.begin(), edges.end());
  g.stuck_nodes.assign(stuck.begin(), stuck.end());
  g.final_nodes.assign(finals.begin(), finals.end());
  for (const AbstractState& n : g.nodes) {
    g.stats.max_store = std::max(g.stats.max_store, n.store.size());
    if (opt.gc_free) g.stats.live_sizes.push_back((long)n.store.size());
  }
  g.stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  return g;
}

// --- flow facts ---

static std::string value_summary(const ValueTerm& v) {
  switch (v.kind) {
    case ValueTerm::Kind::Lam:
      return "lam@" + std::to_string(v.lam->label);
    case ValueTerm::Kind::False:
      return "#f";
    case ValueTerm::Kind::Callcc:
      return "callcc";
    case ValueTerm::Kind::Kont:
      return "kont";
  }
  return "";
}

static std::string storable_summary(const Storable& s) {
  return s.kind == Storable::Kind::Clo ? value_summary(s.v) : "frame";
}

static const Expr* flow_site(const StateGraph& g, Label site) {
  const Expr* e = g.program.node(site);
  if (!e || (e->kind != ExprKind::Var && e->kind != ExprKind::App))
    throw UnknownLabelError("label " + std::to_string(site) +
                            " does not name a variable reference or application");
  return e;
}

FlowFact flows_at(const StateGraph& g, Label site) {
  const Expr* e = flow_site(g, site);
  std::set<std::string> vals;
  if (e->kind == ExprKind::Var) {
    for (const AbstractState& n : g.nodes) {
      if (n.control.is_kont() || n.control.expr->label != site) continue;
      const Addr* a = n.env.find(e->name);
      if (!a) continue;
      const StorableSet* vs = n.store.find(*a);
      if (!vs) continue;
      for (const Storable& s : vs->vec()) vals.insert(storable_summary(s));
    }
  } else {
    // operator values observed at this call: fn frames it pushed
    for (const AbstractState& n : g.nodes) {
      n.store.for_each([&](const Addr&, const StorableSet& vs) {
        for (const Storable& s : vs.vec()) {
          if (s.kind == Storable::Kind::Kont && s.frame.kind == Frame::Kind::Fn &&
              s.frame.site == site)
            vals.insert(value_summary(s.frame.v));
        }
      });
    }
  }
  FlowFact f;
  f.site = site;
  f.values.assign(vals.begin(), vals.end());
  return f;
}

std::vector<std::pair<std::string, std::vector<std::string>>> flows_at_by_context(
    const StateGraph& g, Label site) {
  const Expr* e = flow_site(g, site);
  if (e->kind != ExprKind::Var)
    throw UnknownLabelError("per-context flows need a variable reference site");
  std::map<std::string, std::set<std::string>> by_addr;
  for (const AbstractState& n : g.nodes) {
    if (n.control.is_kont() || n.control.expr->label != site) continue;
    const Addr* a = n.env.find(e->name);
    if (!a) continue;
    const StorableSet* vs = n.store.find(*a);
    if (!vs) continue;
    auto& bucket = by_addr[render_addr(*a)];
    for (const Storable& s : vs->vec()) bucket.insert(storable_summary(s));
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (auto& [addr, vals] : by_addr)
    out.emplace_back(addr, std::vector<std::string>(vals.begin(), vals.end()));
  return out;
}

// --- soundness harness ---

static std::string render_contour_key(const Contour& c) {
  std::string out = "[";
  for (size_t i = 0; i < c.size(); i++) {
    if (i) out += " ";
    out += std::to_string(c[i]);
  }
  return out + "]";
}

// everything but the store; candidates for coverage must match exactly
static std::string flat_key(const AbstractState& s) {
  std::string out;
  if (s.control.is_kont()) {
    out = "k" + render_addr(s.control.kaddr);
  } else {
    out = "e" + std::to_string((int)s.control.expr->kind) + ":" +
          std::to_string(s.control.expr->label);
  }
  out += "|";
  s.env.for_each([&](const std::string& x, const Addr& a) {
    out += x + "=" + render_addr(a) + ";";
  });
  out += "|" + render_addr(s.kont) + "|" + render_contour_key(s.time);
  return out;
}

SoundnessReport soundness_check(const Program& p, const Policy& pol, long fuel,
                                const AnalyzeOptions& opt) {
  SoundnessReport rep;
  StateGraph g = analyze(p, pol, opt);
  rep.graph_nodes = g.nodes.size();

  std::map<std::string, std::vector<int>> index;
  for (size_t i = 0; i < g.nodes.size(); i++)
    index[flat_key(g.nodes[i])].push_back((int)i);

  auto covered = [&](const AbstractState& a) {
    auto it = index.find(flat_key(a));
    if (it == index.end()) return false;
    for (int id : it->second)
      if (store_leq(a.store, g.nodes[id].store)) return true;
    return false;
  };

  Allocator al = counter_allocator();
  CeskState cur = inject_ceskt(p);

  // For uncollected runs the concrete store only ever appends entries
  // (plus set!'s strong update), so its abstraction is maintained
  // incrementally; collected runs re-fold the (small) live store.
  const bool fresh = opt.gc_free;
  AbstractStore acc;
  std::map<Addr, std::vector<Addr>, AddrLess> contrib;
  auto fold_entry = [&](const Addr& a, const Storable& sv, const Store& st) {
    Addr abs = alpha_addr_of(a, st, pol);
    acc = store_join(acc, abs, alpha_storable_of(sv, st, pol));
    contrib[abs].push_back(a);
  };
  if (!fresh)
    cur.store.slots.for_each(
        [&](const Addr& a, const Storable& sv) { fold_entry(a, sv, cur.store); });

  auto alpha_of = [&](const CeskState& s) {
    if (fresh) return alpha_state(s, pol);
    AbstractState a;
    a.control = s.control.is_kont()
                    ? Control::kont(alpha_addr_of(s.control.kaddr, s.store, pol))
                    : s.control;
    a.env = alpha_env_of(s.env, s.store, pol);
    a.store = acc;
    a.kont = alpha_addr_of(s.kont, s.store, pol);
    a.time = pol.alpha_time(s.time);
    return a;
  };

  AbstractState ai = alpha_of(cur);
  if (!covered(ai)) {
    rep.ok = false;
    rep.fail_step = 0;
    rep.failure = "initial abstraction has no covering graph node: " + render_astate(ai);
    return rep;
  }

  for (long i = 0; i < fuel; i++) {
    StepOut so = opt.gc_free ? gc_step(cur, al, p) : step_ceskt(cur, al, p);
    if (so.tag != StepOut::Tag::Step) break;

    AbsStepOut ao = opt.gc_free ? gc_step(ai, pol, p) : abs_step(ai, pol, p);

    CeskState nxt = std::move(so.next);
    if (!fresh) {
      if (nxt.store.size() > cur.store.size()) {
        Addr na = Addr::conc(cur.time.counter + 1);
        const Storable* sv = nxt.store.find(na);
        if (!sv) throw std::logic_error("allocation tracking out of sync");
        fold_entry(na, *sv, nxt.store);
      } else if (is_value(cur.control)) {
        const Storable* kf = cur.store.find(cur.kont);
        if (kf && kf->kind == Storable::Kind::Kont &&
            kf->frame.kind == Frame::Kind::Set) {
          // strong update: rebuild the one affected abstract slot from
          // the concrete addresses that map onto it
          Addr abs_t = alpha_addr_of(kf->frame.target, nxt.store, pol);
          StorableSet ss;
          for (const Addr& c : contrib[abs_t]) {
            const Storable* cs = nxt.store.find(c);
            if (cs) ss = ss.with(alpha_storable_of(*cs, nxt.store, pol));
          }
          acc = acc.set(abs_t, ss);
        }
      }
    }
    AbstractState an = alpha_of(nxt);

    bool simulated = false;
    for (const AbstractState& succ : ao.succs) {
      if (leq_state(an, succ)) {
        simulated = true;
        break;
      }
    }
    if (!simulated) {
      rep.ok = false;
      rep.fail_step = i;
      rep.failure = "no abstract successor at step " + std::to_string(i) +
                    " dominates " + render_astate(an);
      return rep;
    }
    if (!covered(an)) {
      rep.ok = false;
      rep.fail_step = i + 1;
      rep.failure = "concrete state " + std::to_string(i + 1) +
                    " has no covering graph node: " + render_astate(an);
      return rep;
    }
    cur = std::move(nxt);
    ai = std::move(an);
    rep.concrete_steps++;
  }
  return rep;
}

// --- export ---

static uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

static std::string render_node_control(const AbstractState& s) {
  if (s.control.is_kont()) return "(val kont:" + render_addr(s.control.kaddr) + ")";
  if (is_value(s.control)) return "(val " + render_value(value_term_of(s.control)) + ")";
  return "(ev " + std::to_string(s.control.expr->label) + ")";
}

namespace {

struct ExportOrder {
  std::vector<int> order;              // canonical position -> node id
  std::vector<int> pos;                // node id -> canonical position
  std::vector<std::string> ids;        // node id -> stable string id
};

ExportOrder export_order(const StateGraph& g) {
  ExportOrder eo;
  eo.order.resize(g.nodes.size());
  for (size_t i = 0; i < g.nodes.size(); i++) eo.order[i] = (int)i;
  std::sort(eo.order.begin(), eo.order.end(), [&](int a, int b) {
    return cmp_astate(g.nodes[a], g.nodes[b]) < 0;
  });
  eo.pos.resize(g.nodes.size());
  eo.ids.resize(g.nodes.size());
  std::set<std::string> used;
  for (size_t rank = 0; rank < eo.order.size(); rank++) {
    int id = eo.order[rank];
    eo.pos[id] = (int)rank;
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%016llx",
                  (unsigned long long)fnv1a(render_astate(g.nodes[id])));
    std::string sid = buf;
    int suffix = 2;
    while (!used.insert(sid).second) sid = std::string(buf) + "-" + std::to_string(suffix++);
    eo.ids[id] = sid;
  }
  return eo;
}

std::vector<std::pair<int, int>> canonical_edges(const StateGraph& g,
                                                 const ExportOrder& eo) {
  std::vector<std::pair<int, int>> es;  // canonical positions
  es.reserve(g.edges.size());
  for (auto [a, b] : g.edges) es.emplace_back(eo.pos[a], eo.pos[b]);
  std::sort(es.begin(), es.end());
  return es;
}

std::vector<Label> flow_sites(const Program& p) {
  std::vector<Label> out;
  for (Label l = 1; l <= p.node_count(); l++) {
    const Expr* e = p.node(l);
    if (e && (e->kind == ExprKind::Var || e->kind == ExprKind::App)) out.push_back(l);
  }
  return out;
}

}  // namespace

static std::string export_dot(const StateGraph& g) {
  ExportOrder eo = export_order(g);
  std::set<int> stuck(g.stuck_nodes.begin(), g.stuck_nodes.end());
  std::set<int> finals(g.final_nodes.begin(), g.final_nodes.end());
  std::string out = "digraph states {\n  rankdir=TB;\n  node [shape=box fontname=\"monospace\"];\n";
  for (int id : eo.order) {
    const AbstractState& n = g.nodes[id];
    out += "  \"" + eo.ids[id] + "\" [label=\"" + render_node_control(n) + "\\n" +
           render_contour_key(n.time) + "\"";
    if (id == g.root) out += " penwidth=2";
    if (finals.count(id)) out += " peripheries=2";
    if (stuck.count(id)) out += " color=red";
    out += "];\n";
  }
  for (auto [pa, pb] : canonical_edges(g, eo)) {
    out += "  \"" + eo.ids[eo.order[pa]] + "\" -> \"" + eo.ids[eo.order[pb]] + "\";\n";
  }
  out += "}\n";
  return out;
}

static std::string export_json(const StateGraph& g) {
  using json = nlohmann::ordered_json;
  ExportOrder eo = export_order(g);
  json doc;
  doc["program"] = unparse(*g.program.root);
  doc["policy"] = {{"name", g.policy_name}, {"k", g.policy_k}};
  doc["gc"] = g.gc_free ? "free" : "none";
  doc["root"] = eo.ids[g.root];

  json nodes = json::array();
  for (int id : eo.order) {
    const AbstractState& n = g.nodes[id];
    nodes.push_back({{"id", eo.ids[id]},
                     {"control", render_node_control(n)},
                     {"time", render_contour_key(n.time)}});
  }
  doc["nodes"] = std::move(nodes);

  json edges = json::array();
  for (auto [pa, pb] : canonical_edges(g, eo))
    edges.push_back({eo.ids[eo.order[pa]], eo.ids[eo.order[pb]]});
  doc["edges"] = std::move(edges);

  json flows = json::array();
  for (Label l : flow_sites(g.program)) {
    FlowFact f = flows_at(g, l);
    flows.push_back({{"label", f.site}, {"values", f.values}});
  }
  doc["flows"] = std::move(flows);

  json stats;
  stats["nodes"] = g.nodes.size();
  stats["edges"] = g.edges.size();
  stats["steps"] = g.stats.steps;
  stats["max_store"] = g.stats.max_store;
  stats["stuck_branches"] = g.stats.stuck_branches;
  stats["final_nodes"] = g.final_nodes.size();
  stats["ceiling"] = g.stats.ceiling;
  if (g.gc_free) {
    json ls = json::array();
    for (int id : eo.order) ls.push_back((long)g.nodes[id].store.size());
    stats["live_sizes"] = std::move(ls);
  }
  doc["stats"] = std::move(stats);
  return doc.dump(2) + "\n";
}

std::string export_graph(const StateGraph& g, GraphFormat f) {
  return f == GraphFormat::Dot ? export_dot(g) : export_json(g);
}

// --- state-space ceiling ---

static const unsigned long long kSat = 1000000000000000000ull;

static unsigned long long sat_add(unsigned long long a, unsigned long long b) {
  if (a >= kSat || b >= kSat || a + b >= kSat) return kSat;
  return a + b;
}
static unsigned long long sat_mul(unsigned long long a, unsigned long long b) {
  if (a == 0 || b == 0) return 0;
  if (a >= kSat / b + 1) return kSat;
  unsigned long long r = a * b;
  return r >= kSat ? kSat : r;
}
static unsigned long long sat_pow(unsigned long long b, unsigned long long e) {
  unsigned long long r = 1;
  for (unsigned long long i = 0; i < e; i++) {
    r = sat_mul(r, b);
    if (r >= kSat) return kSat;
  }
  return r;
}

static void count_nodes(const Expr& e, unsigned long long& apps,
                        unsigned long long& lams, std::set<std::string>& vars) {
  switch (e.kind) {
    case ExprKind::Var:
      vars.insert(e.name);
      return;
    case ExprKind::App:
      apps++;
      count_nodes(*e.a, apps, lams, vars);
      count_nodes(*e.b, apps, lams, vars);
      return;
    case ExprKind::Lam:
      lams++;
      vars.insert(e.name);
      count_nodes(*e.a, apps, lams, vars);
      return;
    case ExprKind::If:
      count_nodes(*e.a, apps, lams, vars);
      count_nodes(*e.b, apps, lams, vars);
      count_nodes(*e.c, apps, lams, vars);
      return;
    case ExprKind::Set:
      vars.insert(e.name);
      count_nodes(*e.a, apps, lams, vars);
      return;
    default:
      return;
  }
}

std::string policy_ceiling(const Program& p, const Policy& pol) {
  unsigned long long apps = 0, lams = 0;
  std::set<std::string> vars;
  count_nodes(*p.root, apps, lams, vars);
  const unsigned long long L = (unsigned long long)p.node_count();
  const unsigned long long V = vars.size();

  // contours: call-site strings of length <= k over the application labels
  unsigned long long T = 1;
  for (int i = 1; i <= pol.k; i++) T = sat_add(T, sat_pow(apps, (unsigned long long)i));

  unsigned long long nAddr = sat_mul(sat_add(V, L), T);
  unsigned long long nEnv = sat_pow(sat_add(nAddr, 1), V);
  unsigned long long nVal = sat_add(sat_add(lams, 2), nAddr);
  unsigned long long nClo = sat_mul(nVal, nEnv);
  unsigned long long frames = sat_add(
      1, sat_add(sat_mul(sat_mul(L, nEnv), nAddr),
                 sat_add(sat_mul(sat_mul(nVal, nEnv), nAddr),
                         sat_add(sat_mul(sat_mul(sat_mul(L, L), nEnv), nAddr),
                                 sat_mul(nAddr, nAddr)))));
  unsigned long long nStorable = sat_add(nClo, frames);
  unsigned long long storeExp = sat_mul(nAddr, nStorable);
  unsigned long long nStore = storeExp >= 60 ? kSat : (1ull << storeExp);
  unsigned long long nControl = sat_add(sat_add(L, 2), nAddr);
  unsigned long long total =
      sat_mul(sat_mul(sat_mul(sat_mul(nControl, nEnv), nStore), nAddr), T);
  return total >= kSat ? ">=1e18" : std::to_string(total);
}

}  // namespace aam
