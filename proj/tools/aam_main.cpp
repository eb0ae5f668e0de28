// Command-line front end. Talks to the library exclusively through the
// C interface in aam.h.
//
// Exit codes: 0 analysis or run completed (timeouts and stuck states
// are reported outcomes, not failures), 1 usage or parse errors,
// 2 node cap exceeded.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aam.h"

namespace {

int die(const std::string& msg, int code) {
  std::cerr << "aam: " << msg << "\n";
  return code;
}

bool write_file(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return out.good();
}

int run_concrete(aam_program* prog, const std::string& mode, long fuel,
                 bool gc_free, bool trace) {
  aam_run* run = nullptr;
  aam_status st = aam_run_machine(prog, mode.c_str(), fuel, gc_free ? 1 : 0,
                                  trace ? 1 : 0, &run);
  if (st != AAM_OK) return die(aam_last_error(), 1);
  if (trace) {
    long n = aam_run_trace_count(run);
    for (long i = 0; i < n; i++) std::cout << aam_run_trace_line(run, i) << "\n";
  }
  std::string outcome = aam_run_outcome(run);
  if (outcome == "value") {
    std::cout << "result: " << aam_run_value(run) << "\n";
  } else if (outcome == "timeout") {
    std::cout << "timeout: no value after " << aam_run_steps(run) << " steps\n";
  } else {
    std::cout << "stuck: " << aam_run_stuck_reason(run) << "\n";
  }
  aam_run_free(run);
  return 0;
}

int run_analyze(aam_program* prog, const std::string& policy, int k, bool gc_free,
                long node_cap, int jobs, const std::string& dot_path,
                const std::string& json_path) {
  aam_graph* graph = nullptr;
  aam_status st = aam_analyze(prog, policy.c_str(), k, gc_free ? 1 : 0, node_cap,
                              jobs, &graph);
  if (st == AAM_ERR_CAP) return die(aam_last_error(), 2);
  if (st != AAM_OK) return die(aam_last_error(), 1);
  int code = 0;
  if (!dot_path.empty()) {
    char* dot = aam_graph_dot(graph);
    bool ok = dot && write_file(dot_path, dot);
    aam_string_free(dot);
    if (!ok) code = die("cannot write " + dot_path, 1);
  }
  if (code == 0 && !json_path.empty()) {
    char* json = aam_graph_json(graph);
    bool ok = json && write_file(json_path, json);
    aam_string_free(json);
    if (!ok) code = die("cannot write " + json_path, 1);
  }
  if (code == 0) {
    std::cout << "nodes: " << aam_graph_node_count(graph)
              << " edges: " << aam_graph_edge_count(graph)
              << " stuck: " << aam_graph_stuck_count(graph)
              << " final: " << aam_graph_final_count(graph) << "\n";
  }
  aam_graph_free(graph);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"machine-derived control-flow analysis for a small lambda calculus"};
  app.set_version_flag("--version", std::string(aam_version()));

  std::string file;
  std::string mode = "analyze";
  std::string policy = "0cfa";
  int k = 1;
  std::string gc;
  long fuel = 100000;
  std::string dot_path, json_path;
  bool trace = false;
  int jobs = 1;

  app.add_option("file", file, "program to load")->required();
  app.add_option("--mode", mode, "ref | cek | cesk | analyze")
      ->check(CLI::IsMember({"ref", "cek", "cesk", "analyze"}));
  app.add_option("--policy", policy, "0cfa | kcfa")
      ->check(CLI::IsMember({"0cfa", "kcfa"}));
  auto* k_opt = app.add_option("--k", k, "contour depth (kcfa only)")
                    ->check(CLI::NonNegativeNumber);
  auto* gc_opt = app.add_option("--gc", gc, "none | free (default: free where valid)")
                     ->check(CLI::IsMember({"none", "free"}));
  app.add_option("--fuel", fuel, "max transitions for concrete modes")
      ->check(CLI::PositiveNumber);
  app.add_option("--dot", dot_path, "write the state graph as graphviz");
  app.add_option("--json", json_path, "write the state graph as json");
  app.add_flag("--trace", trace, "print every machine state (concrete modes)");
  app.add_option("--jobs", jobs, "worker threads for analysis")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  bool concrete = mode != "analyze";
  if (k_opt->count() > 0 && policy != "kcfa")
    return die("--k requires --policy kcfa", 1);
  bool gc_free;
  if (gc_opt->count() > 0) {
    gc_free = gc == "free";
    if (gc_free && (mode == "ref" || mode == "cek"))
      return die("--gc free is not valid with --mode " + mode, 1);
  } else {
    gc_free = mode == "cesk" || mode == "analyze";
  }
  if (concrete && (!dot_path.empty() || !json_path.empty()))
    return die("--dot/--json require --mode analyze", 1);
  if (!concrete && trace) return die("--trace requires a concrete mode", 1);

  long node_cap = 0;  // 0 picks the library default
  if (const char* env = std::getenv("AAM_NODE_CAP")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (!end || *end != '\0' || v <= 0)
      return die(std::string("AAM_NODE_CAP must be a positive integer, got '") +
                     env + "'",
                 1);
    node_cap = v;
  }

  aam_program* prog = nullptr;
  aam_status st = aam_parse_file(file.c_str(), &prog);
  if (st != AAM_OK) return die(aam_last_error(), 1);

  int code = concrete ? run_concrete(prog, mode, fuel, gc_free, trace)
                      : run_analyze(prog, policy, k, gc_free, node_cap, jobs,
                                    dot_path, json_path);
  aam_program_free(prog);
  return code;
}
