#ifndef AAM_H
#define AAM_H

/* C interface to the machine/analysis library. All objects are opaque;
 * every constructor reports through an aam_status and writes the result
 * through an out-parameter. Strings returned as char* are owned by the
 * caller and released with aam_string_free; const char* results stay
 * owned by the queried object. Error detail for the last failing call
 * on the current thread is available via aam_last_error. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum aam_status {
  AAM_OK = 0,
  AAM_ERR_PARSE = 1,    /* malformed input text */
  AAM_ERR_FREE_VAR = 2, /* program is not closed */
  AAM_ERR_USAGE = 3,    /* bad mode/policy/flag combination */
  AAM_ERR_CAP = 4,      /* analysis node cap exceeded */
  AAM_ERR_IO = 5,       /* file could not be read */
  AAM_ERR_INTERNAL = 6  /* invariant violation; see aam_last_error */
} aam_status;

const char* aam_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* aam_last_error(void);

void aam_string_free(char* s);

/* --- programs --- */

typedef struct aam_program aam_program;

aam_status aam_parse(const char* text, aam_program** out);
aam_status aam_parse_file(const char* path, aam_program** out);
void aam_program_free(aam_program* p);

/* Canonical text; round-trips through aam_parse. */
char* aam_program_unparse(const aam_program* p);
int aam_program_node_count(const aam_program* p);

/* --- concrete runs --- */

typedef struct aam_run aam_run;

/* mode: "ref" | "cek" | "cesk". gc_free is only valid with "cesk".
 * keep_trace records one canonical line per machine state. */
aam_status aam_run_machine(const aam_program* p, const char* mode, long fuel,
                           int gc_free, int keep_trace, aam_run** out);

const char* aam_run_outcome(const aam_run* r); /* "value"|"timeout"|"stuck" */
const char* aam_run_value(const aam_run* r);   /* empty unless outcome=value */
const char* aam_run_stuck_reason(const aam_run* r);
long aam_run_steps(const aam_run* r);
long aam_run_trace_count(const aam_run* r);
const char* aam_run_trace_line(const aam_run* r, long i);
long aam_run_live_count(const aam_run* r); /* collected runs: one per step */
long aam_run_live_size(const aam_run* r, long i);
void aam_run_free(aam_run* r);

/* --- analysis --- */

typedef struct aam_graph aam_graph;

/* policy: "0cfa" | "kcfa" (k ignored for "0cfa"). node_cap <= 0 picks
 * the default of 1,000,000. jobs <= 0 means 1. */
aam_status aam_analyze(const aam_program* p, const char* policy, int k, int gc_free,
                       long node_cap, int jobs, aam_graph** out);

long aam_graph_node_count(const aam_graph* g);
long aam_graph_edge_count(const aam_graph* g);
long aam_graph_stuck_count(const aam_graph* g);
long aam_graph_final_count(const aam_graph* g);
char* aam_graph_json(const aam_graph* g);
char* aam_graph_dot(const aam_graph* g);
/* JSON object {"label":N,"values":[...]} for a variable or application
 * site; NULL with aam_last_error set for any other label. */
char* aam_graph_flows(const aam_graph* g, int label);
void aam_graph_free(aam_graph* g);

/* Cross-checks a fuel-bounded concrete run against the analysis.
 * *ok_out becomes 1 when every check passes; *report_out (optional)
 * receives a human-readable summary. */
aam_status aam_soundness_check(const aam_program* p, const char* policy, int k,
                               int gc_free, long fuel, long node_cap, int jobs,
                               int* ok_out, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* AAM_H */
