#ifndef OURO_OURO_H
#define OURO_OURO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define OURO_API __attribute__((visibility("default")))
#else
#define OURO_API
#endif

typedef enum ouro_status {
    OURO_OK = 0,
    OURO_ERR_INVALID_ARGUMENT = 1,
    OURO_ERR_NOT_FOUND = 2,
    OURO_ERR_CONFLICT = 3,
    OURO_ERR_CONFIG = 4,
    OURO_ERR_IO = 5,
    OURO_ERR_PARSE = 6,
    OURO_ERR_CANCELLED = 7,
    OURO_ERR_TIMEOUT = 8,
    OURO_ERR_TRANSPORT = 9,
    OURO_ERR_SCRIPT = 10,
    OURO_ERR_INTERNAL = 11
} ouro_status;

/* How a run ended. */
typedef enum ouro_run_status {
    OURO_RUN_RETURNED = 0,
    OURO_RUN_CANCELLED = 1,
    OURO_RUN_TIMED_OUT = 2,
    OURO_RUN_BUDGET_EXHAUSTED = 3
} ouro_run_status;

typedef struct ouro_session ouro_session;
typedef struct ouro_run ouro_run;
typedef struct ouro_server ouro_server;

typedef void (*ouro_log_fn)(const char* line, void* user);

OURO_API const char* ouro_version(void);
OURO_API const char* ouro_status_name(ouro_status status);
/* Message of the last failed call on this thread; valid until the next call. */
OURO_API const char* ouro_last_error(void);
/* Frees strings returned through char** out-parameters. */
OURO_API void ouro_string_free(char* s);

/* ---- sessions: an agent codebase plus a model gateway configuration ---- */

OURO_API ouro_status ouro_session_open(const char* agent_dir, const char* gateway_config, ouro_session** out);
OURO_API void ouro_session_close(ouro_session* session);

/* seconds <= 0, dollars NULL or max_completions <= 0 keep the current value. */
OURO_API ouro_status ouro_session_set_budget(ouro_session* session, double seconds, const char* dollars,
                                             int max_completions);
/* Same, for each meta-agent run of ouro_meta_run. */
OURO_API ouro_status ouro_session_set_meta_budget(ouro_session* session, double seconds, const char* dollars,
                                                  int max_completions);
/* The overseer runs when enabled (the default) and the gateway config names an overseer_model. */
OURO_API ouro_status ouro_session_set_overseer(ouro_session* session, int enabled);
/* Seconds before the overseer's first check (default 30). */
OURO_API ouro_status ouro_session_set_overseer_delay(ouro_session* session, double seconds);
/* Directory the agent works in; created if missing. Defaults to the current directory. */
OURO_API ouro_status ouro_session_set_workspace(ouro_session* session, const char* dir);
/* Parallel benchmark tasks. */
OURO_API ouro_status ouro_session_set_workers(ouro_session* session, int workers);
/* Serve the control API for runs, benchmarks and meta-loops started from this session.
   Returns the bound port through bound_port (may be NULL). */
OURO_API ouro_status ouro_session_serve(ouro_session* session, const char* host, int port, int* bound_port);
OURO_API ouro_status ouro_session_set_log(ouro_session* session, ouro_log_fn fn, void* user);

/* ---- single runs ---- */

/* Starts the entry agent on `problem` in the background. */
OURO_API ouro_status ouro_run_start(ouro_session* session, const char* problem, ouro_run** out);
/* Waits up to timeout_ms (< 0 waits forever); *finished is set to 1 when done. */
OURO_API ouro_status ouro_run_wait(ouro_run* run, int timeout_ms, int* finished);
/* Valid once finished. *answer is the submitted answer, or the final value when nothing
   was submitted; free it with ouro_string_free. */
OURO_API ouro_status ouro_run_result(ouro_run* run, ouro_run_status* status, char** answer);
OURO_API ouro_status ouro_run_root_id(ouro_run* run, char** call_id);
OURO_API ouro_status ouro_run_tree_json(ouro_run* run, char** json);
OURO_API ouro_status ouro_run_trace_text(ouro_run* run, char** text);
/* Events with event_id > since, as a JSON array. */
OURO_API ouro_status ouro_run_events_json(ouro_run* run, uint64_t since, char** json);
OURO_API ouro_status ouro_run_notify(ouro_run* run, const char* call_id, const char* message);
/* Without force, a call that has never been notified cannot be cancelled (OURO_ERR_CONFLICT). */
OURO_API ouro_status ouro_run_cancel(ouro_run* run, const char* call_id, const char* reason, int force);
/* Writes trace.txt, tree.json and events.jsonl into dir. */
OURO_API ouro_status ouro_run_save(ouro_run* run, const char* dir);
/* Cancels the run if it is still going, then frees it. */
OURO_API void ouro_run_free(ouro_run* run);

/* ---- benchmarks ---- */

/* Runs every task in the JSONL file. When out_dir is set, report.json, table.txt and
   per-task traces are written there. *report_json receives the report. */
OURO_API ouro_status ouro_bench_run(ouro_session* session, const char* tasks_path, const char* out_dir,
                                    char** report_json);
/* Fixed-width table for a report produced by ouro_bench_run. */
OURO_API ouro_status ouro_report_table(const char* report_json, char** table);

/* ---- meta-loop ---- */

/* Runs `iterations` more rounds of evaluate, select and improve on the archive, seeding it
   with the session's codebase when empty. *final_index receives the newest iteration. */
OURO_API ouro_status ouro_meta_run(ouro_session* session, const char* archive_dir, const char* tasks_path,
                                   int iterations, int* final_index);
OURO_API ouro_status ouro_archive_json(const char* archive_dir, char** json);

/* ---- fixtures and task generation ---- */

OURO_API ouro_status ouro_build_repo(const char* script_json_path, const char* dest);
OURO_API ouro_status ouro_gen_file_edit(const char* repo, size_t count, uint64_t seed, const char* out_path,
                                        size_t* written);
OURO_API ouro_status ouro_gen_symbol(const char* repo, size_t count, uint64_t seed, const char* out_path,
                                     size_t* written);

/* ---- standalone control server over saved artifacts ---- */

/* tree_json_path: a tree.json written by ouro_run_save (may be NULL).
   archive_dir: an archive to list (may be NULL). */
OURO_API ouro_status ouro_server_open(const char* tree_json_path, const char* archive_dir, const char* host,
                                      int port, ouro_server** out, int* bound_port);
OURO_API void ouro_server_close(ouro_server* server);

#ifdef __cplusplus
}
#endif

#endif
