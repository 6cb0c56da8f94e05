#ifndef LEADER_H
#define LEADER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LeaderStatus {
  LEADER_STATUS_OK = 0,
  LEADER_STATUS_NULL_ARGUMENT = 1,
  LEADER_STATUS_INVALID_UTF8 = 2,
  LEADER_STATUS_PARSE_ERROR = 3,
  LEADER_STATUS_SUITE_ERROR = 4,
  LEADER_STATUS_CONFIG_ERROR = 5,
  LEADER_STATUS_PIPELINE_ERROR = 6,
  LEADER_STATUS_METRICS_ERROR = 7,
  LEADER_STATUS_PANIC = 8,
} LeaderStatus;

/**
 * A parsed MiniC program.
 */
typedef struct LeaderProgram LeaderProgram;

/**
 * The outcome of one debloating run.
 */
typedef struct LeaderRun LeaderRun;

/**
 * A list of test cases.
 */
typedef struct LeaderSuite LeaderSuite;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message for the last failed call on this thread, or null. The
 * pointer stays valid until the next call on the same thread.
 */
const char *leader_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void leader_string_free(char *s);

/**
 * Parse and type-check MiniC source.
 *
 * # Safety
 * `source` and `name` must be NUL-terminated strings; `out` must be
 * writable.
 */
enum LeaderStatus leader_program_parse(const char *source,
                                       const char *name,
                                       struct LeaderProgram **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not used afterwards.
 */
void leader_program_free(struct LeaderProgram *p);

/**
 * Number of statements, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live program handle.
 */
size_t leader_program_size(const struct LeaderProgram *p);

/**
 * Canonical source text of the program, or null for a null handle.
 *
 * # Safety
 * `p` must be null or a live program handle.
 */
char *leader_program_print(const struct LeaderProgram *p);

/**
 * Parse a suite in JSON Lines form.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated string; `out` must be writable.
 */
enum LeaderStatus leader_suite_parse(const char *jsonl, struct LeaderSuite **out);

/**
 * # Safety
 * `s` must be null or a live suite handle.
 */
size_t leader_suite_len(const struct LeaderSuite *s);

/**
 * # Safety
 * `s` must be null or a handle from this library, not used afterwards.
 */
void leader_suite_free(struct LeaderSuite *s);

/**
 * Debloat `program` against the stamped tests in `t_d`. `doc` may be
 * null. `config_json` may be null for defaults, or a JSON object with any
 * of the pipeline settings (`seed`, `augment`, `max_iterations`, ...).
 * Only the rule-based policy is available through this interface.
 *
 * # Safety
 * Handles must be live; strings NUL-terminated or null; `out` writable.
 */
enum LeaderStatus leader_debloat(const struct LeaderProgram *program,
                                 const struct LeaderSuite *t_d,
                                 const char *doc,
                                 const char *config_json,
                                 struct LeaderRun **out);

/**
 * # Safety
 * `r` must be null or a handle from this library, not used afterwards.
 */
void leader_run_free(struct LeaderRun *r);

/**
 * A new program handle holding the debloated program.
 *
 * # Safety
 * `r` must be a live run handle; `out` writable.
 */
enum LeaderStatus leader_run_debloated(const struct LeaderRun *r, struct LeaderProgram **out);

/**
 * The run log as JSON, or null for a null handle.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
char *leader_run_log_json(const struct LeaderRun *r);

/**
 * 1 if the debloated program passed its whole validation suite, else 0.
 *
 * # Safety
 * `r` must be null or a live run handle.
 */
int32_t leader_run_passed(const struct LeaderRun *r);

/**
 * Score `debloated` against `original` on `t_e`; writes the metrics as a
 * JSON string to `out_json`.
 *
 * # Safety
 * Handles must be live; `out_json` writable.
 */
enum LeaderStatus leader_evaluate(const struct LeaderProgram *original,
                                  const struct LeaderProgram *debloated,
                                  const struct LeaderSuite *t_e,
                                  uint64_t seed,
                                  char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEADER_H */
