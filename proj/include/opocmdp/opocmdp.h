/* C interface to the contextual-MDP optimism library. All state lives behind
 * opaque handles; every call returns a status code and leaves a thread-local
 * message readable through opocmdp_last_error(). Strings and arrays returned
 * through out-parameters are owned as documented per call. */

#ifndef OPOCMDP_H
#define OPOCMDP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum opocmdp_status {
  OPOCMDP_OK = 0,
  OPOCMDP_ERROR_INVALID_ARGUMENT = 1, /* null handle, bad name, bad index */
  OPOCMDP_ERROR_CONFIG = 2,           /* unparseable or invalid configuration */
  OPOCMDP_ERROR_IO = 3,               /* file could not be read or written */
  OPOCMDP_ERROR_INTERNAL = 4
} opocmdp_status;

typedef enum opocmdp_algorithm {
  OPOCMDP_ALGO_OPO = 0,
  OPOCMDP_ALGO_UNIFORM = 1,     /* uniform-policy baseline */
  OPOCMDP_ALGO_KNOWN_MODEL = 2  /* plays the true model's optimal policy */
} opocmdp_algorithm;

typedef struct opocmdp_config opocmdp_config;
typedef struct opocmdp_run opocmdp_run;

/* Message for the most recent failing call on this thread; never NULL. */
const char* opocmdp_last_error(void);

const char* opocmdp_version(void);

/* ---- configuration ----------------------------------------------------- */

opocmdp_status opocmdp_config_from_json(const char* json_text, opocmdp_config** out);
opocmdp_status opocmdp_config_from_file(const char* path, opocmdp_config** out);
void opocmdp_config_free(opocmdp_config* config);

opocmdp_status opocmdp_config_set_seed(opocmdp_config* config, uint64_t seed);
opocmdp_status opocmdp_config_get_seed(const opocmdp_config* config, uint64_t* out);
opocmdp_status opocmdp_config_episodes(const opocmdp_config* config, int64_t* out);

/* Resolved config (defaults included) as JSON; free with opocmdp_string_free. */
opocmdp_status opocmdp_config_to_json(const opocmdp_config* config, char** out);

/* Closed-form regret bound for the config's dimensions. */
opocmdp_status opocmdp_regret_bound(const opocmdp_config* config, double* out);

void opocmdp_string_free(char* s);

/* ---- runs --------------------------------------------------------------- */

opocmdp_status opocmdp_run_experiment(const opocmdp_config* config, opocmdp_algorithm algorithm,
                                      opocmdp_run** out);
void opocmdp_run_free(opocmdp_run* run);

opocmdp_status opocmdp_run_num_episodes(const opocmdp_run* run, int64_t* out);
opocmdp_status opocmdp_run_pseudo_regret(const opocmdp_run* run, double* out);
opocmdp_status opocmdp_run_expected_regret(const opocmdp_run* run, double* out);
opocmdp_status opocmdp_run_regret_slope(const opocmdp_run* run, double* out);

/* Per-episode metrics as CSV; free with opocmdp_string_free. */
opocmdp_status opocmdp_run_metrics_csv(const opocmdp_run* run, char** out);
opocmdp_status opocmdp_run_write_metrics_csv(const opocmdp_run* run, const char* path);

/* Copies one named metrics column (any CSV column name) into caller storage;
 * capacity must be at least the episode count. */
opocmdp_status opocmdp_run_column(const opocmdp_run* run, const char* column, double* out,
                                  int64_t capacity);

/* Runs the verification suites over a finished run and caches the report.
 * A failing inequality is data, not an error: the call still returns OK. */
opocmdp_status opocmdp_run_verify(opocmdp_run* run);
opocmdp_status opocmdp_run_suite_size(const opocmdp_run* run, int64_t* out);
/* name points into the run handle and stays valid until opocmdp_run_free. */
opocmdp_status opocmdp_run_suite_check(const opocmdp_run* run, int64_t index, const char** name,
                                       int* passed, double* worst_slack);
opocmdp_status opocmdp_run_suites_passed(const opocmdp_run* run, int* out);

/* Summary text for a verified run; free with opocmdp_string_free. */
opocmdp_status opocmdp_run_summary(const opocmdp_run* run, char** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OPOCMDP_H */
