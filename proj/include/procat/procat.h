#ifndef PROCAT_H
#define PROCAT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PROCAT_API __declspec(dllexport)
#else
#define PROCAT_API __attribute__((visibility("default")))
#endif

typedef enum procat_status {
  PROCAT_OK = 0,
  PROCAT_ERR_MALFORMED_ROW = 1,
  PROCAT_ERR_BAD_TIMESTAMP = 2,
  PROCAT_ERR_EMPTY_LOG = 3,
  PROCAT_ERR_SHIFT_COLLISION = 4,
  PROCAT_ERR_DEADLOCK = 5,
  PROCAT_ERR_UNKNOWN_LABEL = 6,
  PROCAT_ERR_LABEL_COLLISION = 7,
  PROCAT_ERR_PLAN_LOG_MISMATCH = 8,
  PROCAT_ERR_NOT_ENABLED = 9,
  PROCAT_ERR_UNKNOWN_LABEL_POLICY = 10,
  PROCAT_ERR_DISCONNECTED = 11,
  PROCAT_ERR_ZERO_DURATION = 12,
  PROCAT_ERR_MISSING_AUX = 13,
  PROCAT_ERR_DEGENERATE_LABELS = 14,
  PROCAT_ERR_TOO_FEW_PAIRS = 15,
  PROCAT_ERR_DIMENSION_MISMATCH = 16,
  PROCAT_ERR_NON_FINITE_LOSS = 17,
  PROCAT_ERR_SEARCH_BUDGET_EXCEEDED = 18,
  PROCAT_ERR_BUDGET_EXCEEDED = 19,
  PROCAT_ERR_INVALID_ARGUMENT = 20,
  PROCAT_ERR_IO = 21,
  PROCAT_ERR_INTERNAL = 99
} procat_status;

typedef struct procat_log procat_log;
typedef struct procat_net procat_net;
typedef struct procat_model procat_model;

typedef struct procat_params {
  double p_star;
  double eta;
  double epsilon;
  uint64_t seed;
} procat_params;

/* Library version string (static). */
PROCAT_API const char* procat_version(void);
/* Symbolic name of a status, e.g. "ShiftCollision" (static). */
PROCAT_API const char* procat_status_name(procat_status status);
/* 0 ok, 3 for search/oracle budget errors, 2 for every other failure. */
PROCAT_API int procat_exit_code(procat_status status);
/* Message of the last failure on this thread; "" when none. */
PROCAT_API const char* procat_last_error(void);
/* Row or index attached to the last failure, -1 when none. */
PROCAT_API long long procat_last_error_index(void);
/* Frees strings returned through char** out-parameters. */
PROCAT_API void procat_string_free(char* s);
/* p* 0.7, eta 0.4, epsilon 0.1, seed 1. */
PROCAT_API void procat_params_default(procat_params* params);

/* ---- event logs ---- */
/* ts_format: "ms" or "rfc3339"; NULL means "ms". Timestamps are normalized
   (1 ms tie-break) when normalize is non-zero. */
PROCAT_API procat_status procat_log_read_csv(const char* path, const char* ts_format, int normalize, procat_log** out);
PROCAT_API procat_status procat_log_parse_csv(const char* text, const char* ts_format, int normalize, procat_log** out);
PROCAT_API procat_status procat_log_write_csv(const procat_log* log, const char* path, const char* ts_format);
PROCAT_API procat_status procat_log_to_csv(const procat_log* log, const char* ts_format, char** out);
PROCAT_API procat_status procat_log_summary_json(const procat_log* log, char** out);
PROCAT_API size_t procat_log_trace_count(const procat_log* log);
PROCAT_API size_t procat_log_event_count(const procat_log* log);
PROCAT_API void procat_log_free(procat_log* log);

/* ---- pre-processing and relations ---- */
PROCAT_API procat_status procat_preprocess(const procat_log* log, double p_star, procat_log** out, char** plan_json);
/* dot non-zero: Graphviz text; otherwise JSON adjacency. */
PROCAT_API procat_status procat_dfg(const procat_log* log, int dot, char** out);

/* ---- discovery and nets ---- */
PROCAT_API procat_status procat_discover(const procat_log* log, const procat_params* params, procat_net** out);
PROCAT_API procat_status procat_net_from_json(const char* json, procat_net** out);
PROCAT_API procat_status procat_net_read(const char* path, procat_net** out);
PROCAT_API procat_status procat_net_to_json(const procat_net* net, char** out);
PROCAT_API procat_status procat_net_to_dot(const procat_net* net, char** out);
PROCAT_API void procat_net_free(procat_net* net);

/* Fitness, precision, F-measure, size, CFC, structuredness as JSON. With
   allow_fallback zero, a trace whose alignment exceeds max_states fails with
   PROCAT_ERR_SEARCH_BUDGET_EXCEEDED; max_states 0 keeps the default. */
PROCAT_API procat_status procat_evaluate(const procat_net* net, const procat_log* log, int allow_fallback,
                                         size_t max_states, char** report_json);

/* ---- timed state samples ---- */
PROCAT_API procat_status procat_tss(const procat_net* net, const procat_log* log, double beta, char** tss_csv,
                                    char** decay_json);

/* ---- prediction ---- */
/* config_json: model configuration text (NULL for the built-in default).
   outcomes_path / aux_path may be NULL; with outcomes the target is the case
   outcome, otherwise the next activity. */
PROCAT_API procat_status procat_train(const char* tss_csv_path, const char* config_json, const char* aux_path,
                                      const char* outcomes_path, uint64_t seed, procat_model** out);
PROCAT_API procat_status procat_model_from_json(const char* json, procat_model** out);
PROCAT_API procat_status procat_model_read(const char* path, procat_model** out);
PROCAT_API procat_status procat_model_to_json(const procat_model* model, char** out);
PROCAT_API procat_status procat_predict(const procat_model* model, const char* tss_csv_path, const char* aux_path,
                                        char** predictions_csv);
PROCAT_API void procat_model_free(procat_model* model);

/* ---- sweeps and experiments ---- */
/* Grid axes as arrays; an axis with n = 0 holds only its default value.
   Writes the full grid as CSV and the best point as JSON. */
PROCAT_API procat_status procat_sweep(const procat_log* log, const double* p_star, size_t n_p, const double* eta,
                                      size_t n_eta, const double* epsilon, size_t n_eps, char** grid_csv,
                                      char** best_json);
/* manifest_path NULL runs the built-in synthetic suite (traces per dataset,
   0 = 200). format: "json", "csv" or "markdown". model_config_json may be
   NULL. */
PROCAT_API procat_status procat_experiment(const char* manifest_path, const procat_params* params,
                                           const char* model_config_json, size_t traces, const char* format,
                                           char** report);
/* Writes the synthetic suite (CSV logs, outcomes, aux, manifest.json). */
PROCAT_API procat_status procat_write_suite(const char* dir, uint64_t seed, size_t traces);

/* ---- oracle self check ---- */
/* Plain-text pass/fail table; *all_passed set to 1 when every check passed. */
PROCAT_API procat_status procat_self_check(uint64_t seed, char** table, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif
