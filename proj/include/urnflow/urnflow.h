/* urnflow: generalized urn processes, their mean-limit ODEs and Monte Carlo
 * ensembles. Plain C interface over the C++ library.
 *
 * Every function returning urnflow_status reports failures through the
 * status code; urnflow_last_error() then returns a message describing the
 * most recent failure on the calling thread. Objects returned through out
 * parameters are owned by the caller and released with the matching _free
 * function. */
#ifndef URNFLOW_URNFLOW_H
#define URNFLOW_URNFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define URNFLOW_API __declspec(dllexport)
#else
#define URNFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum urnflow_status {
  URNFLOW_OK = 0,
  URNFLOW_ERR_INVALID_ARGUMENT = 1,
  URNFLOW_ERR_CONFIG = 2,
  URNFLOW_ERR_RUNTIME = 3,
  URNFLOW_ERR_IO = 4,
  URNFLOW_ERR_VERIFY_FAILED = 5
} urnflow_status;

typedef struct urnflow_config urnflow_config;
typedef struct urnflow_model urnflow_model;
typedef struct urnflow_path urnflow_path;

/* Receives one line of human-readable output (no trailing newline). */
typedef void (*urnflow_message_fn)(const char* line, void* user);

URNFLOW_API const char* urnflow_version(void);
URNFLOW_API const char* urnflow_last_error(void);
URNFLOW_API const char* urnflow_status_name(urnflow_status status);

/* ---- experiment configs ---- */

URNFLOW_API urnflow_status urnflow_config_load(const char* path, urnflow_config** out);
URNFLOW_API urnflow_status urnflow_config_parse(const char* json, urnflow_config** out);
/* Canonical JSON; release with urnflow_string_free. */
URNFLOW_API urnflow_status urnflow_config_serialize(const urnflow_config* cfg, char** out);
URNFLOW_API urnflow_status urnflow_config_set_seed(urnflow_config* cfg, uint64_t seed);
URNFLOW_API urnflow_status urnflow_config_set_thin(urnflow_config* cfg, uint64_t thin);
URNFLOW_API urnflow_status urnflow_config_set_output_dir(urnflow_config* cfg, const char* dir);
URNFLOW_API urnflow_status urnflow_config_set_command(urnflow_config* cfg, const char* command);
/* Pointer valid until the config is modified or freed. */
URNFLOW_API const char* urnflow_config_command(const urnflow_config* cfg);
URNFLOW_API void urnflow_config_free(urnflow_config* cfg);
URNFLOW_API void urnflow_string_free(char* s);

/* Runs the config's command ("simulate", "ode", "ensemble", "analyze").
 * `jobs` is the worker count for ensembles. */
URNFLOW_API urnflow_status urnflow_run(const urnflow_config* cfg, unsigned jobs, urnflow_message_fn message,
                                       void* user);

/* ---- models ---- */

URNFLOW_API urnflow_status urnflow_model_from_config(const urnflow_config* cfg, urnflow_model** out);
URNFLOW_API urnflow_status urnflow_model_hypercycle(int k, double b, double d, double nu, urnflow_model** out);
URNFLOW_API int urnflow_model_dimension(const urnflow_model* model);
URNFLOW_API size_t urnflow_model_num_moves(const urnflow_model* model);
/* x has `dimension` entries on the simplex; out receives `dimension` entries. */
URNFLOW_API urnflow_status urnflow_model_drift(const urnflow_model* model, const double* x, double* out);
URNFLOW_API urnflow_status urnflow_model_growth(const urnflow_model* model, const double* x, double* out);
/* Exact transition probabilities at z, one per move; out has num_moves entries. */
URNFLOW_API urnflow_status urnflow_model_kernel(const urnflow_model* model, const int64_t* z, double* out);
URNFLOW_API void urnflow_model_free(urnflow_model* model);

/* ---- simulation ---- */

/* Runs until max_steps updates or extinction, recording every thin-th step. */
URNFLOW_API urnflow_status urnflow_simulate(const urnflow_model* model, const int64_t* z0, uint64_t max_steps,
                                            uint64_t seed, uint64_t thin, urnflow_path** out);
URNFLOW_API size_t urnflow_path_length(const urnflow_path* path);
/* z receives `dimension` counts; any output pointer may be NULL. */
URNFLOW_API urnflow_status urnflow_path_entry(const urnflow_path* path, size_t index, uint64_t* n, double* tau,
                                              int64_t* z);
URNFLOW_API void urnflow_path_free(urnflow_path* path);

/* ---- statistics ---- */

/* Wilson 95% score interval: out = {estimate, lower, upper}. */
URNFLOW_API urnflow_status urnflow_wilson_interval(size_t successes, size_t trials, double out[3]);

/* ---- acceptance suite ---- */

#define URNFLOW_VERIFY_TAMPER_DRIFT 1u

/* Runs the selected criteria ("all", a group, names or numbers, comma
 * separated), reporting each result line through `message`. Returns
 * URNFLOW_ERR_VERIFY_FAILED if any criterion fails. out_dir may be NULL. */
URNFLOW_API urnflow_status urnflow_verify(const char* filter, unsigned jobs, const char* out_dir, unsigned flags,
                                          urnflow_message_fn message, void* user);

#ifdef __cplusplus
}
#endif

#endif
