/* C interface to the sombrero spinor-condensate simulator.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns a somb_status; on
 * failure somb_last_error() describes the problem for the calling thread.
 * Strings returned through char** out-parameters are released with
 * somb_string_free. */
#ifndef SOMB_SOMB_H
#define SOMB_SOMB_H

#include <stddef.h>

#if defined(_WIN32)
#define SOMB_API __declspec(dllexport)
#else
#define SOMB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum somb_status {
  SOMB_OK = 0,
  SOMB_ERR_CONTRACT = 1,
  SOMB_ERR_SETUP = 2,
  SOMB_ERR_SINGULAR = 3,
  SOMB_ERR_NUMERIC = 4,
  SOMB_ERR_MONITOR = 5,
  SOMB_ERR_DEGENERATE = 6,
  SOMB_ERR_UNDERSAMPLED = 7,
  SOMB_ERR_GEODESIC = 8,
  SOMB_ERR_PARSE = 9,
  SOMB_ERR_FORMAT = 10,
  SOMB_ERR_LENGTH = 11,
  SOMB_ERR_IO = 12,
  SOMB_ERR_INTERNAL = 99
} somb_status;

typedef struct somb_config somb_config;
typedef struct somb_result somb_result;
typedef struct somb_field somb_field;

SOMB_API const char* somb_version(void);
/* Lower-case identifier of a status code, e.g. "parse". */
SOMB_API const char* somb_status_name(somb_status status);
/* Message of the last failed call on this thread; "" if none. */
SOMB_API const char* somb_last_error(void);
SOMB_API void somb_string_free(char* text);

/* Build, convention and environment report as JSON. */
SOMB_API somb_status somb_info(char** json);

/* ---- configuration ---- */

SOMB_API somb_status somb_config_parse(const char* text, somb_config** out);
SOMB_API somb_status somb_config_load(const char* path, somb_config** out);
/* Defaults of a named scenario, e.g. "berry_trace". */
SOMB_API somb_status somb_config_default(const char* scenario, somb_config** out);
SOMB_API somb_status somb_config_echo(const somb_config* cfg, char** text);
SOMB_API somb_status somb_config_validate(const somb_config* cfg);
SOMB_API somb_status somb_config_set_output_dir(somb_config* cfg, const char* dir);
/* Non-zero promotes monitor warnings (norm drift, edge mass) to errors. */
SOMB_API somb_status somb_config_set_strict(somb_config* cfg, int strict);
SOMB_API somb_status somb_config_scenario(const somb_config* cfg, const char** name);
SOMB_API void somb_config_free(somb_config* cfg);

/* ---- runs ---- */

SOMB_API somb_status somb_run(const somb_config* cfg, somb_result** out);
/* Writes the bundle into dir (NULL: the configured output directory). The
 * directory actually used is returned through written_dir if non-NULL. */
SOMB_API somb_status somb_result_write(const somb_result* result, const char* dir,
                                       char** written_dir);
SOMB_API size_t somb_result_scalar_count(const somb_result* result);
/* Scalars are ordered by name; name stays valid while the result lives. */
SOMB_API somb_status somb_result_scalar(const somb_result* result, size_t index,
                                        const char** name, double* value);
SOMB_API somb_status somb_result_scalar_by_name(const somb_result* result, const char* name,
                                                double* value);
SOMB_API size_t somb_result_series_count(const somb_result* result);
SOMB_API somb_status somb_result_series_label(const somb_result* result, size_t index,
                                              const char** label, size_t* rows);
/* Monitor flags of all sub-runs combined (bit 1 norm drift, 2 edge mass,
 * 4 momentum edge mass). */
SOMB_API unsigned somb_result_monitor_flags(const somb_result* result);
SOMB_API void somb_result_free(somb_result* result);

/* ---- dense oracle ---- */

typedef struct somb_oracle_report {
  double tau;
  double dt;
  double l2_distance;       /* split operator at dt vs exact */
  double l2_distance_half;  /* split operator at dt/2 vs exact */
  double ratio;             /* l2_distance / l2_distance_half */
  int nx;
  int ny;
} somb_oracle_report;

/* Compares the full split-operator engine with exact diagonalization over
 * the config's duration (1 if unset). Requires g = 0 and a grid of at most
 * 48 x 48 points. */
SOMB_API somb_status somb_oracle_compare(const somb_config* cfg, somb_oracle_report* out);

/* ---- snapshots ---- */

typedef struct somb_field_info {
  int nx;
  int ny;
  int components;
  int momentum;  /* 0 position, 1 momentum representation */
  double Lx;
  double Ly;
  double tau;
} somb_field_info;

SOMB_API somb_status somb_snapshot_read(const char* path, somb_field** out);
SOMB_API somb_status somb_snapshot_write(const somb_field* field, const char* path);
SOMB_API somb_status somb_field_info_get(const somb_field* field, somb_field_info* info);
/* Interleaved (re, im) doubles, component-major; 2 * components * nx * ny values. */
SOMB_API const double* somb_field_data(const somb_field* field);
/* Copies an interleaved buffer into a new field. */
SOMB_API somb_status somb_field_create(const somb_field_info* info, const double* data,
                                       somb_field** out);
SOMB_API void somb_field_free(somb_field* field);

#ifdef __cplusplus
}
#endif

#endif /* SOMB_SOMB_H */
