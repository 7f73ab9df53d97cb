#ifndef PROMPTEVO_H
#define PROMPTEVO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define PE_API __attribute__((visibility("default")))
#else
#define PE_API
#endif

typedef enum pe_status {
  PE_OK = 0,
  PE_ERR_INVALID_ARGUMENT,
  PE_ERR_IO,
  PE_ERR_PARSE,
  PE_ERR_CONFIG,
  PE_ERR_EMPTY_MESH,
  PE_ERR_ZERO_PROJECTION,
  PE_ERR_DEGENERATE_BASELINE,
  PE_ERR_CYCLE_DETECTED,
  PE_ERR_MISSING_ROOT,
  PE_ERR_UNKNOWN_WORD,
  PE_ERR_BAD_CONFIG,
  PE_ERR_COVARIANCE_DEGENERATE,
  PE_ERR_WRONG_POPULATION_SIZE,
  PE_ERR_GENERATION_FAILED,
  PE_ERR_EVALUATION_FAILED,
  PE_ERR_INTERNAL
} pe_status;

typedef struct pe_config pe_config;
typedef struct pe_run pe_run;

typedef struct pe_baseline_stats {
  size_t count;
  double cd_min;
  double cd_max;
  double cd_mean;
  double ci95_halfwidth;
  double r_squared;
} pe_baseline_stats;

typedef struct pe_generation_stats {
  int generation;
  double cdn_mean;
  double cdn_ci95;
  double cdn_min;
  double population_best;
  double global_best;
  double sigma;
  int failures;
} pe_generation_stats;

/* Strings are owned by the run handle. */
typedef struct pe_design {
  int generation;
  int index;
  double fitness;
  double cd;
  double frontal_area;
  const char* prompt;
  const char* status;
} pe_design;

/* Message of the last failed call on this thread; "" after success. */
PE_API const char* pe_last_error(void);
PE_API const char* pe_status_name(pe_status status);
PE_API const char* pe_version(void);

/* Returned strings are released with pe_string_free. */
PE_API void pe_string_free(char* s);

PE_API pe_status pe_config_default(pe_config** out);
PE_API pe_status pe_config_load(const char* path, pe_config** out);
/* "section.key=value", value in TOML syntax (bare strings allowed). */
PE_API pe_status pe_config_set(pe_config* config, const char* assignment);
PE_API pe_status pe_config_set_seed(pe_config* config, uint64_t seed);
PE_API pe_status pe_config_to_toml(const pe_config* config, char** out);
/* First free directory <prefix>-s<seed>-<nnn> under run.output_dir. */
PE_API pe_status pe_config_next_run_dir(const pe_config* config, const char* prefix, char** out);
PE_API void pe_config_free(pe_config* config);

/* Generates and evaluates the baseline reference set; writes baseline.json
   and records.jsonl into out_dir. stats may be NULL. */
PE_API pe_status pe_baseline(const pe_config* config, const char* out_dir, pe_baseline_stats* stats);

/* Runs an optimization, persisting artifacts into run_dir. */
PE_API pe_status pe_optimize(const pe_config* config, const char* run_dir, pe_run** out);
PE_API int pe_run_generation_count(const pe_run* run);
PE_API pe_status pe_run_generation(const pe_run* run, int generation, pe_generation_stats* out);
PE_API pe_status pe_run_best(const pe_run* run, pe_design* out);
PE_API pe_status pe_run_baseline(const pe_run* run, pe_baseline_stats* out);
PE_API const char* pe_run_termination_reason(const pe_run* run);
PE_API void pe_run_free(pe_run* run);

/* Word similarity vs. shape distance table written as CSV. Uses the sweep
   section of the config; word_count <= 0 and reference == NULL fall back to
   it. rows may be NULL. */
PE_API pe_status pe_similarity_sweep(const pe_config* config, int word_count, const char* reference,
                                     const char* csv_path, size_t* rows);

/* Writes generations.csv and records.csv into a run directory. out receives
   the newline-separated written paths and may be NULL. */
PE_API pe_status pe_report(const char* run_dir, char** out);

#ifdef __cplusplus
}
#endif

#endif
