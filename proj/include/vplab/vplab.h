#ifndef VPLAB_VPLAB_H
#define VPLAB_VPLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define VPLAB_API __declspec(dllexport)
#else
#  define VPLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vplab_status {
    VPLAB_OK = 0,
    VPLAB_ERR_INVALID_ARGUMENT = 1,
    VPLAB_ERR_DOMAIN = 2,
    VPLAB_ERR_CONFIG = 3,
    VPLAB_ERR_NUMERICAL = 4,
    VPLAB_ERR_FORMAT = 5,
    VPLAB_ERR_IO = 6,
    VPLAB_ERR_INTERNAL = 7
} vplab_status;

typedef struct vplab_config vplab_config;
typedef struct vplab_run_result vplab_run_result;
typedef struct vplab_state vplab_state;

/* Message for the last failing call on this thread; never NULL. */
VPLAB_API const char* vplab_last_error(void);
VPLAB_API const char* vplab_status_name(vplab_status status);
VPLAB_API const char* vplab_version(void);

/* Configuration */
VPLAB_API vplab_status vplab_config_new(vplab_config** out);
VPLAB_API vplab_status vplab_config_load(const char* path, vplab_config** out);
VPLAB_API vplab_status vplab_config_parse(const char* text, vplab_config** out);
/* Sets "section.key"; validation happens on the next read of the config. */
VPLAB_API vplab_status vplab_config_set(vplab_config* config, const char* field, const char* value);
VPLAB_API vplab_status vplab_config_validate(const vplab_config* config);
VPLAB_API vplab_status vplab_config_hash(const vplab_config* config, uint64_t* out);
VPLAB_API void vplab_config_free(vplab_config* config);

/* Runs sample | evolve | meanfield | compare | chaos | rate | wasserstein | audit. */
VPLAB_API vplab_status vplab_run(const vplab_config* config, const char* subcommand, vplab_run_result** out);
VPLAB_API const char* vplab_run_directory(const vplab_run_result* result);
VPLAB_API size_t vplab_run_summary_count(const vplab_run_result* result);
VPLAB_API const char* vplab_run_summary_line(const vplab_run_result* result, size_t index);
VPLAB_API size_t vplab_run_file_count(const vplab_run_result* result);
VPLAB_API const char* vplab_run_file(const vplab_run_result* result, size_t index);
VPLAB_API void vplab_run_free(vplab_run_result* result);

/* Phase-space states; q and p are row-major n x 3 arrays. */
VPLAB_API vplab_status vplab_state_new(size_t n, const double* q, const double* p, double t, vplab_state** out);
VPLAB_API vplab_status vplab_state_read(const char* path, vplab_state** out);
VPLAB_API vplab_status vplab_state_write(const vplab_state* state, const char* path, int reference, double delta,
                                         double sigma, double alpha);
VPLAB_API size_t vplab_state_size(const vplab_state* state);
VPLAB_API double vplab_state_time(const vplab_state* state);
VPLAB_API vplab_status vplab_state_copy(const vplab_state* state, double* q, double* p);
VPLAB_API void vplab_state_free(vplab_state* state);

/* Direct numerics */
VPLAB_API vplab_status vplab_kernel_eval(int sigma, double alpha, double delta, size_t n, const double q[3],
                                         double out[3]);
/* exact != 0 requires equal sizes; otherwise the sliced estimate is used. */
VPLAB_API vplab_status vplab_wasserstein(const vplab_state* a, const vplab_state* b, double p, int exact,
                                         uint64_t seed, double* out);
VPLAB_API vplab_status vplab_delta_metric(const vplab_state* psi, const vplab_state* phi, double* out);

#ifdef __cplusplus
}
#endif

#endif /* VPLAB_VPLAB_H */
