#ifndef HAWKESVOL_H
#define HAWKESVOL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(HAWKESVOL_BUILDING)
#    define HV_API __declspec(dllexport)
#  else
#    define HV_API __declspec(dllimport)
#  endif
#else
#  define HV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hv_status {
    HV_OK = 0,
    HV_PARTIAL = 1, /* command finished, some items failed and were flagged */
    HV_ERR_INVALID_ARGUMENT = 10,
    HV_ERR_DIMENSION_MISMATCH,
    HV_ERR_NON_CONVERGENCE,
    HV_ERR_UNSTABLE,
    HV_ERR_SINGULAR,
    HV_ERR_DEGENERATE_DENOMINATOR,
    HV_ERR_EXPLOSION_GUARD,
    HV_ERR_NEGATIVE_KERNEL,
    HV_ERR_INSUFFICIENT_SPAN,
    HV_ERR_UNSORTED_INPUT,
    HV_ERR_EMPTY_HORIZON,
    HV_ERR_SINGULAR_SYSTEM,
    HV_ERR_INSUFFICIENT_EVENTS,
    HV_ERR_ZERO_SIGMA,
    HV_ERR_ZERO_INTENSITY,
    HV_ERR_EMPTY_SERIES,
    HV_ERR_NONPOSITIVE_PRICE,
    HV_ERR_INCONSISTENT_QUOTES,
    HV_ERR_TOO_FEW_OBSERVATIONS,
    HV_ERR_SCHEMA_VIOLATION,
    HV_ERR_UNPARSEABLE_TIMESTAMP,
    HV_ERR_NO_ELIGIBLE_AGENTS,
    HV_ERR_IO,
    HV_ERR_INTERNAL = 99
} hv_status;

typedef struct hv_config hv_config;
typedef struct hv_model hv_model;
typedef struct hv_stream hv_stream;

HV_API const char* hv_version(void);
HV_API const char* hv_status_name(hv_status status);
/* Message of the last failure on the calling thread; empty when none. */
HV_API const char* hv_last_error(void);
/* Notes produced by the last command on the calling thread, newline separated. */
HV_API const char* hv_last_notes(void);

HV_API hv_status hv_config_create(hv_config** out);
HV_API void hv_config_destroy(hv_config* config);
HV_API hv_status hv_config_load(hv_config* config, const char* path);
HV_API hv_status hv_config_set(hv_config* config, const char* key, const char* value);
HV_API hv_status hv_config_validate(const hv_config* config);
/* Copies the key reference into buffer (NUL-terminated, truncated to
   capacity) and returns the full length excluding the terminator. */
HV_API size_t hv_config_help(char* buffer, size_t capacity);

HV_API hv_status hv_cmd_simulate(const hv_config* config);
HV_API hv_status hv_cmd_fit(const hv_config* config);
HV_API hv_status hv_cmd_attribute(const hv_config* config);
HV_API hv_status hv_cmd_control(const hv_config* config);
HV_API hv_status hv_cmd_features(const hv_config* config);

HV_API hv_status hv_model_load(const char* path, hv_model** out);
HV_API void hv_model_destroy(hv_model* model);
HV_API size_t hv_model_dim(const hv_model* model);
HV_API hv_status hv_model_spectral_radius(const hv_model* model, double* out);
/* Asymptotic squared volatility, half-ticks^2 per second. */
HV_API hv_status hv_model_sigma2(const hv_model* model, double* out);
/* Mean intensities; `out` must hold hv_model_dim entries. */
HV_API hv_status hv_model_mean_intensities(const hv_model* model, double* out);

HV_API hv_status hv_stream_simulate(const hv_model* model, double horizon, uint64_t seed, hv_stream** out);
HV_API hv_status hv_stream_read(const char* path, double session_open, double session_close, hv_stream** out);
HV_API hv_status hv_stream_write(const hv_stream* stream, const char* path);
HV_API void hv_stream_destroy(hv_stream* stream);
HV_API size_t hv_stream_size(const hv_stream* stream);
HV_API hv_status hv_stream_realized_variance(const hv_stream* stream, double tau, double* out);

/* Dense helpers on row-major n x n arrays. */
HV_API hv_status hv_compute_r(const double* phi, size_t n, double* r_out);
HV_API hv_status hv_spectral_radius(const double* phi, size_t n, double* out);
HV_API hv_status hv_toy_model_sigma2(double mu, double phi_self, double phi_cross, double* out);
HV_API hv_status hv_annualize(double sigma2, double half_tick, double open_price, double* out);

#ifdef __cplusplus
}
#endif

#endif
