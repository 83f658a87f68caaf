/* C interface to the alpha-determinantal point process laboratory.
 *
 * All objects are opaque handles. Every fallible call returns a dppp_status;
 * on failure dppp_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * dppp_string_free.
 *
 * Alpha values are passed as rational strings such as "-1/2", "1", "2/3", "0".
 */
#ifndef DPPP_DPPP_H
#define DPPP_DPPP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DPPP_API __declspec(dllexport)
#elif defined(__GNUC__)
#define DPPP_API __attribute__((visibility("default")))
#else
#define DPPP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dppp_status {
  DPPP_OK = 0,
  DPPP_ERR_INVALID_ARGUMENT = 1,
  DPPP_ERR_SPECTRUM_VIOLATION = 2,
  DPPP_ERR_ASYMMETRY = 3,
  DPPP_ERR_SERIES_DIVERGENCE = 4,
  DPPP_ERR_NEGATIVE_WEIGHT = 5,
  DPPP_ERR_NOT_INVERTIBLE = 6,
  DPPP_ERR_SIZE_LIMIT = 7,
  DPPP_ERR_UNSUPPORTED_ALPHA = 8,
  DPPP_ERR_ZERO_DENOMINATOR = 9,
  DPPP_ERR_NORM_VIOLATION = 10,
  DPPP_ERR_DEGENERATE_CONFIGURATION = 11,
  DPPP_ERR_DEGENERATE_DENOMINATOR = 12,
  DPPP_ERR_ZERO_DENSITY = 13,
  DPPP_ERR_STEP_TOO_LARGE = 14,
  DPPP_ERR_CONFIG = 15,
  DPPP_ERR_INTERNAL = 100
} dppp_status;

typedef enum dppp_fredholm_method { DPPP_FREDHOLM_EIGEN = 0, DPPP_FREDHOLM_TRACE_SERIES = 1 } dppp_fredholm_method;

typedef struct dppp_kernel dppp_kernel;

typedef struct dppp_verify_options {
  int has_seed;
  uint64_t seed;
  size_t samples; /* 0 keeps the config value */
  int parallel;
  const char* const* checks; /* names to run; NULL or empty runs all */
  size_t check_count;
} dppp_verify_options;

DPPP_API const char* dppp_version(void);
DPPP_API const char* dppp_status_name(dppp_status status);
DPPP_API const char* dppp_last_error(void);
DPPP_API void dppp_string_free(char* s);

/* 64-bit FNV-1a of the bytes, as 16 lowercase hex digits plus NUL. */
DPPP_API void dppp_digest(const char* data, size_t length, char out[17]);

/* Kernel config JSON {type, parameters, target_max_eigenvalue, space};
 * explicit CSV paths resolve against base_dir (may be NULL). */
DPPP_API dppp_status dppp_kernel_from_config(const char* json, const char* base_dir, dppp_kernel** out);
DPPP_API dppp_status dppp_kernel_from_config_file(const char* path, dppp_kernel** out);
/* Row-major n x n matrix of node values; weights may be NULL (all 1). */
DPPP_API dppp_status dppp_kernel_from_matrix(const double* raw, size_t n, const double* weights, dppp_kernel** out);
DPPP_API void dppp_kernel_free(dppp_kernel* k);

DPPP_API size_t dppp_kernel_size(const dppp_kernel* k);
/* Each array has dppp_kernel_size(k) entries; eigenvalues ascending. */
DPPP_API dppp_status dppp_kernel_eigenvalues(const dppp_kernel* k, double* out, size_t n);
DPPP_API dppp_status dppp_kernel_nodes(const dppp_kernel* k, double* out, size_t n);
DPPP_API dppp_status dppp_kernel_masses(const dppp_kernel* k, double* out, size_t n);
/* Values at the nodes of a profile JSON such as {"type":"bump","center":0.5,"radius":0.3}. */
DPPP_API dppp_status dppp_profile_values(const dppp_kernel* k, const char* profile_json, double* out, size_t n);

/* Det(I + alpha K~). */
DPPP_API dppp_status dppp_fredholm_det(const dppp_kernel* k, const char* alpha, dppp_fredholm_method method,
                                       double* out);
/* E[exp(-sum f(x))] with f given at the nodes; alpha = "0" gives the Poisson limit. */
DPPP_API dppp_status dppp_laplace(const dppp_kernel* k, const char* alpha, const double* f, size_t n, double* out);
DPPP_API dppp_status dppp_poisson_limit(const dppp_kernel* k, const double* f, size_t n, double* out);
/* Janossy density and probability of the node multiset (indices may repeat). */
DPPP_API dppp_status dppp_janossy(const dppp_kernel* k, const char* alpha, const size_t* points, size_t count,
                                  double* density, double* probability);
DPPP_API dppp_status dppp_correlation(const dppp_kernel* k, const char* alpha, const size_t* points, size_t count,
                                      double* out);

/* Row-major n x n matrices. */
DPPP_API dppp_status dppp_alpha_determinant(const double* a, size_t n, double alpha, double* out);
DPPP_API dppp_status dppp_permanent(const double* a, size_t n, double* out);

/* R(eta, omega) for the law with kernel K and alpha = -1/s (layers of kernel K/s),
 * as a JSON array [{"eta": [..], "weight": w}, ...]. */
DPPP_API dppp_status dppp_thinning_weights_json(const dppp_kernel* k, const size_t* omega, size_t count, int s,
                                                char** out_json);

/* count configurations, replica i drawn from stream i of the seed; CSV rows
 * "replica,node_indices,multiplicities" with ';' inside the list fields. */
DPPP_API dppp_status dppp_sample_csv(const dppp_kernel* k, const char* alpha, size_t count, uint64_t seed,
                                     char** out_csv);

/* Runs the verification suite; writes {version, config_digest, reports} and the
 * exit code (0 all passed, 1 a check failed). */
DPPP_API dppp_status dppp_verify_run_json(const char* config_path, const dppp_verify_options* options,
                                          char** out_json, int* exit_code);
/* Same, also writing one CSV per series-bearing report into plot_dir. */
DPPP_API dppp_status dppp_verify_run(const char* config_path, const dppp_verify_options* options,
                                     const char* plot_dir, char** out_json, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
