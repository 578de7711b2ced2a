/* C API for levyma: moving-average Lévy process simulation and
 * Mellin-deconvolution density estimation.
 *
 * All heap objects are opaque handles created through out-pointers and
 * released with the matching *_free function. Every fallible call returns a
 * levyma_status; levyma_status_message gives a static description.
 */

#ifndef LEVYMA_H
#define LEVYMA_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum levyma_status {
  LEVYMA_STATUS_OK = 0,
  LEVYMA_STATUS_NULL_POINTER = 1,
  LEVYMA_STATUS_INVALID_ARGUMENT = 2,
  LEVYMA_STATUS_NUMERICAL_ERROR = 3,
  LEVYMA_STATUS_PANIC = 4,
} levyma_status;

/* Estimator variants for levyma_estimate. */
#define LEVYMA_VARIANT_SECOND 0u
#define LEVYMA_VARIANT_FIRST 1u
#define LEVYMA_VARIANT_FIRST_STABILIZED 2u

typedef struct LevymaKernel LevymaKernel;
typedef struct LevymaPath LevymaPath;
typedef struct LevymaDensity LevymaDensity;

/* ABI version as major*10000 + minor*100 + patch. */
uint32_t levyma_version(void);

const char *levyma_status_message(levyma_status status);

/* Gamma-exponential kernel K(x) = |x|^r e^{-rho|x|}; one_sided restricts the
 * support to x >= 0. */
levyma_status levyma_kernel_new(uint32_t r, double rho, bool one_sided,
                                LevymaKernel **out);
void levyma_kernel_free(LevymaKernel *kernel);
double levyma_kernel_l1_norm(const LevymaKernel *kernel);

/* Simulate n equidistant observations (spacing delta) of
 * Z_t = int K(t-s) dL_s driven by a compound Poisson process with intensity
 * lambda and standard-exponential jump sizes, plus an optional Gaussian
 * component sigma2 and drift. Jump series are truncated where K < alpha. */
levyma_status levyma_simulate(const LevymaKernel *kernel, double lambda,
                              double sigma2, double drift, double delta,
                              size_t n, double alpha, uint64_t seed,
                              LevymaPath **out);

/* Wrap externally produced equidistant observations. */
levyma_status levyma_path_from_observations(double delta, const double *data,
                                            size_t len, LevymaPath **out);

size_t levyma_path_len(const LevymaPath *path);
levyma_status levyma_path_copy_observations(const LevymaPath *path,
                                            double *buf, size_t len);
void levyma_path_free(LevymaPath *path);

/* Full pipeline: empirical characteristic function -> forward Mellin
 * transform (variant-dependent) -> regularized inverse Mellin on the grid
 * xs[0..n_x). k_points == 0 selects the default ceil(200*v_max). With
 * estimate_sigma2 set, sigma2 is ignored and estimated at scale sigma2_u.
 * With lambda_known set, lambda replaces the plug-in intensity in the
 * stabilized completion term. */
levyma_status levyma_estimate(const LevymaPath *path,
                              const LevymaKernel *kernel, uint32_t variant,
                              double c, double u_max, double v_max,
                              size_t k_points, double sigma2,
                              bool estimate_sigma2, double sigma2_u,
                              bool lambda_known, double lambda,
                              const double *xs, size_t n_x,
                              LevymaDensity **out);

size_t levyma_density_len(const LevymaDensity *density);
levyma_status levyma_density_copy(const LevymaDensity *density, double *xs,
                                  double *values, size_t len);
void levyma_density_free(LevymaDensity *density);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LEVYMA_H */
