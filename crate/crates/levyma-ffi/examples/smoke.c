/* Minimal C consumer of the levyma ABI.
 *
 * Build (from the workspace root, after `cargo build --release -p levyma-ffi`):
 *   cc crates/levyma-ffi/examples/smoke.c \
 *      -Icrates/levyma-ffi/include \
 *      target/release/liblevyma_ffi.a -lpthread -ldl -lm -o smoke
 */

#include <levyma.h>
#include <stdio.h>
#include <stdlib.h>

#define CHECK(expr)                                                          \
  do {                                                                       \
    levyma_status st = (expr);                                               \
    if (st != LEVYMA_STATUS_OK) {                                            \
      fprintf(stderr, "%s failed: %s\n", #expr, levyma_status_message(st));  \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  printf("levyma ABI version %u\n", levyma_version());

  LevymaKernel *kernel = NULL;
  CHECK(levyma_kernel_new(0, 1.0, false, &kernel));
  printf("||K||_1 = %.12f\n", levyma_kernel_l1_norm(kernel));

  LevymaPath *path = NULL;
  CHECK(levyma_simulate(kernel, 1.0, 0.0, 0.0, 1.0, 20000, 0.01, 7, &path));
  size_t n = levyma_path_len(path);

  double *obs = malloc(n * sizeof(double));
  CHECK(levyma_path_copy_observations(path, obs, n));
  double mean = 0.0;
  for (size_t i = 0; i < n; i++) mean += obs[i];
  mean /= (double)n;
  printf("n = %zu, mean(Z) = %.4f (stationary value 2)\n", n, mean);
  free(obs);

  double xs[256];
  for (int i = 0; i < 256; i++) xs[i] = 1.0 + i * (2.0 / 255.0);
  LevymaDensity *density = NULL;
  CHECK(levyma_estimate(path, kernel, LEVYMA_VARIANT_FIRST_STABILIZED, 0.5,
                        0.3, 1.3, 0, 0.0, false, 20.0, false, 0.0, xs, 256,
                        &density));
  double grid[256], values[256];
  CHECK(levyma_density_copy(density, grid, values, 256));
  printf("nu_hat(1) = %.4f, nu_hat(3) = %.4f (truth e^-1 = 0.3679, e^-3 = 0.0498)\n",
         values[0], values[255]);

  levyma_density_free(density);
  levyma_path_free(path);
  levyma_kernel_free(kernel);
  return 0;
}
