#ifndef MANIFOLD_SCATTER_H
#define MANIFOLD_SCATTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the nonzero values match the `mscatter` exit codes.
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  // A panic inside the library was caught at the boundary.
  MS_STATUS_INTERNAL = 1,
  // Bad parameter, incompatible options or a null argument.
  MS_STATUS_USAGE = 2,
  // Malformed or inconsistent input data.
  MS_STATUS_DATA = 3,
  // Numerical failure such as an isolated point.
  MS_STATUS_NUMERICAL = 4,
} MsStatus;

// Pipeline options, mutable through [`ms_config_set`].
typedef struct MsConfig MsConfig;

// `kappa` eigenvalues and an `n x kappa` row-major eigenvector block.
typedef struct MsEigenpairs MsEigenpairs;

// Row-major feature matrix with one label per column.
typedef struct MsFeatures MsFeatures;

typedef struct MsPointCloud MsPointCloud;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or an empty string.
// The pointer stays valid until the next failing call on this thread.
const char *ms_last_error(void);

// Library version as a static NUL-terminated string.
const char *ms_version(void);

// New config with the library defaults.
struct MsConfig *ms_config_new(void);

// # Safety
// `cfg` must be null or a handle from [`ms_config_new`] not yet freed.
void ms_config_free(struct MsConfig *cfg);

// Sets one option by its CLI name without the leading dashes
// (`backend`, `kernel`, `J`, `Q`, `order`, `kappa`, `eps`, `eps-const`,
// `dim`, `knn`, `tau`, `threshold`, `wavelets`).
//
// # Safety
// `cfg` must be a live config handle; `key` and `value` NUL-terminated strings.
enum MsStatus ms_config_set(struct MsConfig *cfg, const char *key, const char *value);

// Checks option combinations that do not depend on the data.
//
// # Safety
// `cfg` must be a live config handle.
enum MsStatus ms_config_validate(const struct MsConfig *cfg);

// Point cloud from `n_points * ambient_dim` row-major coordinates.
// `intrinsic_dim = 0` records the ambient dimension. A `dim` option set on
// the config takes precedence during extraction.
//
// # Safety
// `coords` must point to `n_points * ambient_dim` doubles; `out` must be writable.
enum MsStatus ms_cloud_new(const double *coords,
                           size_t n_points,
                           size_t ambient_dim,
                           size_t intrinsic_dim,
                           struct MsPointCloud **out);

// `n` points drawn uniformly from the unit sphere in R^3.
//
// # Safety
// `out` must be writable.
enum MsStatus ms_sample_sphere(size_t n, uint64_t seed, struct MsPointCloud **out);

// # Safety
// `cloud` must be a live cloud handle.
size_t ms_cloud_len(const struct MsPointCloud *cloud);

// # Safety
// `cloud` must be a live cloud handle.
size_t ms_cloud_ambient_dim(const struct MsPointCloud *cloud);

// Row-major coordinates, `len * ambient_dim` doubles owned by the handle.
//
// # Safety
// `cloud` must be a live cloud handle.
const double *ms_cloud_coords(const struct MsPointCloud *cloud);

// # Safety
// `cloud` must be null or a live cloud handle.
void ms_cloud_free(struct MsPointCloud *cloud);

// Scattering features of `n_signals` signals stored row-major, each with one
// value per point of `cloud`.
//
// # Safety
// `cfg` and `cloud` must be live handles; `signals` must point to
// `n_signals * ms_cloud_len(cloud)` doubles; `out` must be writable.
enum MsStatus ms_extract_features(const struct MsConfig *cfg,
                                  const struct MsPointCloud *cloud,
                                  const double *signals,
                                  size_t n_signals,
                                  struct MsFeatures **out);

// # Safety
// `f` must be a live features handle.
size_t ms_features_rows(const struct MsFeatures *f);

// # Safety
// `f` must be a live features handle.
size_t ms_features_cols(const struct MsFeatures *f);

// Row-major `rows * cols` values owned by the handle.
//
// # Safety
// `f` must be a live features handle.
const double *ms_features_values(const struct MsFeatures *f);

// Label of column `col`, e.g. `S(1,3)q2`, or null when out of range.
//
// # Safety
// `f` must be a live features handle.
const char *ms_features_label(const struct MsFeatures *f, size_t col);

// # Safety
// `f` must be null or a live features handle.
void ms_features_free(struct MsFeatures *f);

// The `kappa` smallest eigenpairs of the graph Laplacian of `cloud`, using
// the kernel, `kappa`, `eps` and `dim` options of `cfg`.
//
// # Safety
// `cfg` and `cloud` must be live handles; `out` must be writable.
enum MsStatus ms_laplacian_eigs(const struct MsConfig *cfg,
                                const struct MsPointCloud *cloud,
                                struct MsEigenpairs **out);

// # Safety
// `e` must be a live eigenpairs handle.
size_t ms_eigs_count(const struct MsEigenpairs *e);

// Number of points, i.e. the length of each eigenvector.
//
// # Safety
// `e` must be a live eigenpairs handle.
size_t ms_eigs_len(const struct MsEigenpairs *e);

// Ascending eigenvalues, `count` doubles owned by the handle.
//
// # Safety
// `e` must be a live eigenpairs handle.
const double *ms_eigs_values(const struct MsEigenpairs *e);

// Row-major `len * count` eigenvector block; column `k` pairs with eigenvalue `k`.
//
// # Safety
// `e` must be a live eigenpairs handle.
const double *ms_eigs_vectors(const struct MsEigenpairs *e);

// # Safety
// `e` must be null or a live eigenpairs handle.
void ms_eigs_free(struct MsEigenpairs *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANIFOLD_SCATTER_H */
