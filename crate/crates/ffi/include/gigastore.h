#ifndef GIGASTORE_H
#define GIGASTORE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_DOMAIN = 3,
  GS_STATUS_OVERFLOW = 4,
  GS_STATUS_CAPACITY_EXCEEDED = 5,
  GS_STATUS_DECODE_FAILED = 6,
  GS_STATUS_BUFFER_TOO_SMALL = 7,
  GS_STATUS_IO = 8,
  GS_STATUS_INTERNAL = 9,
} GsStatus;

typedef enum GsEcLevel {
  GS_EC_LEVEL_L = 0,
  GS_EC_LEVEL_M = 1,
  GS_EC_LEVEL_Q = 2,
  GS_EC_LEVEL_H = 3,
} GsEcLevel;

typedef enum GsReadMode {
  GS_READ_MODE_MONOCHROMATIC = 0,
  GS_READ_MODE_WHITELIGHT = 1,
} GsReadMode;

/**
 * Disk layout together with its rendered mask and manifest.
 */
typedef struct GsDisk GsDisk;

/**
 * Encoded QR symbol.
 */
typedef struct GsQrSymbol GsQrSymbol;

/**
 * Disk geometry. `gs_layout_default_params` fills in the defaults. Levels
 * hold `GsEcLevel` values.
 */
typedef struct GsLayoutParams {
  uint8_t outer_version;
  uint32_t outer_level;
  uint8_t inner_version;
  uint32_t inner_level;
  /**
   * Mask pixel size in metres.
   */
  double pitch_m;
  /**
   * Blank border in outer modules.
   */
  size_t quiet_zone;
} GsLayoutParams;

typedef struct GsReadSummary {
  size_t total_inner;
  size_t decoded;
  size_t decoded_after_repair;
  double alpha_observed;
  bool passed;
} GsReadSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code.
 */
const char *gs_status_name(enum GsStatus status);

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next gs_* call on this thread.
 */
const char *gs_last_error_message(void);

/**
 * Barrier in units of k_B·T needed to keep `alpha` of the bits for
 * `storage_seconds`.
 *
 * # Safety
 * `out_kt` must be a valid pointer to a double.
 */
enum GsStatus gs_required_barrier(double storage_seconds, double alpha, double f0, double *out_kt);

/**
 * Oven temperature for a test of `test_hours` that proves `storage_years` at
 * `storage_temp_k`.
 *
 * # Safety
 * `out_k` must be a valid pointer to a double.
 */
enum GsStatus gs_test_temperature(double storage_years,
                                  double test_hours,
                                  double alpha,
                                  double alpha_test,
                                  double f0,
                                  double storage_temp_k,
                                  double *out_k);

/**
 * Storage time in years proven by surviving `test_hours` at `test_temp_k`.
 *
 * # Safety
 * `out_years` must be a valid pointer to a double.
 */
enum GsStatus gs_equivalent_storage_years(double test_temp_k,
                                          double test_hours,
                                          double alpha_test,
                                          double storage_temp_k,
                                          double alpha,
                                          double f0,
                                          double *out_years);

/**
 * Probability that a bit with `barrier_ev` switches within `seconds` at
 * `temp_k`.
 *
 * # Safety
 * `out_p` must be a valid pointer to a double.
 */
enum GsStatus gs_switching_probability(double f0,
                                       double barrier_ev,
                                       double temp_k,
                                       double seconds,
                                       double *out_p);

/**
 * Reflectance of the bare and tungsten regions of the Si / Si3N4 / W /
 * Si3N4 medium and their difference, using the bundled index table. Any
 * output pointer may be null.
 *
 * # Safety
 * Non-null output pointers must be valid pointers to doubles.
 */
enum GsStatus gs_medium_contrast(double top_nm,
                                 double bottom_nm,
                                 double tungsten_nm,
                                 double wavelength_nm,
                                 double *out_contrast,
                                 double *out_bare,
                                 double *out_metal);

/**
 * Encodes `len` bytes as a byte-mode QR symbol; `level` is a `GsEcLevel`.
 *
 * # Safety
 * `data` must point to `len` readable bytes (may be null when `len` is 0);
 * `out` must be a valid pointer.
 */
enum GsStatus gs_qr_encode(const uint8_t *data,
                           size_t len,
                           uint8_t version_number,
                           uint32_t level,
                           struct GsQrSymbol **out);

/**
 * Side length in modules, or 0 for a null handle.
 *
 * # Safety
 * `symbol` must be null or a live handle from `gs_qr_encode`.
 */
size_t gs_qr_side(const struct GsQrSymbol *symbol);

/**
 * Mask pattern chosen by the encoder, or -1 for a null handle.
 *
 * # Safety
 * `symbol` must be null or a live handle from `gs_qr_encode`.
 */
int32_t gs_qr_mask(const struct GsQrSymbol *symbol);

/**
 * Copies the modules row-major into `buf` (1 = dark, 0 = light). `len` must
 * be at least side².
 *
 * # Safety
 * `symbol` must be a live handle; `buf` must point to `len` writable bytes.
 */
enum GsStatus gs_qr_copy_modules(const struct GsQrSymbol *symbol, uint8_t *buf, size_t len);

/**
 * Releases a symbol. Null is ignored.
 *
 * # Safety
 * `symbol` must be null or a handle not yet freed.
 */
void gs_qr_free(struct GsQrSymbol *symbol);

/**
 * Decodes a row-major module matrix (non-zero = dark). `erasures` is an
 * optional matrix of the same shape flagging unreliable modules. The payload
 * is written to `out_buf`; `out_len` receives its length, also when the
 * buffer is too small. `out_corrected` may be null.
 *
 * # Safety
 * `modules` (and `erasures` if non-null) must point to side² bytes; `out_buf`
 * must point to `cap` writable bytes; `out_len` must be valid.
 */
enum GsStatus gs_qr_decode(const uint8_t *modules,
                           size_t side,
                           const uint8_t *erasures,
                           uint8_t *out_buf,
                           size_t cap,
                           size_t *out_len,
                           size_t *out_corrected);

/**
 * Fills `out` with the default disk geometry.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GsStatus gs_layout_default_params(struct GsLayoutParams *out);

/**
 * Builds a disk: the outer symbol carries `outer`, every dark outer module
 * carries one of the `n_docs` documents. `params` may be null for defaults.
 *
 * # Safety
 * `outer` must point to `outer_len` bytes; `docs` and `doc_lens` must point
 * to `n_docs` entries each, and `docs[i]` to `doc_lens[i]` bytes; `out` must
 * be valid.
 */
enum GsStatus gs_disk_build(const uint8_t *outer,
                            size_t outer_len,
                            const uint8_t *const *docs,
                            const size_t *doc_lens,
                            size_t n_docs,
                            const struct GsLayoutParams *params,
                            struct GsDisk **out);

/**
 * Mask side length in pixels, or 0 for a null handle.
 *
 * # Safety
 * `disk` must be null or a live handle.
 */
size_t gs_disk_side(const struct GsDisk *disk);

/**
 * Number of inner symbols on the disk, or 0 for a null handle.
 *
 * # Safety
 * `disk` must be null or a live handle.
 */
size_t gs_disk_inner_count(const struct GsDisk *disk);

/**
 * Copies the mask row-major (1 = tungsten). `len` must be at least side².
 *
 * # Safety
 * `disk` must be a live handle; `buf` must point to `len` writable bytes.
 */
enum GsStatus gs_disk_copy_mask(const struct GsDisk *disk, uint8_t *buf, size_t len);

/**
 * Writes the mask as a binary PBM file.
 *
 * # Safety
 * `disk` must be a live handle; `path` must be a NUL-terminated string.
 */
enum GsStatus gs_disk_write_pbm(const struct GsDisk *disk, const char *path);

/**
 * Manifest JSON as a newly allocated string, released with
 * `gs_string_free`. Null for a null handle.
 *
 * # Safety
 * `disk` must be null or a live handle.
 */
char *gs_disk_manifest_json(const struct GsDisk *disk);

/**
 * Ages the disk for `hours` at `temp_k` with the default damage model and
 * reads it back through the default medium; `mode` is a `GsReadMode`.
 *
 * # Safety
 * `disk` must be a live handle; `out` must be a valid pointer.
 */
enum GsStatus gs_disk_age_and_read(const struct GsDisk *disk,
                                   double temp_k,
                                   double hours,
                                   uint64_t seed,
                                   uint32_t mode,
                                   bool repair_finders,
                                   struct GsReadSummary *out);

/**
 * Releases a disk. Null is ignored.
 *
 * # Safety
 * `disk` must be null or a handle not yet freed.
 */
void gs_disk_free(struct GsDisk *disk);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void gs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIGASTORE_H */
