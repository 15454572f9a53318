#ifndef WMTR_H
#define WMTR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Non-negative values below `WMTR_ERR_NULL` are verdicts.
 */
typedef enum WmtrCode {
  WMTR_OK = 0,
  WMTR_REFUTED = 1,
  WMTR_ERR_NULL = 2,
  WMTR_ERR_UTF8 = 3,
  WMTR_ERR_PARSE = 4,
  WMTR_ERR_INTERFACE = 5,
  WMTR_ERR_CONFIG = 6,
  WMTR_ERR_PROGRAM = 7,
  WMTR_ERR_PANIC = 8,
} WmtrCode;

typedef enum WmtrModel {
  WMTR_SC = 0,
  WMTR_TSO = 1,
  WMTR_RELAXED = 2,
} WmtrModel;

/**
 * A parsed client program.
 */
typedef struct WmtrClient WmtrClient;

/**
 * A parsed object, specification or implementation.
 */
typedef struct WmtrObject WmtrObject;

/**
 * The outcome of a refinement check.
 */
typedef struct WmtrVerdict WmtrVerdict;

/**
 * Exploration bounds. Obtain defaults from [`wmtr_config_default`].
 */
typedef struct WmtrConfig {
  /**
   * One of the `WmtrModel` values.
   */
  uint32_t model;
  uint32_t unroll;
  uint32_t buffer;
  /**
   * Largest value of the domain 0..values.
   */
  int64_t values;
  uint32_t workers;
} WmtrConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *wmtr_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * failing call on the same thread.
 */
const char *wmtr_last_error(void);

/**
 * Default bounds: SC, unroll 2, buffer 4, values 0..3, one worker.
 */
struct WmtrConfig wmtr_config_default(void);

/**
 * Parses a client program from NUL-terminated source text.
 *
 * # Safety
 * `src` must be NULL or a valid C string; `out` must be NULL or writable.
 */
enum WmtrCode wmtr_client_parse(const char *src, struct WmtrClient **out);

/**
 * Parses an object (specification or implementation).
 *
 * # Safety
 * As for [`wmtr_client_parse`].
 */
enum WmtrCode wmtr_object_parse(const char *src, struct WmtrObject **out);

/**
 * Counts the traces of `client` running with `object`.
 *
 * # Safety
 * Handles must be NULL or live handles from this library; `config` may be
 * NULL for defaults; `out` must be NULL or writable.
 */
enum WmtrCode wmtr_explore_count(const struct WmtrClient *client,
                                 const struct WmtrObject *object,
                                 const struct WmtrConfig *config,
                                 size_t *out);

/**
 * Checks whether `imp` refines `spec` for `client` within the bounds. On
 * success `*out` receives a verdict handle and the result is `WmtrOk` or
 * `WmtrRefuted`.
 *
 * # Safety
 * As for [`wmtr_explore_count`].
 */
enum WmtrCode wmtr_check(const struct WmtrClient *client,
                         const struct WmtrObject *spec,
                         const struct WmtrObject *imp,
                         const struct WmtrConfig *config,
                         struct WmtrVerdict **out);

/**
 * `WmtrRefuted` or `WmtrOk` for a verdict, `WmtrErrNull` for NULL.
 *
 * # Safety
 * `v` must be NULL or a live verdict handle.
 */
enum WmtrCode wmtr_verdict_status(const struct WmtrVerdict *v);

/**
 * Number of events in the counterexample, 0 if there is none.
 *
 * # Safety
 * `v` must be NULL or a live verdict handle.
 */
size_t wmtr_verdict_counterexample_len(const struct WmtrVerdict *v);

/**
 * The verdict's report, as text (`json` = 0) or JSON (`json` != 0). Free
 * with [`wmtr_string_free`].
 *
 * # Safety
 * `v` must be NULL or a live verdict handle.
 */
char *wmtr_verdict_report(const struct WmtrVerdict *v, int32_t json);

/**
 * The refuting observable behaviour, e.g. `⟨(T1, y, 1), (T2, y, 1)⟩`, or NULL
 * if the verdict holds. Free with [`wmtr_string_free`].
 *
 * # Safety
 * `v` must be NULL or a live verdict handle.
 */
char *wmtr_verdict_observable(const struct WmtrVerdict *v);

/**
 * # Safety
 * `p` must be NULL or a handle from [`wmtr_client_parse`], freed once.
 */
void wmtr_client_free(struct WmtrClient *p);

/**
 * # Safety
 * `o` must be NULL or a handle from [`wmtr_object_parse`], freed once.
 */
void wmtr_object_free(struct WmtrObject *o);

/**
 * # Safety
 * `v` must be NULL or a handle from [`wmtr_check`], freed once.
 */
void wmtr_verdict_free(struct WmtrVerdict *v);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void wmtr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMTR_H */
