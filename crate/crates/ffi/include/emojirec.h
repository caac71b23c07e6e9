#ifndef EMOJIREC_H
#define EMOJIREC_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmojirecStatus {
  EMOJIREC_STATUS_OK = 0,
  EMOJIREC_STATUS_NULL_POINTER = 1,
  EMOJIREC_STATUS_INVALID_UTF8 = 2,
  EMOJIREC_STATUS_IO = 3,
  EMOJIREC_STATUS_INVALID_INPUT = 4,
  EMOJIREC_STATUS_EMPTY_QUERY = 5,
  EMOJIREC_STATUS_NO_CANDIDATES = 6,
  EMOJIREC_STATUS_INVALID_K = 7,
  EMOJIREC_STATUS_UNDEFINED = 8,
  EMOJIREC_STATUS_PANIC = 9,
} EmojirecStatus;

/**
 * Opaque engine handle.
 */
typedef struct EmojirecEngine EmojirecEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads word embeddings and an inventory and creates an engine.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be a valid pointer.
 */
enum EmojirecStatus emojirec_engine_open(const char *embeddings_path,
                                         const char *inventory_path,
                                         struct EmojirecEngine **out);

/**
 * # Safety
 * `engine` must come from [`emojirec_engine_open`] and not be used afterwards.
 */
void emojirec_engine_free(struct EmojirecEngine *engine);

/**
 * Embedding dimension, or 0 for a null handle.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
size_t emojirec_engine_dimension(const struct EmojirecEngine *engine);

/**
 * Ranks emojis for one query given as JSON (`{"classes": [...], "caption": "..."}`).
 *
 * `strategy` is one of names, senses, definitions, processed_definitions;
 * `mode` is v or vt. On success `*out` holds a JSON object with the fields
 * id, mode, degraded and ranking.
 *
 * # Safety
 * Strings must be NUL-terminated; `engine` and `out` must be valid.
 */
enum EmojirecStatus emojirec_recommend_json(const struct EmojirecEngine *engine,
                                            const char *query_json,
                                            const char *strategy,
                                            const char *mode,
                                            size_t k,
                                            char **out);

/**
 * Cosine similarity of two vectors of length `len`. Returns
 * `Undefined` when either vector has zero norm.
 *
 * # Safety
 * `a` and `b` must point to `len` doubles; `out` must be valid.
 */
enum EmojirecStatus emojirec_cosine(const double *a, const double *b, size_t len, double *out);

/**
 * Cohen's kappa between two label arrays of length `len`.
 *
 * # Safety
 * `a` and `b` must point to `len` NUL-terminated strings; `out` must be valid.
 */
enum EmojirecStatus emojirec_cohen_kappa(const char *const *a,
                                         const char *const *b,
                                         size_t len,
                                         double *out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void emojirec_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call on the same thread.
 */
const char *emojirec_last_error(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* EMOJIREC_H */
