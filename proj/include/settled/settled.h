#ifndef SETTLED_SETTLED_H
#define SETTLED_SETTLED_H

/*
 * C interface to the settled-elements library: exact cycle structure,
 * stable-vertex counts, block analysis, density approximation, and the
 * checking harness for self-similar binary-tree automorphisms.
 *
 * Conventions:
 *  - Every function returns a settled_status; 0 (SETTLED_OK) means success.
 *  - On failure the thread-local message from settled_last_error() describes
 *    the problem; it stays valid until the next failing call on that thread.
 *  - Output parameters are written only on success and set to NULL (or left
 *    untouched, for scalars) on failure.
 *  - Every char* produced by the library is heap-allocated and must be
 *    released with settled_string_free().
 *  - Handles are not thread-safe; share a settled_system between threads
 *    only with external locking.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum settled_status {
  SETTLED_OK = 0,
  SETTLED_ERR_PARSE = 1,     /* bad expression, literal, or serialized form */
  SETTLED_ERR_PRECISION = 2, /* fact not resolvable at the carried precision */
  SETTLED_ERR_DOMAIN = 3,    /* argument outside the mathematical domain */
  SETTLED_ERR_DEPTH = 4,     /* depth/level cap exceeded or inconsistent */
  SETTLED_ERR_INTERNAL = 5,  /* broken library invariant; always a bug */
  SETTLED_ERR_ARGUMENT = 6   /* null pointer or invalid enum from the caller */
} settled_status;

typedef enum settled_format {
  SETTLED_FORMAT_JSON = 0,
  SETTLED_FORMAT_CSV = 1
} settled_format;

/* A system fixes the generator-family rank and the 2-adic working precision,
 * and owns the caches that make repeated queries cheap. */
typedef struct settled_system settled_system;

/* An element expression parsed into letter form. */
typedef struct settled_word settled_word;

/* Library version, e.g. "1.0.0".  Static storage; do not free. */
const char* settled_version(void);

/* Message of the most recent failure on this thread.  Static until the next
 * failing call; never NULL; do not free. */
const char* settled_last_error(void);

/* Releases a string returned through any char** output. */
void settled_string_free(char* text);

/* rank in [2, 8]; precision: bits carried for 2-adic data, >= 1. */
settled_status settled_system_new(int rank, int precision,
                                  settled_system** out);
void settled_system_free(settled_system* sys);
settled_status settled_system_rank(const settled_system* sys, int* out);
settled_status settled_system_precision(const settled_system* sys, int* out);

/* Parses the element grammar: products of a<i>, g, z[<odd label>], powers,
 * parentheses, 'id'.  The root-swap atom 's' is rejected here; it is only
 * meaningful in settled_eval_render's portrait context. */
settled_status settled_word_parse(settled_system* sys, const char* text,
                                  settled_word** out);
void settled_word_free(settled_word* word);

/* The word as written (letters in order). */
settled_status settled_word_str(const settled_word* word, char** out);
/* Canonical key of the normalized word; equal keys mean equal words. */
settled_status settled_word_key(const settled_word* word, char** out);
/* Sign of the word's action at one level (+1 or -1); level >= 1. */
settled_status settled_word_sign(settled_system* sys,
                                 const settled_word* word, int level,
                                 int* out);

/* Evaluates an expression as an explicit depth-limited portrait and renders
 * it.  Accepts the full element grammar plus the root swap atom 's'. */
settled_status settled_eval_render(settled_system* sys, const char* expr,
                                   int depth, settled_format format,
                                   char** out);

/* Stable-vertex profile: levels 1..max_level with exact counts and ratios. */
settled_status settled_profile_render(settled_system* sys,
                                      const settled_word* word, int max_level,
                                      settled_format format, char** out);

/* Full cycle decomposition at every level 1..max_level, each cycle with its
 * first-return word and stability status. */
settled_status settled_cycles_render(settled_system* sys,
                                     const settled_word* word, int max_level,
                                     settled_format format, char** out);

/* Descendant levels 0..depth with settled-family verdicts and coset labels. */
settled_status settled_descendants_render(settled_system* sys,
                                          const settled_word* word, int depth,
                                          settled_format format, char** out);

/* Descendant levels plus per-element block verdicts, the non-family chain,
 * its top-sign sequence, and the overall stable-block verdict. */
settled_status settled_blocks_render(settled_system* sys,
                                     const settled_word* word, int depth,
                                     settled_format format, char** out);

/* Finite-family approximation: alpha = g0 * z[k0] agreeing with the word on
 * the whole tree down to `level` (level in [1, 8]). */
settled_status settled_approx_render(settled_system* sys,
                                     const settled_word* word, int level,
                                     settled_format format, char** out);

/* Newline-separated names of the harness suites, in canonical order. */
settled_status settled_verify_suites(char** out);

/* Runs the checking harness and renders its JSON report (byte-identical for
 * identical inputs).
 *  - max_level: caps every grid level/depth knob; 0 keeps the grid's caps.
 *  - grid_json: optional grid override, NULL or "" for the built-in grid.
 *  - suite: one suite name, NULL or "" for all suites.
 *  - failures_out: optional; receives the failing-case count. */
settled_status settled_verify_render(int rank, int max_level, uint64_t seed,
                                     int precision, const char* grid_json,
                                     const char* suite, int* failures_out,
                                     char** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SETTLED_SETTLED_H */
