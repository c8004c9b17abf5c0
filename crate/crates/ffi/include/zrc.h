#ifndef ZRC_H
#define ZRC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZrcAbxMode {
  ZRC_ABX_MODE_WITHIN = 0,
  ZRC_ABX_MODE_ACROSS = 1,
} ZrcAbxMode;

typedef enum ZrcDissim {
  ZRC_DISSIM_ANGULAR = 0,
  ZRC_DISSIM_SYMMETRIC_KL = 1,
} ZrcDissim;

typedef enum ZrcNorm {
  ZRC_NORM_PATH_LENGTH = 0,
  ZRC_NORM_MAX_LENGTH = 1,
} ZrcNorm;

typedef enum ZrcStatus {
  ZRC_STATUS_OK = 0,
  ZRC_STATUS_NULL_POINTER = 1,
  ZRC_STATUS_INVALID_UTF8 = 2,
  ZRC_STATUS_IO = 3,
  ZRC_STATUS_PARSE = 4,
  ZRC_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The inputs leave the metric undefined (no cells, no pairs, ...).
   */
  ZRC_STATUS_UNDEFINED = 6,
  ZRC_STATUS_PANIC = 7,
} ZrcStatus;

/**
 * A loaded gold corpus.
 */
typedef struct ZrcCorpus ZrcCorpus;

typedef struct ZrcAbxScore {
  double error_rate;
  uint64_t cells;
  uint64_t skipped_cells;
  uint64_t dropped_items;
} ZrcAbxScore;

typedef struct ZrcPrf {
  double precision;
  double recall;
  double fscore;
} ZrcPrf;

typedef struct ZrcTdeScore {
  double ned;
  double coverage;
  struct ZrcPrf grouping;
  struct ZrcPrf type_;
  struct ZrcPrf token;
  struct ZrcPrf boundary;
} ZrcTdeScore;

typedef struct ZrcBitrate {
  double bits_per_second;
  double entropy;
  uint64_t tokens;
  uint64_t types;
} ZrcBitrate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a
 * successful one. The pointer stays valid until the next call into the
 * library on the same thread.
 */
const char *zrc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *zrc_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void zrc_string_free(char *s);

/**
 * Loads a corpus directory into `*out`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ZrcStatus zrc_corpus_load(const char *dir, struct ZrcCorpus **out);

/**
 * # Safety
 * `corpus` must be NULL or a handle from [`zrc_corpus_load`], not yet
 * freed.
 */
void zrc_corpus_free(struct ZrcCorpus *corpus);

/**
 * Number of utterances, 0 for a NULL handle.
 *
 * # Safety
 * `corpus` must be NULL or a live handle.
 */
size_t zrc_corpus_utterances(const struct ZrcCorpus *corpus);

/**
 * Number of triphone ABX items, 0 for a NULL handle.
 *
 * # Safety
 * `corpus` must be NULL or a live handle.
 */
size_t zrc_corpus_items(const struct ZrcCorpus *corpus);

/**
 * ABX error rate of the features in `features_dir` (one `<utt>.txt` per
 * utterance).
 *
 * # Safety
 * `corpus` must be a live handle, `features_dir` a NUL-terminated string
 * and `out` a writable pointer.
 */
enum ZrcStatus zrc_abx_run(const struct ZrcCorpus *corpus,
                           const char *features_dir,
                           enum ZrcAbxMode mode,
                           enum ZrcDissim dissim,
                           enum ZrcNorm norm,
                           struct ZrcAbxScore *out);

/**
 * Term discovery scores of a class file.
 *
 * # Safety
 * `corpus` must be a live handle, `class_file` a NUL-terminated string
 * and `out` a writable pointer.
 */
enum ZrcStatus zrc_tde_run(const struct ZrcCorpus *corpus,
                           const char *class_file,
                           struct ZrcTdeScore *out);

/**
 * Bitrate of one stream of integer unit ids spanning `duration` seconds.
 *
 * # Safety
 * `units` must point to `len` readable values and `out` be writable.
 */
enum ZrcStatus zrc_bitrate(const uint32_t *units,
                           size_t len,
                           double duration,
                           struct ZrcBitrate *out);

/**
 * Share of pairs with `legal[i] > illegal[i]`, ties counting one half.
 *
 * # Safety
 * Both arrays must hold `len` values and `out` be writable.
 */
enum ZrcStatus zrc_contrastive_accuracy(const double *legal,
                                        const double *illegal,
                                        size_t len,
                                        double *out);

/**
 * Spearman rank correlation, average ranks for ties.
 *
 * # Safety
 * Both arrays must hold `len` values and `out` be writable.
 */
enum ZrcStatus zrc_spearman(const double *xs, const double *ys, size_t len, double *out);

/**
 * Angular dissimilarity of two `dim`-vectors, in [0, 1].
 *
 * # Safety
 * Both arrays must hold `dim` values and `out` be writable.
 */
enum ZrcStatus zrc_angular(const double *u, const double *v, size_t dim, double *out);

/**
 * DTW-averaged dissimilarity of two row-major frame matrices.
 *
 * # Safety
 * `a` must hold `a_rows * dim` values, `b` `b_rows * dim`, and `out` be
 * writable.
 */
enum ZrcStatus zrc_dtw(const double *a,
                       size_t a_rows,
                       const double *b,
                       size_t b_rows,
                       size_t dim,
                       enum ZrcDissim dissim,
                       enum ZrcNorm norm,
                       double *out);

/**
 * Scores a submission directory against a corpus directory and writes
 * the JSON report to `*out_json` (free with [`zrc_string_free`]).
 *
 * # Safety
 * `corpus_dir` and `submission_dir` must be NUL-terminated strings and
 * `out_json` a writable pointer.
 */
enum ZrcStatus zrc_evaluate_all(const char *corpus_dir,
                                const char *submission_dir,
                                enum ZrcDissim dissim,
                                bool percent,
                                char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZRC_H */
