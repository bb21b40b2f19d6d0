#ifndef QASIM_H
#define QASIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QasimStatus {
  QASIM_STATUS_OK = 0,
  QASIM_STATUS_NULL_POINTER = 1,
  QASIM_STATUS_INVALID_ARGUMENT = 2,
  QASIM_STATUS_IO = 3,
  QASIM_STATUS_FORMAT = 4,
  QASIM_STATUS_OUT_OF_VOCABULARY = 5,
  QASIM_STATUS_NON_FINITE = 6,
  QASIM_STATUS_EMPTY = 7,
  QASIM_STATUS_UTF8 = 8,
  QASIM_STATUS_PANIC = 9,
} QasimStatus;

typedef struct QasimDocModel QasimDocModel;

typedef struct QasimEngine QasimEngine;

typedef struct QasimSimNet QasimSimNet;

typedef struct QasimVocab QasimVocab;

/**
 * Outcome of routing one question.
 */
typedef struct QasimDecision {
  /**
   * 1 when the best answer clears the threshold, 0 when escalated.
   */
  int32_t answered;
  /**
   * Index of the best-scoring answer, reported in both cases.
   */
  size_t best_index;
  /**
   * Score of the best answer, in (0, 1).
   */
  double confidence;
} QasimDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *qasim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qasim_version(void);

/**
 * Route a score: answer when `score >= threshold`. `threshold` must lie in (0, 1].
 *
 * # Safety
 * `out` must be null or point to writable memory for one `QasimDecision`.
 */
enum QasimStatus qasim_route(double score, double threshold, struct QasimDecision *out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QasimStatus qasim_vocab_load(const char *path, struct QasimVocab **out);

/**
 * Number of ids, special symbols included; 0 for a null handle.
 *
 * # Safety
 * `vocab` must be null or a live handle.
 */
size_t qasim_vocab_len(const struct QasimVocab *vocab);

/**
 * Id of `token`; unknown tokens report `QASIM_STATUS_OUT_OF_VOCABULARY`.
 *
 * # Safety
 * `vocab` must be a live handle, `token` NUL-terminated, `out_id` writable.
 */
enum QasimStatus qasim_vocab_id(const struct QasimVocab *vocab,
                                const char *token,
                                uint32_t *out_id);

/**
 * # Safety
 * `vocab` must be null or a handle not yet freed.
 */
void qasim_vocab_free(struct QasimVocab *vocab);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QasimStatus qasim_doc_model_load(const char *path, struct QasimDocModel **out);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t qasim_doc_model_dim(const struct QasimDocModel *model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t qasim_doc_model_num_docs(const struct QasimDocModel *model);

/**
 * Copy the trained vector of document `doc` into `out[0..len]`; `len`
 * must equal the model dimension.
 *
 * # Safety
 * `model` must be a live handle and `out` writable for `len` doubles.
 */
enum QasimStatus qasim_doc_model_vector(const struct QasimDocModel *model,
                                        size_t doc,
                                        double *out,
                                        size_t len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void qasim_doc_model_free(struct QasimDocModel *model);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QasimStatus qasim_simnet_load(const char *path, struct QasimSimNet **out);

/**
 * # Safety
 * `net` must be null or a live handle.
 */
size_t qasim_simnet_input_dim(const struct QasimSimNet *net);

/**
 * Match probability of a (question, answer) feature pair, each of length `dim`.
 *
 * # Safety
 * `net` must be a live handle, `question` and `answer` readable for `dim`
 * doubles, `out_score` writable.
 */
enum QasimStatus qasim_simnet_score(const struct QasimSimNet *net,
                                    const double *question,
                                    const double *answer,
                                    size_t dim,
                                    double *out_score);

/**
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void qasim_simnet_free(struct QasimSimNet *net);

/**
 * Open an answering engine from files written by the `qasim` tool: the
 * question doc2vec model and vocabulary, the answer doc2vec model, the QA
 * dataset whose answers form the pool, and the similarity network.
 * Inference uses the default settings.
 *
 * # Safety
 * All paths must be NUL-terminated strings; `out` must be writable.
 */
enum QasimStatus qasim_engine_open(const char *question_model,
                                   const char *question_vocab,
                                   const char *answer_model,
                                   const char *qa_dataset,
                                   const char *simnet,
                                   struct QasimEngine **out);

/**
 * # Safety
 * `engine` must be null or a live handle.
 */
size_t qasim_engine_num_answers(const struct QasimEngine *engine);

/**
 * Text of answer `index`, owned by the engine; null when out of range.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
const char *qasim_engine_answer_text(const struct QasimEngine *engine, size_t index);

/**
 * Embed `question`, pick the best answer and route it against `threshold`.
 *
 * # Safety
 * `engine` must be a live handle, `question` NUL-terminated, `out` writable.
 */
enum QasimStatus qasim_engine_ask(const struct QasimEngine *engine,
                                  const char *question,
                                  double threshold,
                                  struct QasimDecision *out);

/**
 * # Safety
 * `engine` must be null or a handle not yet freed.
 */
void qasim_engine_free(struct QasimEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QASIM_H */
