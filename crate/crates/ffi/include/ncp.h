#ifndef NCP_H
#define NCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcpStatus {
  NCP_STATUS_OK = 0,
  NCP_STATUS_NULL_POINTER = 1,
  NCP_STATUS_INVALID_ARGUMENT = 2,
  NCP_STATUS_SIZE_LIMIT = 3,
  NCP_STATUS_NUMERICAL = 4,
  NCP_STATUS_PANIC = 5,
} NcpStatus;

typedef enum NcpFlavor {
  NCP_FLAVOR_CLASSICAL = 0,
  NCP_FLAVOR_FREE = 1,
  NCP_FLAVOR_BOOLEAN = 2,
} NcpFlavor;

typedef enum NcpTupleClass {
  NCP_TUPLE_CLASS_GAUSSIAN = 0,
  NCP_TUPLE_CLASS_COMPOUND_POISSON = 1,
  NCP_TUPLE_CLASS_GENERAL = 2,
} NcpTupleClass;

/**
 * Operator on an [`NcpFockSpace`].
 */
typedef struct NcpFockOperator NcpFockOperator;

/**
 * Truncated free Fock space.
 */
typedef struct NcpFockSpace NcpFockSpace;

/**
 * Generator tuple of an additive free Lévy process.
 */
typedef struct NcpTuple NcpTuple;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static nul-terminated string.
 */
const char *ncp_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ncp_last_error_message(void);

/**
 * Writes `n` cumulants of the moments `m[0..n]` (`m_1..m_n`) to `out`.
 */
enum NcpStatus ncp_moments_to_cumulants(enum NcpFlavor flavor,
                                        const double *m,
                                        size_t n,
                                        double *out);

enum NcpStatus ncp_cumulants_to_moments(enum NcpFlavor flavor,
                                        const double *kappa,
                                        size_t n,
                                        double *out);

enum NcpStatus ncp_convolve(enum NcpFlavor flavor,
                            const double *m1,
                            const double *m2,
                            size_t n,
                            double *out);

enum NcpStatus ncp_bercovici_pata(const double *m, size_t n, double *out);

/**
 * Space over `C^dim` truncated at `depth`, subject to the basis cap.
 */
enum NcpStatus ncp_fock_space_new(size_t dim, size_t depth, struct NcpFockSpace **out);

void ncp_fock_space_free(struct NcpFockSpace *space);

size_t ncp_fock_space_total_dim(const struct NcpFockSpace *space);

/**
 * `a+(u)`; `u_im` may be null for a real vector of length `dim`.
 */
enum NcpStatus ncp_fock_creation(const struct NcpFockSpace *space,
                                 const double *u_re,
                                 const double *u_im,
                                 struct NcpFockOperator **out);

/**
 * `a-(v)`, conjugate-linear in `v`.
 */
enum NcpStatus ncp_fock_annihilation(const struct NcpFockSpace *space,
                                     const double *v_re,
                                     const double *v_im,
                                     struct NcpFockOperator **out);

/**
 * `Lambda(X)` for a row-major `dim x dim` matrix `X`.
 */
enum NcpStatus ncp_fock_conservation(const struct NcpFockSpace *space,
                                     const double *x_re,
                                     const double *x_im,
                                     struct NcpFockOperator **out);

/**
 * `c Id`.
 */
enum NcpStatus ncp_fock_scalar(const struct NcpFockSpace *space,
                               double re,
                               double im,
                               struct NcpFockOperator **out);

enum NcpStatus ncp_fock_sum(const struct NcpFockOperator *a,
                            const struct NcpFockOperator *b,
                            struct NcpFockOperator **out);

/**
 * `a b`, with `b` applied first.
 */
enum NcpStatus ncp_fock_product(const struct NcpFockOperator *a,
                                const struct NcpFockOperator *b,
                                struct NcpFockOperator **out);

enum NcpStatus ncp_fock_adjoint(const struct NcpFockOperator *a, struct NcpFockOperator **out);

void ncp_fock_operator_free(struct NcpFockOperator *op);

/**
 * `<Omega, ops[0] ops[1] ... ops[n-1] Omega>`.
 */
enum NcpStatus ncp_vacuum_expectation(const struct NcpFockOperator *const *ops,
                                      size_t n,
                                      double *out_re,
                                      double *out_im);

/**
 * Tuple with row-major `d x d` matrix `t`; `v` may be null for `v = u`.
 */
enum NcpStatus ncp_tuple_new(size_t d,
                             const double *t,
                             const double *u,
                             const double *v,
                             double lambda,
                             struct NcpTuple **out);

void ncp_tuple_free(struct NcpTuple *tuple);

/**
 * Writes the first `order` cumulants of the process at time `t`.
 */
enum NcpStatus ncp_tuple_cumulants(const struct NcpTuple *tuple,
                                   double t,
                                   enum NcpFlavor flavor,
                                   size_t order,
                                   double *out);

/**
 * Classifies a symmetric tuple. For compound Poisson tuples, `omega`
 * (length `d`, may be null) receives a vector with `T omega = u`.
 */
enum NcpStatus ncp_tuple_classify(const struct NcpTuple *tuple,
                                  enum NcpTupleClass *class_,
                                  double *omega);

/**
 * Moments `m_1..m_max_order` of the discretized free Azéma martingale at
 * time `t`.
 */
enum NcpStatus ncp_azema_free(double gamma_re,
                              double gamma_im,
                              double t,
                              size_t steps,
                              size_t depth,
                              size_t max_order,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCP_H */
