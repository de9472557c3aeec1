#ifndef METAPLECTIC_H
#define METAPLECTIC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_ARGUMENT = 2,
  MP_STATUS_DIMENSION_MISMATCH = 3,
  MP_STATUS_NOT_SYMPLECTIC = 4,
  MP_STATUS_SINGULAR = 5,
  MP_STATUS_DEGENERATE = 6,
  MP_STATUS_OUT_OF_DOMAIN = 7,
  MP_STATUS_GRID_MISMATCH = 8,
  MP_STATUS_TRUNCATION = 9,
  MP_STATUS_UNSUPPORTED = 10,
  MP_STATUS_PANIC = 11,
} MpStatus;

typedef enum MpMethod {
  MP_METHOD_FACTORED = 0,
  MP_METHOD_QUADRATURE = 1,
} MpMethod;

typedef enum MpLattice {
  MP_LATTICE_DUAL = 0,
  MP_LATTICE_SQUARE = 1,
} MpLattice;

typedef enum MpPhaseForm {
  MP_PHASE_FORM_S1 = 0,
  MP_PHASE_FORM_ALFA1 = 1,
  MP_PHASE_FORM_ALFA2 = 2,
} MpPhaseForm;

typedef struct MpGenerating MpGenerating;

typedef struct MpPhase MpPhase;

typedef struct MpSampled MpSampled;

typedef struct MpSymplectic MpSymplectic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` writable bytes.
 */
uintptr_t mp_last_error_message(char *buf, uintptr_t len);

/**
 * `W = (P, L, Q)`, each an `n×n` row-major array.
 *
 * # Safety
 * `p`, `l`, `q` must each hold `n*n` doubles; `out` must be writable.
 */
enum MpStatus mp_generating_new(uintptr_t n,
                                const double *p,
                                const double *l,
                                const double *q,
                                struct MpGenerating **out);

/**
 * Generating function of the rotation by `alpha` (`n = 1`).
 *
 * # Safety
 * `out` must be writable.
 */
enum MpStatus mp_generating_rotation(double alpha, struct MpGenerating **out);

/**
 * # Safety
 * `w` must be null or a handle from this library, not yet freed.
 */
void mp_generating_free(struct MpGenerating *w);

/**
 * `2n×2n` row-major symplectic matrix.
 *
 * # Safety
 * `entries` must hold `4n²` doubles; `out` must be writable.
 */
enum MpStatus mp_symplectic_new(uintptr_t n, const double *entries, struct MpSymplectic **out);

/**
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_symplectic_from_generating(const struct MpGenerating *w,
                                            struct MpSymplectic **out);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
void mp_symplectic_free(struct MpSymplectic *s);

/**
 * Half-dimension `n`; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
uintptr_t mp_symplectic_n(const struct MpSymplectic *s);

/**
 * # Safety
 * `s` must be a live handle; `out` must hold `len = 4n²` doubles.
 */
enum MpStatus mp_symplectic_entries(const struct MpSymplectic *s, double *out, uintptr_t len);

/**
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_symplectic_det_minus_identity(const struct MpSymplectic *s, double *out);

/**
 * Cayley transform `M_S`, written row-major into `out` (`len = 4n²`).
 *
 * # Safety
 * `s` must be a live handle; `out` must hold `len` doubles.
 */
enum MpStatus mp_cayley(const struct MpSymplectic *s, double *out, uintptr_t len);

/**
 * Conley–Zehnder index of `Ŝ_{W,m}`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_conley_zehnder(const struct MpGenerating *w, int64_t m, uint8_t *out);

/**
 * Hermite function of order `order` along every axis.
 *
 * # Safety
 * `out` must be writable.
 */
enum MpStatus mp_sampled_hermite(uintptr_t n,
                                 double half_width,
                                 uintptr_t points,
                                 double hbar,
                                 uintptr_t order,
                                 struct MpSampled **out);

/**
 * Samples in lattice order (`len = points^n`).
 *
 * # Safety
 * `re`, `im` must hold `len` doubles; `out` must be writable.
 */
enum MpStatus mp_sampled_from_values(uintptr_t n,
                                     double half_width,
                                     uintptr_t points,
                                     double hbar,
                                     const double *re,
                                     const double *im,
                                     uintptr_t len,
                                     struct MpSampled **out);

/**
 * # Safety
 * `f` must be null or a live handle.
 */
void mp_sampled_free(struct MpSampled *f);

/**
 * Number of samples; 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
uintptr_t mp_sampled_len(const struct MpSampled *f);

/**
 * # Safety
 * `f` must be a live handle; `re`, `im` must hold `len` doubles.
 */
enum MpStatus mp_sampled_values(const struct MpSampled *f, double *re, double *im, uintptr_t len);

/**
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_sampled_norm(const struct MpSampled *f, double *out);

/**
 * `Ŝ_{W,m} f`.
 *
 * # Safety
 * `w`, `f` must be live handles; `out` must be writable.
 */
enum MpStatus mp_qfio_apply(const struct MpGenerating *w,
                            int64_t m,
                            const struct MpSampled *f,
                            enum MpMethod method,
                            struct MpSampled **out);

/**
 * Cross-Wigner transform `W(f, g)`.
 *
 * # Safety
 * `f`, `g` must be live handles; `out` must be writable.
 */
enum MpStatus mp_cross_wigner(const struct MpSampled *f,
                              const struct MpSampled *g,
                              enum MpLattice lattice,
                              struct MpPhase **out);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
void mp_phase_free(struct MpPhase *p);

/**
 * Number of phase-space samples; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
uintptr_t mp_phase_len(const struct MpPhase *p);

/**
 * # Safety
 * `p` must be a live handle; `re`, `im` must hold `len` doubles.
 */
enum MpStatus mp_phase_values(const struct MpPhase *p, double *re, double *im, uintptr_t len);

/**
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_phase_norm(const struct MpPhase *p, double *out);

/**
 * `S̃F` for the Conley–Zehnder index `nu`, default truncation.
 *
 * # Safety
 * `s`, `big_f` must be live handles; `out` must be writable.
 */
enum MpStatus mp_phase_apply(const struct MpSymplectic *s,
                             int64_t nu,
                             const struct MpPhase *big_f,
                             enum MpPhaseForm form,
                             struct MpPhase **out);

/**
 * Moyal inner product `(F|G)`.
 *
 * # Safety
 * `a`, `b` must be live handles; `re`, `im` must be writable.
 */
enum MpStatus mp_moyal_inner(const struct MpPhase *a,
                             const struct MpPhase *b,
                             double *re,
                             double *im);

/**
 * `‖W(ψ, φ)‖_{L¹}` on the square phase lattice.
 *
 * # Safety
 * `psi`, `phi` must be live handles; `out` must be writable.
 */
enum MpStatus mp_s0_norm(const struct MpSampled *psi, const struct MpSampled *phi, double *out);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *mp_status_name(enum MpStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METAPLECTIC_H */
