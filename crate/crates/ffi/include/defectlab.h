#ifndef DEFECTLAB_H
#define DEFECTLAB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DlBoundary {
  DL_BOUNDARY_INTERVAL = 0,
  DL_BOUNDARY_PERIODIC = 1,
  DL_BOUNDARY_DECAY_WINDOW = 2,
} DlBoundary;

typedef enum DlEndpoint {
  DL_ENDPOINT_LIMIT_CIRCLE = 0,
  DL_ENDPOINT_LIMIT_POINT = 1,
} DlEndpoint;

typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_POINTER = 1,
  DL_STATUS_INVALID_UTF8 = 2,
  DL_STATUS_DOMAIN = 3,
  DL_STATUS_POLE = 4,
  DL_STATUS_NON_CONVERGENCE = 5,
  DL_STATUS_PUNCTURE = 6,
  DL_STATUS_OPEN_LOOP = 7,
  DL_STATUS_NON_INTEGER_WINDING = 8,
  DL_STATUS_TOLERANCE = 9,
  DL_STATUS_RANK_AMBIGUITY = 10,
  DL_STATUS_DIMENSION_MISMATCH = 11,
  DL_STATUS_SCENARIO = 12,
  DL_STATUS_PANIC = 13,
} DlStatus;

// A bump state on a cover of the punctured plane.
typedef struct DlState DlState;

// Both sides of an identity and their relative error.
typedef struct DlIdentity {
  double lhs;
  double rhs;
  double rel_err;
} DlIdentity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into the library.
const char *dl_last_error(void);

// Library version as a static NUL-terminated string.
const char *dl_version(void);

enum DlStatus dl_gamma(double x, double *out_value);

// `K_ν(z)` for real `ν` and `z > 0`.
enum DlStatus dl_bessel_k(double nu, double z, double *out_value);

enum DlStatus dl_verify_kv_identity(double nu, double tol, struct DlIdentity *out_report);

enum DlStatus dl_verify_nicholson(double nu, double z, double tol, struct DlIdentity *out_report);

enum DlStatus dl_verify_mellin(double nu, double beta, double tol, struct DlIdentity *out_report);

// Dimension of the defect space on the `n`-sheeted cover.
enum DlStatus dl_defect_dimension(uint32_t n, uintptr_t *out_dim);

enum DlStatus dl_lp_lc_classify(double nu, enum DlEndpoint *out_endpoint);

// Defect indices of the central-difference `d/dx` on `n` nodes.
enum DlStatus dl_defect_indices_1d(enum DlBoundary boundary,
                                   uintptr_t n,
                                   uintptr_t margin,
                                   uintptr_t *out_n_plus,
                                   uintptr_t *out_n_minus);

// `U_t = exp(tH)` for a skew-symmetric `dim × dim` matrix `h` (row-major),
// built from the local flow. Writes `dim * dim` doubles to `out_u`.
enum DlStatus dl_exponentiate(uintptr_t dim,
                              const double *h,
                              double t,
                              double tol,
                              double *out_u,
                              uint64_t *out_steps);

// `‖[(λ₁ - H₁)⁻¹, (λ₂ - H₂)⁻¹]‖₂` for row-major skew-symmetric matrices.
enum DlStatus dl_resolvent_commutation(uintptr_t dim,
                                       const double *h1,
                                       const double *h2,
                                       double lambda1_re,
                                       double lambda1_im,
                                       double lambda2_re,
                                       double lambda2_im,
                                       double *out_norm);

// Build the initial state of a JSON scenario (the program is ignored).
// Release it with [`dl_state_free`].
enum DlStatus dl_state_from_json(const char *json, struct DlState **out_state);

enum DlStatus dl_state_clone(const struct DlState *s, struct DlState **out_state);

// Frees a state handle. Null is ignored.
void dl_state_free(struct DlState *s);

// Applies `U_axis(t)` in place; `axis` is 1 or 2. On error the state is
// left unchanged.
enum DlStatus dl_state_translate(struct DlState *s, uint8_t axis, double t);

// Applies the translation commutator with side lengths `s` and `t` in place.
enum DlStatus dl_state_commutator(struct DlState *st, double s, double t);

enum DlStatus dl_state_bump_count(const struct DlState *s, uintptr_t *out_count);

// Sheet index of bump `index`.
enum DlStatus dl_state_sheet(const struct DlState *s, uintptr_t index, int64_t *out_sheet);

enum DlStatus dl_state_norm(const struct DlState *s, double *out_norm);

// `⟨a, b⟩`, antilinear in `a`.
enum DlStatus dl_state_inner_product(const struct DlState *a,
                                     const struct DlState *b,
                                     double *out_re,
                                     double *out_im);

// Runs a JSON scenario and returns its trace as JSON. Release the string
// with [`dl_string_free`].
enum DlStatus dl_scenario_run_json(const char *json, char **out_json);

// Frees a string returned by the library. Null is ignored.
void dl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEFECTLAB_H */
