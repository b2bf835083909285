/* C interface to the expsumlab exponential-sum laboratory. */

#ifndef EXPSUMLAB_H
#define EXPSUMLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible entry point; values match the CLI exit
 * codes so a C harness can forward them as a process status unchanged.
 */
typedef enum {
  /**
   * Success.
   */
  ESL_STATUS_OK = 0,
  /**
   * A computation failed at runtime (precision, degeneracy, panic).
   */
  ESL_STATUS_RUNTIME = 1,
  /**
   * An argument violates a documented precondition.
   */
  ESL_STATUS_INVALID = 2,
  /**
   * The call would exceed a configured budget.
   */
  ESL_STATUS_RESOURCE = 3,
} EslStatus;

/**
 * Opaque curve handle. Create with `esl_curve_new_*`, release with
 * `esl_curve_free`. Handles are immutable and safe to share across
 * threads for concurrent reads.
 */
typedef struct EslCurve EslCurve;

/**
 * Farey-arc classification of a quadratic coordinate, the C mirror of the
 * library's arc report.
 */
typedef struct {
  /**
   * Minimal denominator q <= m with dist(q w, Z) <= 1/m.
   */
  uint64_t q;
  /**
   * Numerator in [1, q].
   */
  uint64_t b;
  /**
   * Circle distance |w - b/q|.
   */
  double phi;
  /**
   * 1 when phi <= 1/(q m) up to roundoff, else 0.
   */
  int major_arc;
  /**
   * q^(-1/2) min(m, phi^(-1/2)): the square-root arc bound.
   */
  double bound;
} EslArcClass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI revision of this header/library pair.
 */
uint32_t esl_abi_version(void);

/**
 * Diagnostic message for the most recent failure on the calling thread.
 * The pointer stays valid until the next failing call on this thread;
 * never free it. Returns an empty string when nothing failed yet.
 */
const char *esl_last_error_message(void);

/**
 * Create the cubic/quartic model curve.
 *
 * # Safety
 * `out` must be null or a valid pointer to writable `EslCurve*` storage.
 */
EslStatus esl_curve_new_moment(EslCurve **out);

/**
 * Create the fractional-power curve (t^a, t^b) on t > 0.
 *
 * # Safety
 * `out` must be null or a valid pointer to writable `EslCurve*` storage.
 */
EslStatus esl_curve_new_power(double a, double b, EslCurve **out);

/**
 * Release a curve handle. Null is tolerated.
 *
 * # Safety
 * `curve` must be null or a handle from a constructor that has not been
 * freed already.
 */
void esl_curve_free(EslCurve *curve);

/**
 * Measure the window condition constants on a grid of `grid` points.
 * Writes A1, A2, A3, A4 into `out_constants[0..4]`.
 *
 * # Safety
 * `curve` must be null or a live handle; `out_constants` must be null or
 * valid writable storage for 4 doubles.
 */
EslStatus esl_curve_verify_conditions(const EslCurve *curve, size_t grid, double *out_constants);

/**
 * Evaluate the derivative ladder phi_k^(order) at t; k is 3 or 4 and
 * order at most 4.
 *
 * # Safety
 * `curve` must be null or a live handle; `out_value` must be null or a
 * valid pointer to a writable double.
 */
EslStatus esl_curve_eval_phi(const EslCurve *curve,
                             uint8_t k,
                             uint8_t order,
                             double t,
                             double *out_value);

/**
 * Evaluate the curve exponential sum over the integer interval [lo, hi]
 * at scale n and point x[0..4]. `renormalized` selects the coordinate
 * convention: 0 evaluates at x as given, 1 applies the renormalized
 * scaling (x2 divided by n, window coordinates multiplied by n). The
 * complex value is written to (out_re, out_im).
 *
 * # Safety
 * `curve` must be null or a live handle; `x` must be null or valid
 * readable storage for 4 doubles; `out_re` and `out_im` must each be
 * null or a valid pointer to a writable double.
 */
EslStatus esl_curve_eval_sum(const EslCurve *curve,
                             uint64_t n,
                             int64_t lo,
                             int64_t hi,
                             const double *x,
                             int renormalized,
                             double *out_re,
                             double *out_im);

/**
 * Classify a quadratic coordinate w into its minimal Farey arc at scale m.
 *
 * # Safety
 * `out` must be null or a valid pointer to a writable `EslArcClass`.
 */
EslStatus esl_classify_w(double w, uint64_t m, EslArcClass *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPSUMLAB_H */
