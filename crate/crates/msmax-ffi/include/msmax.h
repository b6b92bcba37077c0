#ifndef MSMAX_H
#define MSMAX_H

/* Generated with cbindgen:0.29.4 */

/* Generated from the msmax-ffi crate by cbindgen; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call completed successfully.
#define MSMAX_OK 0

// An internal invariant failed; the library state is still usable.
#define MSMAX_ERR_INTERNAL 1

// Operands live on different grids or have mismatched lengths.
#define MSMAX_ERR_SHAPE 2

// An index lies outside the grid.
#define MSMAX_ERR_BOUNDS 3

// An argument value is not acceptable (including null pointers).
#define MSMAX_ERR_INVALID 4

// A numeric domain constraint was violated.
#define MSMAX_ERR_DOMAIN 5

// A file could not be read.
#define MSMAX_ERR_IO 6

// Text failed to parse (weight spec, scenario, check id).
#define MSMAX_ERR_PARSE 7

// Operator selector for [`msmax_maximal`].
typedef enum {
  // Strong maximal operator over all cell-aligned rectangles.
  MSMAX_OPERATOR_STRONG = 0,
  // Strong maximal operator over dyadic rectangles.
  MSMAX_OPERATOR_STRONG_DYADIC = 1,
  // Strong maximal operator truncated at scale `2^truncation`.
  MSMAX_OPERATOR_STRONG_TRUNCATED = 2,
  // Cube maximal operator (equal per-axis cell counts).
  MSMAX_OPERATOR_CUBE = 3,
  // Dyadic cube maximal operator.
  MSMAX_OPERATOR_CUBE_DYADIC = 4,
} MsmaxOperator;

// Rectangle family over which suprema are taken.
typedef enum {
  // All cell-aligned rectangles.
  MSMAX_FAMILY_ALL = 0,
  // Dyadic rectangles only.
  MSMAX_FAMILY_DYADIC = 1,
} MsmaxFamily;

// Piecewise-constant function on a uniform dyadic grid over the unit box.
typedef struct MsmaxFunction MsmaxFunction;

// Exponent profile `(n, alpha, p_1..p_m, q)` shared by the operators.
typedef struct MsmaxProfile MsmaxProfile;

// Rendered result of one verification scenario run.
typedef struct MsmaxReport MsmaxReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the crate version as a static string; never fails.
const char *msmax_version(void);

// Returns the message of the most recent failure on this thread, or an
// empty string after a success. The pointer stays valid until the next
// `msmax_*` call on the same thread; do not free it.
const char *msmax_last_error(void);

// Releases a string returned by one of the `char*`-producing functions.
//
// # Safety
// `s` must be null or a pointer previously returned by this library's
// string-producing functions ([`msmax_report_render`],
// [`msmax_report_constants_tsv`]) and not yet freed.
void msmax_string_free(char *s);

// Creates a grid function from explicit per-axis depths and cell values.
//
// `levels` holds `dims` per-axis dyadic depths (axis `j` has `2^levels[j]`
// cells); `values` holds all `prod_j 2^levels[j]` cell values with axis 0
// slowest. The function lives on the unit box anchored at the origin. On
// success `*out` owns the new handle.
//
// # Safety
// `levels` must point to `dims` readable bytes, `values` to `value_count`
// readable doubles, and `out` to a writable pointer slot.
int32_t msmax_function_new(const uint8_t *levels,
                           size_t dims,
                           const double *values,
                           size_t value_count,
                           MsmaxFunction **out);

// Creates the constant function `value` on the grid with the given depths.
//
// # Safety
// `levels` must point to `dims` readable bytes and `out` to a writable
// pointer slot.
int32_t msmax_function_constant(const uint8_t *levels,
                                size_t dims,
                                double value,
                                MsmaxFunction **out);

// Generates a weight from a textual spec such as `const:c=1`,
// `power:a=0.5`, or `martingale:seed=5,depth=4,low=0.3,high=0.7`, realized
// on the grid with the given depths.
//
// # Safety
// `spec` must be a NUL-terminated string, `levels` must point to `dims`
// readable bytes, and `out` to a writable pointer slot.
int32_t msmax_function_from_spec(const char *spec,
                                 const uint8_t *levels,
                                 size_t dims,
                                 MsmaxFunction **out);

// Number of axes of the function's grid; 0 when `f` is null.
//
// # Safety
// `f` must be null or a valid function handle.
size_t msmax_function_dims(const MsmaxFunction *f);

// Total number of cells (= length of the value buffer); 0 when `f` is null.
//
// # Safety
// `f` must be null or a valid function handle.
size_t msmax_function_value_count(const MsmaxFunction *f);

// Copies the per-axis depths into `out`, which must hold `dims` bytes
// (query with [`msmax_function_dims`]).
//
// # Safety
// `out` must point to `dims` writable bytes.
int32_t msmax_function_levels(const MsmaxFunction *f, uint8_t *out, size_t dims);

// Copies all cell values into `out`, which must hold `value_count` doubles
// (query with [`msmax_function_value_count`]). Axis 0 varies slowest.
//
// # Safety
// `out` must point to `value_count` writable doubles.
int32_t msmax_function_values(const MsmaxFunction *f, double *out, size_t value_count);

// Lebesgue integral of the function over the unit box.
//
// # Safety
// `out` must point to a writable double.
int32_t msmax_function_integral(const MsmaxFunction *f, double *out);

// Releases a function handle; a null pointer is ignored.
//
// # Safety
// `f` must be null or a handle returned by this library and not yet freed.
void msmax_function_free(MsmaxFunction *f);

// Creates an exponent profile with an explicit target exponent `q`.
//
// `p` holds `m` per-slot exponents in `(1, inf)`; the profile validates
// `0 <= alpha/n < m` and the usual exponent constraints.
//
// # Safety
// `p` must point to `m` readable doubles and `out` to a writable pointer
// slot.
int32_t msmax_profile_new(size_t n,
                          double alpha,
                          const double *p,
                          size_t m,
                          double q,
                          MsmaxProfile **out);

// Creates a profile whose `q` is derived from the scaling relation
// `1/q = 1/p - alpha/n` (requires `1/p > alpha/n`).
//
// # Safety
// `p` must point to `m` readable doubles and `out` to a writable pointer
// slot.
int32_t msmax_profile_one_weight(size_t n,
                                 double alpha,
                                 const double *p,
                                 size_t m,
                                 MsmaxProfile **out);

// Target exponent `q` of the profile (derived for one-weight profiles).
//
// # Safety
// `out` must point to a writable double.
int32_t msmax_profile_q(const MsmaxProfile *prof, double *out);

// Releases a profile handle; a null pointer is ignored.
//
// # Safety
// `prof` must be null or a handle returned by this library and not yet
// freed.
void msmax_profile_free(MsmaxProfile *prof);

// Applies a maximal operator to an `m`-tuple of functions on one grid.
//
// `truncation` is read only for `MSMAX_OPERATOR_STRONG_TRUNCATED`, where
// per-axis side lengths are capped at `2^truncation` (negative values allowed;
// caps below one cell yield the zero function). On success `*out` owns the
// pointwise operator output on the same grid.
//
// # Safety
// `fs` must point to `m` readable non-null function handles, `prof` must be
// a valid profile handle, and `out` must point to a writable pointer slot.
int32_t msmax_maximal(MsmaxOperator op,
                      int32_t truncation,
                      const MsmaxFunction *const *fs,
                      size_t m,
                      const MsmaxProfile *prof,
                      MsmaxFunction **out);

// Multilinear fractional integral of an `m`-tuple by midpoint quadrature,
// evaluated at every grid cell.
//
// # Safety
// `fs` must point to `m` readable non-null function handles, `prof` must be
// a valid profile handle, and `out` must point to a writable pointer slot.
int32_t msmax_fractional_integral(const MsmaxFunction *const *fs,
                                  size_t m,
                                  const MsmaxProfile *prof,
                                  MsmaxFunction **out);

// Weak `L^q(nu)` quasi-norm estimate of `g`: the supremum over positive
// levels `t` of `t * nu({g > t})^{1/q}`.
//
// # Safety
// `g` and `nu` must be valid function handles and `out` must point to a
// writable double.
int32_t msmax_weak_norm(const MsmaxFunction *g, const MsmaxFunction *nu, double q, double *out);

// Hölder conjugate `p' = p / (p - 1)`.
double msmax_conjugate(double p);

// Muckenhoupt-type constant of a single weight over the chosen rectangle
// family.
//
// # Safety
// `w` must be a valid function handle and `out` must point to a writable
// double.
int32_t msmax_a_p_constant(const MsmaxFunction *w, double p, MsmaxFamily family, double *out);

// Joint Muckenhoupt-type constant of an `m`-tuple of weights under the
// given profile, over the chosen rectangle family.
//
// # Safety
// `ws` must point to `m` readable non-null function handles, `prof` must be
// a valid profile handle, and `out` must point to a writable double.
int32_t msmax_a_pq_constant(const MsmaxFunction *const *ws,
                            size_t m,
                            const MsmaxProfile *prof,
                            MsmaxFamily family,
                            double *out);

// Smallest ratio `w(parent) / w(child)` over dyadic parent rectangles and
// their children, a reverse-doubling diagnostic (equals `2^n` for constant
// weights).
//
// # Safety
// `w` must be a valid function handle and `out` must point to a writable
// double.
int32_t msmax_reverse_doubling(const MsmaxFunction *w, double *out);

// Predicted reverse-doubling constant for the dual of a weight whose
// normalised rectangle constant is `k` (see the library docs for the
// closed form).
//
// # Safety
// `out` must point to a writable double.
int32_t msmax_rd_prediction(double k, double p, size_t n, double *out);

// Auxiliary exponents of a profile satisfying the scaling relation:
// writes the joint exponent to `*r` and the `m` per-slot exponents to
// `r_i`.
//
// # Safety
// `prof` must be a valid profile handle, `r` must point to a writable
// double, and `r_i` must point to `m` writable doubles where `m` matches
// the profile's slot count.
int32_t msmax_derived_exponents(const MsmaxProfile *prof, double *r, double *r_i, size_t m);

// Number of built-in verification checks.
size_t msmax_check_count(void);

// Name of the built-in check at `index`, or null when out of range. The
// pointer is static; do not free it.
const char *msmax_check_id(size_t index);

// Runs one built-in check by name with its default scenario. `seed` may be
// null to keep the scenario's own seed, or point to an override.
//
// A successful return means the scenario executed; query the verdict with
// [`msmax_report_passed`].
//
// # Safety
// `check` must be a NUL-terminated string, `seed` null or readable, and
// `out` a writable pointer slot.
int32_t msmax_run_check(const char *check, const uint64_t *seed, MsmaxReport **out);

// Parses scenario TOML text and runs it.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer slot.
int32_t msmax_run_scenario_text(const char *text, MsmaxReport **out);

// Loads a scenario TOML file and runs it.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer slot.
int32_t msmax_run_scenario_file(const char *path, MsmaxReport **out);

// Whether every check line in the report passed; false for a null handle.
//
// # Safety
// `report` must be null or a valid report handle.
bool msmax_report_passed(const MsmaxReport *report);

// Renders the full line-oriented report. Returns a newly allocated string
// (free with [`msmax_string_free`]) or null on failure.
//
// # Safety
// `report` must be null or a valid report handle.
char *msmax_report_render(const MsmaxReport *report);

// Renders the report's named constants as tab-separated `name value
// witness` rows. Returns a newly allocated string (free with
// [`msmax_string_free`]) or null on failure.
//
// # Safety
// `report` must be null or a valid report handle.
char *msmax_report_constants_tsv(const MsmaxReport *report);

// Releases a report handle; a null pointer is ignored.
//
// # Safety
// `report` must be null or a handle returned by this library and not yet
// freed.
void msmax_report_free(MsmaxReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSMAX_H */
