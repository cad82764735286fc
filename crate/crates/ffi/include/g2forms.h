#ifndef G2FORMS_H
#define G2FORMS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum G2fStatus {
  G2F_STATUS_OK = 0,
  G2F_STATUS_NULL_POINTER = 1,
  G2F_STATUS_INVALID_UTF8 = 2,
  // Dimension, degree or length mismatch.
  G2F_STATUS_INVALID_ARGUMENT = 3,
  G2F_STATUS_PARSE = 4,
  // Expression evaluated outside its domain.
  G2F_STATUS_DOMAIN = 5,
  G2F_STATUS_SCENARIO = 6,
  // The form is degenerate, not definite or not positive.
  G2F_STATUS_DEGENERATE = 7,
  G2F_STATUS_NUMERICAL = 8,
  G2F_STATUS_PANIC = 9,
  G2F_STATUS_BUFFER_TOO_SMALL = 10,
} G2fStatus;

// Parsed coefficient expression.
typedef struct G2fExpr G2fExpr;

// Exterior form on R^n.
typedef struct G2fForm G2fForm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call into the library on this thread.
const char *g2f_last_error(void);

// Library version as a static string.
const char *g2f_version(void);

void g2f_string_free(char *s);

// Form of degree `k` on R^n from `C(n,k)` coefficients in lexicographic
// order of increasing index tuples.
enum G2fStatus g2f_form_new(size_t n,
                            size_t k,
                            const double *coeffs,
                            size_t len,
                            struct G2fForm **result);

// The standard definite 3-form on R^6.
struct G2fForm *g2f_form_rho0(void);

// The standard positive 3-form on R^7.
struct G2fForm *g2f_form_phi0(void);

void g2f_form_free(struct G2fForm *form);

size_t g2f_form_dim(const struct G2fForm *form);

size_t g2f_form_degree(const struct G2fForm *form);

// Number of coefficients, `C(n,k)`.
size_t g2f_form_len(const struct G2fForm *form);

// Copies the coefficients into `buf`, which must hold `g2f_form_len` values.
enum G2fStatus g2f_form_coeffs(const struct G2fForm *form, double *buf, size_t len);

enum G2fStatus g2f_form_wedge(const struct G2fForm *a,
                              const struct G2fForm *b,
                              struct G2fForm **result);

// Pullback by the linear map with row-major `n x n` matrix `m`.
enum G2fStatus g2f_form_pullback(const struct G2fForm *form,
                                 const double *m,
                                 size_t len,
                                 struct G2fForm **result);

// Quartic invariant of a 3-form on R^6; negative exactly on definite forms.
enum G2fStatus g2f_hitchin_lambda(const struct G2fForm *form, double *lambda);

// Induced complex structure (36 values, row-major) and conjugate form of a
// definite 3-form on R^6. Either output may be null.
enum G2fStatus g2f_sl3c_structure(const struct G2fForm *form,
                                  int32_t orientation_sign,
                                  double *complex_structure,
                                  struct G2fForm **rho_tilde);

// Induced metric (49 values, row-major) and coassociative 4-form of a
// positive 3-form on R^7. Either output may be null.
enum G2fStatus g2f_g2_structure(const struct G2fForm *form,
                                int32_t orientation_sign,
                                double *metric,
                                struct G2fForm **star_phi);

// Smallest eigenvalue of the bilinear form of a 3-form on R^7.
enum G2fStatus g2f_positivity_margin(const struct G2fForm *form,
                                     int32_t orientation_sign,
                                     double *margin);

enum G2fStatus g2f_expr_parse(const char *source, struct G2fExpr **result);

// Evaluates at `x[0..len]` (the variables `x1..`) and `t`.
enum G2fStatus g2f_expr_eval(const struct G2fExpr *expr,
                             const double *x,
                             size_t len,
                             double t,
                             double *value);

void g2f_expr_free(struct G2fExpr *expr);

// Runs a builtin scenario with default settings. `report_json` receives the
// report, `passed` (nullable) whether every check passed.
enum G2fStatus g2f_run_builtin(const char *name, char **report_json, bool *passed);

// Validates and runs a scenario given as JSON text.
enum G2fStatus g2f_run_scenario(const char *scenario_json, char **report_json, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* G2FORMS_H */
