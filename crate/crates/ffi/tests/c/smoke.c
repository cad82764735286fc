#include <math.h>
#include <stdio.h>
#include <string.h>
#include "g2forms.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    G2fForm *rho = g2f_form_rho0();
    double lambda = 0.0;
    CHECK(g2f_hitchin_lambda(rho, &lambda) == G2F_STATUS_OK);
    CHECK(fabs(lambda + 4.0) < 1e-12);

    double j[36];
    G2fForm *rho_tilde = NULL;
    CHECK(g2f_sl3c_structure(rho, 1, j, &rho_tilde) == G2F_STATUS_OK);
    CHECK(g2f_form_len(rho_tilde) == 20);

    G2fForm *top = NULL;
    CHECK(g2f_form_wedge(rho, rho_tilde, &top) == G2F_STATUS_OK);
    CHECK(g2f_form_degree(top) == 6);

    G2fForm *bad = NULL;
    CHECK(g2f_form_wedge(rho, top, &bad) == G2F_STATUS_INVALID_ARGUMENT);
    CHECK(bad == NULL);
    CHECK(g2f_last_error() != NULL);

    G2fExpr *e = NULL;
    CHECK(g2f_expr_parse("x1^2*x2 - x2^2*x1", &e) == G2F_STATUS_OK);
    double x[2] = {2.0, 3.0}, v = 0.0;
    CHECK(g2f_expr_eval(e, x, 2, 0.0, &v) == G2F_STATUS_OK);
    CHECK(v == -6.0);

    char *report = NULL;
    bool passed = false;
    CHECK(g2f_run_builtin("torus-coframe", &report, &passed) == G2F_STATUS_OK);
    CHECK(passed);
    CHECK(strstr(report, "\"schema\"") != NULL);

    g2f_string_free(report);
    g2f_expr_free(e);
    g2f_form_free(top);
    g2f_form_free(rho_tilde);
    g2f_form_free(rho);
    printf("ok %s\n", g2f_version());
    return 0;
}
