#include <math.h>
#include <stdio.h>
#include <string.h>

#include "defectlab.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s failed\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

static const char *SCENARIO =
    "{\"cover\": {\"kind\": \"finite\", \"n\": 2},"
    " \"bumps\": [{\"r\": 1.7677669529663689, \"theta_lift\": 0.7853981633974483, \"radius\": 0.3}],"
    " \"program\": [{\"op\": \"C\", \"s\": 2.5, \"t\": 2.5}]}";

int main(void) {
    double v = 0.0;
    CHECK(dl_gamma(0.5, &v) == DL_STATUS_OK);
    CHECK(fabs(v - sqrt(M_PI)) < 1e-14);
    CHECK(dl_gamma(0.0, &v) == DL_STATUS_POLE);
    CHECK(strlen(dl_last_error()) > 0);

    DlIdentity id;
    CHECK(dl_verify_kv_identity(0.5, 1e-10, &id) == DL_STATUS_OK);
    CHECK(fabs(id.rhs - M_PI / 4.0) < 1e-15 && id.rel_err < 1e-10);

    uintptr_t dim = 0;
    CHECK(dl_defect_dimension(3, &dim) == DL_STATUS_OK && dim == 5);
    DlEndpoint e;
    CHECK(dl_lp_lc_classify(1.0, &e) == DL_STATUS_OK && e == DL_ENDPOINT_LIMIT_POINT);

    DlState *s = NULL;
    CHECK(dl_state_from_json(SCENARIO, &s) == DL_STATUS_OK && s != NULL);
    DlState *orig = NULL;
    CHECK(dl_state_clone(s, &orig) == DL_STATUS_OK);
    int64_t sheet = 0;
    CHECK(dl_state_commutator(s, 2.5, 2.5) == DL_STATUS_OK);
    CHECK(dl_state_sheet(s, 0, &sheet) == DL_STATUS_OK && sheet == 1);
    CHECK(dl_state_commutator(s, 2.5, 2.5) == DL_STATUS_OK);
    double re = 0.0, im = 1.0;
    CHECK(dl_state_inner_product(s, orig, &re, &im) == DL_STATUS_OK);
    CHECK(re == 1.0 && im == 0.0);
    CHECK(dl_state_translate(NULL, 1, 1.0) == DL_STATUS_NULL_POINTER);
    dl_state_free(s);
    dl_state_free(orig);

    char *json = NULL;
    CHECK(dl_scenario_run_json(SCENARIO, &json) == DL_STATUS_OK);
    CHECK(strstr(json, "\"trace\"") != NULL);
    dl_string_free(json);

    printf("ok %s\n", dl_version());
    return 0;
}
