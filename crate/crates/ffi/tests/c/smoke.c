#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ncp.h"

static int fail(const char *what) {
    const char *msg = ncp_last_error_message();
    fprintf(stderr, "%s: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(void) {
    double m[4] = {1, 2, 5, 15};
    double out[4];
    if (ncp_bercovici_pata(m, 4, out) != NCP_STATUS_OK) return fail("bercovici_pata");
    if (fabs(out[3] - 14.0) > 1e-12) return fail("bercovici_pata value");

    NcpFockSpace *space = NULL;
    if (ncp_fock_space_new(1, 4, &space) != NCP_STATUS_OK) return fail("space");
    double one = 1.0;
    NcpFockOperator *up = NULL, *down = NULL, *s = NULL;
    ncp_fock_creation(space, &one, NULL, &up);
    ncp_fock_annihilation(space, &one, NULL, &down);
    if (ncp_fock_sum(up, down, &s) != NCP_STATUS_OK) return fail("sum");
    const NcpFockOperator *word[4] = {s, s, s, s};
    double re, im;
    if (ncp_vacuum_expectation(word, 4, &re, &im) != NCP_STATUS_OK) return fail("expectation");
    if (fabs(re - 2.0) > 1e-12 || im != 0.0) return fail("expectation value");

    if (ncp_fock_space_new(1, 4, NULL) != NCP_STATUS_NULL_POINTER) return fail("null out");

    ncp_fock_operator_free(s);
    ncp_fock_operator_free(down);
    ncp_fock_operator_free(up);
    ncp_fock_space_free(space);
    printf("ncp %s ok\n", ncp_version());
    return 0;
}
