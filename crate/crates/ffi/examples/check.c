#include <math.h>
#include <stdio.h>
#include "qcorr.h"

int main(void) {
    double s = 0.0;
    if (qcorr_chsh_analytic(QCORR_SPECIES_PHOTON, 0.0, M_PI / 4, M_PI / 8, 3 * M_PI / 8, &s) != QCORR_STATUS_OK) {
        fprintf(stderr, "chsh: %s\n", qcorr_last_error());
        return 1;
    }
    QcorrRun *run = NULL;
    if (qcorr_run_new(7, 100000, QCORR_SPECIES_HALF, M_PI, &run) != QCORR_STATUS_OK) return 1;
    qcorr_run_add_setting(run, M_PI / 3, 0.0, 1.0);
    if (qcorr_run_execute(run) != QCORR_STATUS_OK) {
        fprintf(stderr, "run: %s\n", qcorr_last_error());
        qcorr_run_free(run);
        return 1;
    }
    double p = 0.0;
    uint64_t n = 0;
    qcorr_run_correlation(run, M_PI / 3, 0.0, &p);
    qcorr_run_matched_count(run, &n);
    qcorr_run_free(run);
    double u;
    QcorrStatus bad = qcorr_correlation_u(9, 0.0, 0.0, 0.0, &u);
    printf("qcorr %s: S = %.12f, P(pi/3) = %.4f over %llu pairs, bad species -> %d (%s)\n",
           qcorr_version(), s, p, (unsigned long long)n, (int)bad, qcorr_last_error());
    return 0;
}
