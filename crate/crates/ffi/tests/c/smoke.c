#include <math.h>
#include <stdio.h>
#include "starjunction.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    SjProblem *p = NULL;
    if (sj_problem_from_file(argv[1], &p) != SJ_STATUS_OK) {
        fprintf(stderr, "%s\n", sj_last_error_message());
        return 11;
    }
    if (sj_problem_regime(p) != SJ_REGIME_A) return 12;
    double mu = 0.0;
    if (sj_mu(p, 0.1, &mu) != SJ_STATUS_OK || fabs(mu - pow(0.1, 1.375)) > 1e-15) return 13;
    if (sj_problem_set_time_steps(p, 4) != SJ_STATUS_OK) return 14;

    double eps[3] = {0.2, 0.1, 0.05};
    SjStudyOptions o = sj_study_options_default();
    o.synthetic = 1;
    o.synthetic_c = 1.0;
    o.synthetic_p = 2.0;
    SjReport *r = NULL;
    if (sj_convergence_run(p, eps, 3, &o, NULL, &r) != SJ_STATUS_OK) {
        fprintf(stderr, "%s\n", sj_last_error_message());
        return 15;
    }
    double order = 0.0;
    if (sj_report_order(r, SJ_COLUMN_MAX_L2, &order) != SJ_STATUS_OK || fabs(order - 2.0) > 1e-6) return 16;
    SjErrorRow row;
    if (sj_report_rows(r) != 3 || sj_report_row(r, 2, &row) != SJ_STATUS_OK || !row.ok) return 17;
    if (sj_report_row(r, 3, &row) != SJ_STATUS_INVALID_ARGUMENT) return 18;

    double bad[2] = {0.1, 0.2};
    SjReport *r2 = NULL;
    if (sj_convergence_run(p, bad, 2, &o, NULL, &r2) != SJ_STATUS_CONFIG || r2 != NULL) return 19;

    sj_report_free(r);
    sj_problem_free(p);
    printf("order %.6f\n", order);
    return 0;
}
