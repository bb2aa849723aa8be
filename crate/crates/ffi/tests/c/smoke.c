#include <math.h>
#include <stdio.h>
#include "marchetype.h"

/* min -x0 - x1 s.t. x0 + x1 <= 1.5 over the unit box. */
int main(void) {
    size_t rows[] = {0, 0}, cols[] = {0, 1};
    double values[] = {1.0, 1.0}, objective[] = {-1.0, -1.0}, rhs[] = {1.5};
    MtLp *lp = NULL;
    if (mt_lp_from_triplets(1, 2, rows, cols, values, 2, objective, rhs, &lp) != MT_STATUS_OK) {
        fprintf(stderr, "build: %s\n", mt_last_error_message());
        return 1;
    }
    MtSolverConfig config = mt_solver_config_default();
    config.tolerance = 1e-9;
    MtReport *report = NULL;
    if (mt_solve(lp, &config, &report) != MT_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", mt_last_error_message());
        return 1;
    }
    double x[2];
    int ok = mt_report_status(report) == MT_SOLVE_STATUS_OPTIMAL
        && mt_report_copy_primal(report, x, 2) == MT_STATUS_OK
        && fabs(x[0] + x[1] - 1.5) < 1e-7
        && mt_report_copy_primal(report, x, 3) == MT_STATUS_DIMENSION_MISMATCH;
    printf("objective %.9f\n", mt_report_objective(report));
    mt_report_free(report);
    mt_lp_free(lp);
    return ok ? 0 : 2;
}
