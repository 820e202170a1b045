#include <math.h>
#include <stdio.h>

#include "mersp.h"

int main(void) {
    const double c[9] = {1, 0, 1, 0, 1, 1, 1, 1, 2};
    MerspCovariance *cov = NULL;
    MerspInstance *inst = NULL;
    bool cond7 = true;
    double value = 0.0;
    size_t subset[1] = {0};

    if (mersp_covariance_new(c, 2, 1, &cov) != MERSP_STATUS_OK) return 1;
    if (mersp_covariance_condition7(cov, &cond7) != MERSP_STATUS_OK || cond7) return 2;
    if (mersp_instance_new(cov, 1, MERSP_ORIENTATION_ORIGINAL, &inst) != MERSP_STATUS_OK) return 3;
    if (mersp_instance_objective(inst, subset, 1, &value) != MERSP_STATUS_OK) return 4;
    if (fabs(value - log(2.0)) > 1e-12) return 5;
    if (mersp_instance_new(cov, 1, MERSP_ORIENTATION_COMPLEMENTARY, &inst) != MERSP_STATUS_NOT_POSITIVE_DEFINITE) return 6;
    printf("%s\n", mersp_last_error());

    mersp_instance_free(inst);
    mersp_covariance_free(cov);
    return 0;
}
