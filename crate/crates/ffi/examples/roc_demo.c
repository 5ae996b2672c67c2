/* Runs a small ROC sweep through the C API and prints one line per curve. */
#include <stdio.h>

#include "jrcsim.h"

static int check(JrcStatus s, const char *what) {
    if (s != JRC_STATUS_OK) {
        const char *msg = jrc_last_error_message();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "");
        return 1;
    }
    return 0;
}

int main(void) {
    JrcConfig *cfg = NULL;
    JrcRoc *roc = NULL;
    JrcTrialResult trial;
    if (check(jrc_config_new_default(&cfg), "config")) return 1;
    if (check(jrc_config_set(cfg, "montecarlo.n_trials=20"), "set")) return 1;
    if (check(jrc_config_set(cfg, "montecarlo.gamma_count=5"), "set")) return 1;
    if (jrc_config_set(cfg, "scenario.colour=red") != JRC_STATUS_CONFIG) return 1;
    if (check(jrc_run_trial(cfg, 0, &trial), "trial")) return 1;
    printf("version %s trial valid %d score %g\n", jrc_version(), trial.valid, trial.score);
    if (check(jrc_roc_run(cfg, 2, &roc), "roc")) return 1;
    for (size_t c = 0; c < jrc_roc_curve_count(roc); ++c) {
        JrcCurveInfo info;
        JrcRocPoint first, last;
        if (check(jrc_roc_curve_info(roc, c, &info), "info")) return 1;
        if (check(jrc_roc_point(roc, c, 0, &first), "point")) return 1;
        if (check(jrc_roc_point(roc, c, info.n_points - 1, &last), "point")) return 1;
        printf("snr %g genie %d points %zu ends (%g,%g) (%g,%g)\n", info.snr_db, info.genie,
               info.n_points, first.p_fa, first.p_d, last.p_fa, last.p_d);
    }
    jrc_roc_free(roc);
    jrc_config_free(cfg);
    return 0;
}
