#include <stdio.h>
#include <stdlib.h>

#include "mzeuler.h"

static int check(MzStatus s, const char *what) {
    if (s != MZ_STATUS_OK) {
        char msg[256];
        mz_last_error_message(msg, sizeof msg, NULL);
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg);
        return 1;
    }
    return 0;
}

int main(void) {
    MzSimulation *sim = NULL;
    if (check(mz_simulation_new_config("preset = desk-check\nverify = false\n", &sim), "create")) return 1;

    double e0 = 0.0, e1 = 0.0, t = 0.0;
    uint64_t done = 0;
    size_t modes = 0;
    if (check(mz_simulation_energy(sim, &e0), "energy")) return 1;
    if (check(mz_simulation_step(sim, 10, &done), "step")) return 1;
    if (check(mz_simulation_time(sim, &t), "time")) return 1;
    if (check(mz_simulation_energy(sim, &e1), "energy")) return 1;
    if (check(mz_simulation_mode_count(sim, &modes), "mode count")) return 1;

    double *state = malloc(6 * modes * sizeof *state);
    if (check(mz_simulation_copy_state(sim, state, 6 * modes, NULL), "copy state")) return 1;
    double sum = 0.0;
    for (size_t i = 0; i < 6 * modes; i++) sum += state[i] * state[i];
    free(state);
    mz_simulation_free(sim);

    MzStatus bad = mz_simulation_new_preset("missing", &sim);
    printf("steps=%llu t=%.6f E0=%.12e E=%.12e half_sum=%.12e bad=%d\n",
           (unsigned long long)done, t, e0, e1, 0.5 * sum, (int)bad);
    return bad == MZ_STATUS_CONFIG ? 0 : 1;
}
