/*
 * qmark C API: verification workbench for quantum Markov states on finite
 * windows of the fermion chain.
 *
 * All entry points return a status code:
 *   0  success, all checks passed
 *   1  ran to completion, at least one check failed
 *   2  configuration error
 *   3  local-faithfulness violation (vanishing density eigenvalue)
 *   4  internal invariant violation
 *
 * A session holds one configuration and the report of the last verb executed.
 * Sessions are not thread-safe; use one per thread.
 */

#ifndef QMARK_H
#define QMARK_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct qmk_session qmk_session;

enum qmk_status {
    QMK_OK = 0,
    QMK_E_CHECKS_FAILED = 1,
    QMK_E_CONFIG = 2,
    QMK_E_FAITHFULNESS = 3,
    QMK_E_INTERNAL = 4
};

/* Session lifecycle. qmk_create returns NULL only on allocation failure. */
qmk_session* qmk_create(void);
void qmk_destroy(qmk_session* s);

/* Human-readable message for the most recent failure on this session. */
const char* qmk_last_error(const qmk_session* s);

/* Configuration: string key/value pairs. Recognized keys:
 *   family   trivial|ising|hopping|product|two_block|diag_lift|from_files
 *   L        window length (1..8)
 *   alpha beta gamma delta h          ising / hopping parameters
 *   empty_probability                 product family
 *   t_hop t_vv                        two_block family
 *   pi_stay1 pi_stay2                 diag_lift transition matrix diagonal
 *   files_dir                         from_files input directory
 *   suites   comma list of algebra,expectations,build,markov,structure,
 *            hamiltonian,mixing or "all"
 *   seed     unsigned integer
 *   out      report output path
 *   tol.<name>  tolerance override
 */
int qmk_config_set(qmk_session* s, const char* key, const char* value);
/* Loads key: value lines; existing values are overwritten. */
int qmk_config_load_file(qmk_session* s, const char* path);
void qmk_config_reset(qmk_session* s);

/* Verbs. Each stores its report on the session. */
int qmk_run(qmk_session* s);
int qmk_demo(qmk_session* s, const char* out_dir);
int qmk_verify_files(qmk_session* s, const char* dir);
int qmk_hamiltonian(qmk_session* s);
int qmk_correlations(qmk_session* s);
int qmk_disintegrate(qmk_session* s);

/* Last report as structured text; valid until the next verb or destroy. */
const char* qmk_report_text(const qmk_session* s);
/* Named CSV attachment ("correlations", "classical"); NULL if absent. */
const char* qmk_report_csv(const qmk_session* s, const char* name);
/* Writes the report text (and CSV attachments next to it) to a path. */
int qmk_report_write(const qmk_session* s, const char* path);

const char* qmk_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QMARK_H */
