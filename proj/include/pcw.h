/* C interface to the protocol-compression workbench (libpcw).
 *
 * All objects are opaque handles; every call returns a status code. Error
 * details for the calling thread are available via pcw_last_error().
 */
#ifndef PCW_H
#define PCW_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct pcw_config pcw_config;
typedef struct pcw_report pcw_report;

enum {
    PCW_OK = 0,
    PCW_CHECK_FAILED = 1, /* the task ran; at least one certificate failed */
    PCW_CONFIG_ERROR = 2,
    PCW_RUNTIME_ERROR = 3,
};

const char* pcw_version(void);
const char* pcw_last_error(void);

pcw_config* pcw_config_new(void);
void pcw_config_free(pcw_config* cfg);

/* Keys: task, instance, report, seed, trials, I, K, delta, beta, eps-log2,
 * bits, n, rounds, block, mode (exact|logfloat), max-transcripts.
 * Unknown keys or unparsable values give PCW_CONFIG_ERROR. */
int pcw_config_set(pcw_config* cfg, const char* key, const char* value);

/* Runs the configured task. On success or check failure a report handle is
 * stored in *out (caller frees). Also writes the report file when the
 * "report" key is set. */
int pcw_run(const pcw_config* cfg, pcw_report** out);

const char* pcw_report_json(const pcw_report* rep);
int pcw_report_pass(const pcw_report* rep);
size_t pcw_report_check_count(const pcw_report* rep);
/* Writes "name\tpass\tlhs\trhs" for check i into buf (truncated to cap). */
int pcw_report_check_line(const pcw_report* rep, size_t i, char* buf, size_t cap);
void pcw_report_free(pcw_report* rep);

/* Writes one of the built-in instance files; name as in the docs. */
int pcw_make_instance(const char* name, const char* path);

/* Space-separated list of built-in instance names (static storage). */
const char* pcw_instance_names(void);

#ifdef __cplusplus
}
#endif

#endif /* PCW_H */
