/* C interface to the nextcat pipeline. All functions are thread-compatible
 * but a single nc_session must not be used from two threads at once.
 *
 * Typical flow:
 *   nc_session* s = NULL;
 *   if (nc_session_open("config.json", NULL, 0, 0, &s) != NC_OK) ...
 *   nc_run_all(s);
 *   nc_session_close(s);
 *
 * Every call returns NC_OK on success; on failure nc_last_error(s) holds a
 * message valid until the next call on the same session. */

#ifndef NEXTCAT_H
#define NEXTCAT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct nc_session nc_session;

typedef enum nc_status {
  NC_OK = 0,
  NC_ERR_CONFIG = 1,       /* invalid or unreadable configuration */
  NC_ERR_IO = 2,           /* file read/write failure */
  NC_ERR_PARSE = 3,        /* malformed artifact content */
  NC_ERR_PREREQUISITE = 4, /* an earlier pipeline stage has not run */
  NC_ERR_DIMENSION = 5,    /* internal shape mismatch */
  NC_ERR_INVALID_ARG = 6,  /* bad argument (e.g. NULL handle) */
  NC_ERR_INTERNAL = 7      /* any other failure */
} nc_status;

/* Opens a session from a JSON config file. config_path may be NULL for the
 * built-in defaults. out_dir_override (may be NULL) replaces the config's
 * output directory; if has_seed is nonzero, seed_override replaces the
 * config's seed. On success *out receives the handle. */
nc_status nc_session_open(const char* config_path, const char* out_dir_override,
                          uint64_t seed_override, int has_seed,
                          nc_session** out);

void nc_session_close(nc_session* session);

/* Message for the most recent failing call; empty string if none. The
 * pointer stays valid until the next call on this session. */
const char* nc_last_error(const nc_session* session);

/* Pipeline stages, mirroring the CLI subcommands. */
nc_status nc_gen_data(nc_session* session);
nc_status nc_preprocess(nc_session* session);
nc_status nc_make_instructions(nc_session* session);
/* model: "baseline", "lstm", or "cnn" */
nc_status nc_train(nc_session* session, const char* model);
nc_status nc_pretrain_lm(nc_session* session);
nc_status nc_finetune_lora(nc_session* session);
nc_status nc_evaluate(nc_session* session);
nc_status nc_report(nc_session* session);
nc_status nc_run_all(nc_session* session);

/* Built-in verification. Returns NC_OK when all checks pass and
 * NC_ERR_INTERNAL when any fails; inject_fault != 0 corrupts one gradient on
 * purpose, so a correct build then reports failure. Check output is
 * appended to the session's log (stderr). */
nc_status nc_selftest(nc_session* session, int inject_fault);

#ifdef __cplusplus
}
#endif

#endif /* NEXTCAT_H */
