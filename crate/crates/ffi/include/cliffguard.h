#ifndef CLIFFGUARD_H
#define CLIFFGUARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Integer codes for `mode` setters.
 */
#define CG_MODE_DETERMINISTIC 0

#define CG_MODE_STOCHASTIC 1

#define CG_RULE_BASE_RELATIVE 0

#define CG_RULE_NO_BASE 1

#define CG_RULE_ASPO_FLIP 2

#define CG_ESTIMATOR_SCORE_FUNCTION 0

#define CG_ESTIMATOR_IS_WEIGHTED 1

#define CG_AGG_MEAN 0

#define CG_AGG_GEOMETRIC_MEAN 1

#define CG_AGG_MIN 2

#define CG_AGG_P5 3

#define CG_AGG_MAX_OF_PROMPT_MEANS 4

#define CG_AGG_MAX 5

#define CG_MIDPOINT_FRACTION_OF_PEAK 0

#define CG_MIDPOINT_FIXED_THRESHOLD 1

#define CG_ONSET_LAST_ABOVE 2

#define CG_COLLAPSE_FIRST_BELOW 3

/**
 * Failure-mode codes written by [`cg_parse_strict_k`]; 0 means valid.
 */
#define CG_FAIL_NONE 0

#define CG_FAIL_MALFORMED 1

#define CG_FAIL_RUNAWAY_PREFIX 2

#define CG_FAIL_LENGTH_MISMATCH 3

#define CG_FAIL_TRUNCATION_K_MINUS_1 4

#define CG_FAIL_HALLUCINATED_ID 5

#define CG_FAIL_DUPLICATE_ID 6

#define CG_FAIL_MISSING_ID 7

#define CG_FAIL_NON_NUMERIC_SCORE 8

typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_DOMAIN = 2,
  CG_STATUS_CONFIG = 3,
  CG_STATUS_NO_CROSSING = 4,
  CG_STATUS_DIGEST_MISMATCH = 5,
  /**
   * Malformed input text (UTF-8, JSON, trace lines).
   */
  CG_STATUS_PARSE = 6,
  CG_STATUS_OTHER = 7,
  CG_STATUS_PANIC = 8,
} CgStatus;

/**
 * Opaque strict-K list contract.
 */
typedef struct CgContract CgContract;

/**
 * Opaque flow configuration.
 */
typedef struct CgFlowConfig CgFlowConfig;

/**
 * Opaque per-prompt trace set.
 */
typedef struct CgTraceSet CgTraceSet;

/**
 * Opaque simulated trajectory.
 */
typedef struct CgTrajectory CgTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or "" if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cg_version(void);

/**
 * Clip-safety threshold; writes `INFINITY` when no finite threshold exists.
 *
 * # Safety
 * `out_value` must be a valid pointer to a `double`.
 */
enum CgStatus cg_lam_star(double p, double b, double c, double *out_value);

/**
 * Clip boundary `q_c = 1 - (1-p)/c`.
 *
 * # Safety
 * `out_value` must be a valid pointer to a `double`.
 */
enum CgStatus cg_clip_boundary(double p, double b, double c, double *out_value);

/**
 * Sharpened fixed point at `lambda`.
 *
 * # Safety
 * `out_value` must be a valid pointer to a `double`.
 */
enum CgStatus cg_fixed_point(double p, double b, double c, double lambda, double *out_value);

/**
 * Threshold shifted by an entropy bonus of weight `gamma`.
 *
 * # Safety
 * `out_value` must be a valid pointer to a `double`.
 */
enum CgStatus cg_lam_star_entropy(double p, double b, double c, double gamma, double *out_value);

/**
 * Sensitivities of the threshold to `p` and to `logit(b)`.
 *
 * # Safety
 * `out_dp` and `out_dlogitb` must be valid pointers to `double`.
 */
enum CgStatus cg_lam_star_sensitivity(double p,
                                      double b,
                                      double c,
                                      double *out_dp,
                                      double *out_dlogitb);

/**
 * New flow config with default step size, budget and `q0 = b`.
 *
 * # Safety
 * `out_cfg` must be a valid pointer; on success it receives a handle owned
 * by the caller.
 */
enum CgStatus cg_flow_config_new(double p,
                                 double b,
                                 double c,
                                 double lambda,
                                 struct CgFlowConfig **out_cfg);

/**
 * # Safety
 * `cfg` must come from [`cg_flow_config_new`] and not be used afterwards.
 */
void cg_flow_config_free(struct CgFlowConfig *cfg);

/**
 * Step size. Invalid values leave the config unchanged.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_eta(struct CgFlowConfig *cfg, double eta);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_steps(struct CgFlowConfig *cfg, uint64_t steps);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_q0(struct CgFlowConfig *cfg, double q0);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_seed(struct CgFlowConfig *cfg, uint64_t seed);

/**
 * `CG_MODE_*`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_mode(struct CgFlowConfig *cfg, int mode);

/**
 * `CG_RULE_*`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_update_rule(struct CgFlowConfig *cfg, int rule);

/**
 * `CG_ESTIMATOR_*`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_estimator(struct CgFlowConfig *cfg, int estimator);

/**
 * KL-to-base regularizer; replaces any other regularizer.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_kl(struct CgFlowConfig *cfg, double beta);

/**
 * Entropy-bonus regularizer; replaces any other regularizer.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_entropy(struct CgFlowConfig *cfg, double gamma);

/**
 * Linear lambda warmup; replaces any other regularizer.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CgStatus cg_flow_config_set_warmup(struct CgFlowConfig *cfg, uint64_t warmup_steps);

/**
 * Run the configured flow.
 *
 * # Safety
 * `cfg` must be a live handle and `out_traj` a valid pointer; on success it
 * receives a handle owned by the caller.
 */
enum CgStatus cg_simulate(const struct CgFlowConfig *cfg, struct CgTrajectory **out_traj);

/**
 * # Safety
 * `traj` must come from [`cg_simulate`] and not be used afterwards.
 */
void cg_trajectory_free(struct CgTrajectory *traj);

/**
 * Number of recorded points (`steps + 1`), 0 for a null handle.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
uintptr_t cg_trajectory_len(const struct CgTrajectory *traj);

/**
 * Copy up to `cap` modal masses into `buf`; returns the number copied.
 *
 * # Safety
 * `traj` must be a live handle and `buf` must hold `cap` doubles.
 */
uintptr_t cg_trajectory_copy_q(const struct CgTrajectory *traj, double *buf, uintptr_t cap);

/**
 * Copy up to `cap` logits into `buf`; returns the number copied.
 *
 * # Safety
 * `traj` must be a live handle and `buf` must hold `cap` doubles.
 */
uintptr_t cg_trajectory_copy_theta(const struct CgTrajectory *traj, double *buf, uintptr_t cap);

/**
 * Final modal mass, NaN for a null handle.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
double cg_trajectory_final_q(const struct CgTrajectory *traj);

/**
 * Clip events over the run.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
uint64_t cg_trajectory_clip_events(const struct CgTrajectory *traj);

/**
 * Returns 1 and writes the first-passage step when the run crossed the
 * clip boundary, 0 otherwise.
 *
 * # Safety
 * `traj` must be a live handle or null; `out_step` may be null.
 */
int cg_trajectory_first_passage(const struct CgTrajectory *traj, uint64_t *out_step);

/**
 * Contract over `n_ids` expected ids. `id_key` may be null for `"review_id"`.
 *
 * # Safety
 * `ids` must point to `n_ids` NUL-terminated UTF-8 strings; `out_contract`
 * must be valid and receives a caller-owned handle.
 */
enum CgStatus cg_contract_new(const char *const *ids,
                              uintptr_t n_ids,
                              const char *id_key,
                              struct CgContract **out_contract);

/**
 * Require scores in `[lo, hi]`.
 *
 * # Safety
 * `contract` must be a live handle.
 */
enum CgStatus cg_contract_set_score_range(struct CgContract *contract, double lo, double hi);

/**
 * # Safety
 * `contract` must come from [`cg_contract_new`] and not be used afterwards.
 */
void cg_contract_free(struct CgContract *contract);

/**
 * Parse raw model text; writes a `CG_FAIL_*` code and the FMC flag.
 *
 * # Safety
 * `contract` must be a live handle, `text` a NUL-terminated UTF-8 string,
 * `out_failure` valid; `out_fmc` may be null.
 */
enum CgStatus cg_parse_strict_k(const struct CgContract *contract,
                                const char *text,
                                int *out_failure,
                                int *out_fmc);

/**
 * Apply a threshold rule (`CG_MIDPOINT_*`, `CG_ONSET_*`, `CG_COLLAPSE_*`)
 * to `n` sorted `(lambda, value)` points. Returns `NoCrossing` when the
 * rule is never satisfied.
 *
 * # Safety
 * `lambdas` and `values` must each hold `n` doubles; `out_value` must be valid.
 */
enum CgStatus cg_threshold_rule(const double *lambdas,
                                const double *values,
                                uintptr_t n,
                                int kind,
                                double level,
                                double *out_value);

/**
 * Parse a trace set from JSONL text.
 *
 * # Safety
 * `jsonl` must be a NUL-terminated UTF-8 string; `out_traces` must be valid
 * and receives a caller-owned handle.
 */
enum CgStatus cg_trace_set_from_jsonl(const char *jsonl, struct CgTraceSet **out_traces);

/**
 * # Safety
 * `traces` must come from [`cg_trace_set_from_jsonl`] and not be used afterwards.
 */
void cg_trace_set_free(struct CgTraceSet *traces);

/**
 * Aggregate (`CG_AGG_*`) over positions with modal mass `>= tau`.
 *
 * # Safety
 * `traces` must be a live handle and `out_value` valid.
 */
enum CgStatus cg_trace_set_aggregate(const struct CgTraceSet *traces,
                                     int kind,
                                     double tau,
                                     double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLIFFGUARD_H */
