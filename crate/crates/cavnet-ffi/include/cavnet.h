#ifndef CAVNET_H
#define CAVNET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * ABI revision; bump on breaking header changes.
 */
#define CAVNET_ABI_VERSION 1

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum CavnetStatus {
    CAVNET_STATUS_OK = 0,
    CAVNET_STATUS_NULL_POINTER = 1,
    CAVNET_STATUS_INVALID_ARGUMENT = 2,
    CAVNET_STATUS_CAPACITY = 3,
    CAVNET_STATUS_NUMERICS = 4,
    CAVNET_STATUS_UTF8 = 5,
} CavnetStatus;

/**
 * Correction tag of a teleportation branch.
 */
typedef enum CavnetCorrection {
    CAVNET_CORRECTION_IDENTITY = 0,
    CAVNET_CORRECTION_PHASE_FLIP = 1,
    CAVNET_CORRECTION_FAILURE = 2,
} CavnetCorrection;

/**
 * Opaque payload handle.
 */
typedef struct CavnetPayload CavnetPayload;

/**
 * Opaque transfer-result handle.
 */
typedef struct CavnetResult CavnetResult;

/**
 * One teleportation measurement branch.
 */
typedef struct CavnetTeleportBranch {
    uint8_t atom1;
    uint8_t atom2;
    double probability;
    enum CavnetCorrection correction;
    /**
     * Valid only when `has_fidelity` is true.
     */
    double corrected_fidelity;
    bool has_fidelity;
} CavnetTeleportBranch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *cavnet_last_error_message(void);

uint32_t cavnet_abi_version(void);

/**
 * Build a payload from split real/imaginary coefficient arrays of length
 * `len` (which must be 2^n for n ≥ 1). The coefficients must be normalized
 * to within 1e-6; they are renormalized exactly.
 *
 * # Safety
 * `re` and `im` must point to `len` readable doubles; `out` must be a valid
 * destination for one pointer.
 */
enum CavnetStatus cavnet_payload_new(const double *re,
                                     const double *im,
                                     size_t len,
                                     struct CavnetPayload **out);

/**
 * Seeded Haar-like random payload on `n_qubits` qubits.
 *
 * # Safety
 * `out` must be a valid destination for one pointer.
 */
enum CavnetStatus cavnet_payload_random(size_t n_qubits, uint64_t seed, struct CavnetPayload **out);

/**
 * # Safety
 * `payload` must come from a `cavnet_payload_*` constructor and not be freed
 * twice; null is ignored.
 */
void cavnet_payload_free(struct CavnetPayload *payload);

/**
 * Deterministic transfer of the payload over `hops` columns of fresh
 * carriers (hops ≥ 1).
 *
 * # Safety
 * `payload` must be a live payload handle; `out` must be a valid destination
 * for one pointer.
 */
enum CavnetStatus cavnet_transfer(const struct CavnetPayload *payload,
                                  size_t hops,
                                  struct CavnetResult **out);

/**
 * Execute a JSON gate schedule (see the schedule format in the README) on
 * the payload.
 *
 * # Safety
 * `schedule_json` must be a NUL-terminated string; `payload` a live handle;
 * `out` a valid destination for one pointer.
 */
enum CavnetStatus cavnet_execute_schedule_json(const char *schedule_json,
                                               const struct CavnetPayload *payload,
                                               struct CavnetResult **out);

/**
 * Fidelity of the destination atoms with the payload; NaN for null input.
 *
 * # Safety
 * `result` must be a live result handle or null.
 */
double cavnet_result_fidelity(const struct CavnetResult *result);

/**
 * Global phase of the final state, when it is defined.
 *
 * # Safety
 * `result` must be a live result handle; `re`/`im` valid destinations.
 */
enum CavnetStatus cavnet_result_global_phase(const struct CavnetResult *result,
                                             double *re,
                                             double *im);

/**
 * Amplitude count of the final register state.
 *
 * # Safety
 * `result` must be a live result handle or null.
 */
size_t cavnet_result_state_len(const struct CavnetResult *result);

/**
 * Copy the final-state amplitudes into split re/im arrays of length `len`
 * (must equal `cavnet_result_state_len`).
 *
 * # Safety
 * `result` must be a live result handle; `re`/`im` must point to `len`
 * writable doubles.
 */
enum CavnetStatus cavnet_result_state_amplitudes(const struct CavnetResult *result,
                                                 double *re,
                                                 double *im,
                                                 size_t len);

/**
 * True when every non-destination atom ended in its excited state.
 *
 * # Safety
 * `result` must be a live result handle or null.
 */
bool cavnet_result_carriers_ok(const struct CavnetResult *result);

/**
 * # Safety
 * `result` must come from a result-producing call and not be freed twice;
 * null is ignored.
 */
void cavnet_result_free(struct CavnetResult *result);

/**
 * Run the probabilistic teleportation of a single-qubit payload. Fills
 * `branches[0..4]` in outcome order (0,0), (0,1), (1,0), (1,1) and writes
 * the total success probability.
 *
 * # Safety
 * `payload` must be a live single-qubit payload handle; `branches` must
 * point to four writable entries; `success_probability` must be writable.
 */
enum CavnetStatus cavnet_teleport(const struct CavnetPayload *payload,
                                  struct CavnetTeleportBranch *branches,
                                  double *success_probability);

/**
 * Amplitudes of the entangled pair produced at interaction angle `theta`
 * (basis |00⟩,|01⟩,|10⟩,|11⟩).
 *
 * # Safety
 * `re` and `im` must point to four writable doubles each.
 */
enum CavnetStatus cavnet_bell_amplitudes(double theta, double *re, double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVNET_H */
