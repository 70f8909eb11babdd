#ifndef DVQE_H
#define DVQE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum DvqeStatus {
  DVQE_STATUS_OK = 0,
  DVQE_STATUS_NULL_POINTER = 1,
  DVQE_STATUS_INVALID_ARGUMENT = 2,
  DVQE_STATUS_DIMENSION = 3,
  DVQE_STATUS_CAPACITY = 4,
  DVQE_STATUS_PARSE = 5,
  DVQE_STATUS_CONFIG = 6,
  DVQE_STATUS_FIT = 7,
  DVQE_STATUS_NUMERICAL = 8,
  DVQE_STATUS_IO = 9,
  DVQE_STATUS_PANIC = 10,
} DvqeStatus;

// Lindblad model: Hamiltonian plus jump operators.
typedef struct DvqeModel DvqeModel;

// Result of a variational optimization.
typedef struct DvqeSolution DvqeSolution;

// Density matrix of `n` qubits.
typedef struct DvqeState DvqeState;

// Options for [`dvqe_solve`]; start from [`dvqe_solve_options_default`].
typedef struct DvqeSolveOptions {
  // Entangled eigenvalue circuit when true, one rotation per qubit otherwise.
  bool entangled;
  uint32_t d1;
  uint32_t d2;
  // Random restarts in addition to the all-zero start.
  uint32_t restarts;
  uint32_t sweeps_max;
  double tol;
  uint64_t seed;
} DvqeSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dvqe_version(void);

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t dvqe_last_error_message(char *buf, size_t len);

// Transverse-field Ising chain with damping `gamma1` and dephasing `gamma2`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum DvqeStatus dvqe_model_tfim(size_t n_sites,
                                double g,
                                double gamma1,
                                double gamma2,
                                bool periodic,
                                struct DvqeModel **out);

// Coupled-cavity chain with two-site dissipation of phase `theta`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum DvqeStatus dvqe_model_cqed(size_t n_sites,
                                double mu,
                                double gamma1,
                                double gamma2,
                                double theta,
                                struct DvqeModel **out);

// Model from Pauli-sum text (one `(re,im) LABEL` term per line) for the
// Hamiltonian and each of the `n_jumps` jump operators.
//
// # Safety
// String pointers must be valid NUL-terminated strings; `jumps` and `rates`
// must hold `n_jumps` entries (either may be null when `n_jumps` is 0).
enum DvqeStatus dvqe_model_from_pauli_text(size_t n_sites,
                                           const char *hamiltonian,
                                           const char *const *jumps,
                                           const double *rates,
                                           size_t n_jumps,
                                           struct DvqeModel **out);

// Model section of a TOML experiment config.
//
// # Safety
// `toml` must be a valid NUL-terminated string; `out` a valid handle slot.
enum DvqeStatus dvqe_model_from_config(const char *toml, struct DvqeModel **out);

// Number of sites, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t dvqe_model_n_sites(const struct DvqeModel *model);

// # Safety
// `model` must be null or a handle not yet freed.
void dvqe_model_free(struct DvqeModel *model);

// Exact steady state by dense diagonalization. `gap` and `degenerate` may be
// null.
//
// # Safety
// `model` must be a live handle; `out` a valid handle slot.
enum DvqeStatus dvqe_exact_ness(const struct DvqeModel *model,
                                struct DvqeState **out,
                                double *gap,
                                bool *degenerate);

// Matrix dimension `2^n`, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t dvqe_state_dim(const struct DvqeState *state);

// Copies the matrix row-major into `re` and `im`, each of `len = dim²`.
//
// # Safety
// `re` and `im` must point to `len` writable doubles.
enum DvqeStatus dvqe_state_copy(const struct DvqeState *state, double *re, double *im, size_t len);

// `Tr(ρ O)` for a Hermitian observable given as Pauli-sum text.
//
// # Safety
// `observable` must be a valid NUL-terminated string; `out` writable.
enum DvqeStatus dvqe_state_expectation(const struct DvqeState *state,
                                       const char *observable,
                                       double *out);

// Uhlmann fidelity `(Tr√(√ρ σ √ρ))²`.
//
// # Safety
// Both handles must be live; `out` writable.
enum DvqeStatus dvqe_state_fidelity(const struct DvqeState *a,
                                    const struct DvqeState *b,
                                    double *out);

// # Safety
// `state` must be null or a handle not yet freed.
void dvqe_state_free(struct DvqeState *state);

// Decoupled ansatz with one basis layer, two restarts and default stopping.
struct DvqeSolveOptions dvqe_solve_options_default(void);

// Minimizes the exact cost over the ansatz with sequential single-parameter
// updates.
//
// # Safety
// `model` and `options` must be valid; `out` a valid handle slot.
enum DvqeStatus dvqe_solve(const struct DvqeModel *model,
                           const struct DvqeSolveOptions *options,
                           struct DvqeSolution **out);

// Final cost, or NaN for a null handle.
//
// # Safety
// `sol` must be null or a live handle.
double dvqe_solution_cost(const struct DvqeSolution *sol);

// # Safety
// `sol` must be null or a live handle.
bool dvqe_solution_converged(const struct DvqeSolution *sol);

// # Safety
// `sol` must be null or a live handle.
size_t dvqe_solution_n_params(const struct DvqeSolution *sol);

// Copies the optimized angles into `buf` of exactly `len` entries.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum DvqeStatus dvqe_solution_params(const struct DvqeSolution *sol, double *buf, size_t len);

// New state handle holding the ansatz density matrix.
//
// # Safety
// `sol` must be a live handle; `out` a valid handle slot.
enum DvqeStatus dvqe_solution_state(const struct DvqeSolution *sol, struct DvqeState **out);

// # Safety
// `sol` must be null or a handle not yet freed.
void dvqe_solution_free(struct DvqeSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DVQE_H */
