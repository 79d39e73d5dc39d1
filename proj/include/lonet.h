/*
 * lonet — characterization of multi-mode linear optical networks.
 *
 * C API of the shared library. All functions return a lonet_status; output
 * values travel through out-parameters. Objects are opaque handles created
 * and destroyed by the library. On failure the thread-local message behind
 * lonet_last_error() describes what went wrong.
 *
 * Complex and real matrices use the JSON forms
 *   { "n": int, "re": [[...]], "im": [[...]] }   and
 *   { "n": int, "values": [[...]] };
 * loss diagonals are { "mod": [...], "arg": [...] }. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * lonet_string_free().
 */

#ifndef LONET_H
#define LONET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lonet_status {
  LONET_OK = 0,
  LONET_ERR_INVALID_ARGUMENT = 1,
  LONET_ERR_DIMENSION = 2,
  LONET_ERR_NUMERIC = 3, /* non-convergence, infeasibility, degeneracy */
  LONET_ERR_PARSE = 4,
  LONET_ERR_IO = 5,
  LONET_ERR_INTERNAL = 6
} lonet_status;

/* Message of the most recent failure on this thread; never NULL. */
const char* lonet_last_error(void);
/* Pipeline stage of the most recent failure ("simulate", "moduli",
 * "phases", ...) or "" when the failure was not stage-tagged. */
const char* lonet_last_error_stage(void);
const char* lonet_version(void);
void lonet_string_free(char* s);

typedef struct lonet_cmatrix lonet_cmatrix; /* complex n x n matrix */
typedef struct lonet_rmatrix lonet_rmatrix; /* real n x n matrix */
typedef struct lonet_transfer lonet_transfer; /* D1 * U * D2 */
typedef struct lonet_series lonet_series; /* two-beam intensity series */

/* ---- complex matrices ------------------------------------------------- */

/* re/im are row-major n*n arrays; im may be NULL for a real matrix. */
lonet_status lonet_cmatrix_create(int n, const double* re, const double* im,
                                  lonet_cmatrix** out);
lonet_status lonet_cmatrix_haar(int n, uint64_t seed, lonet_cmatrix** out);
lonet_status lonet_cmatrix_tritter3(lonet_cmatrix** out);
/* 3-mode chip: tritter, heater phases theta[3], tritter. */
lonet_status lonet_cmatrix_chip3(const double* theta, lonet_cmatrix** out);
lonet_status lonet_cmatrix_parse(const char* json, lonet_cmatrix** out);
lonet_status lonet_cmatrix_to_json(const lonet_cmatrix* m, char** json_out);
int lonet_cmatrix_dim(const lonet_cmatrix* m);
lonet_status lonet_cmatrix_get(const lonet_cmatrix* m, int i, int j,
                               double* re, double* im);
/* Canonical class representative: real non-negative first row/column,
 * phase of entry (1,1) in [0, pi]. conjugated may be NULL. */
lonet_status lonet_cmatrix_canonicalize(const lonet_cmatrix* m,
                                        lonet_cmatrix** out, int* conjugated);
lonet_status lonet_cmatrix_unitarity_residual(const lonet_cmatrix* m,
                                              double* out);
void lonet_cmatrix_free(lonet_cmatrix* m);

/* ---- real matrices ----------------------------------------------------- */

lonet_status lonet_rmatrix_create(int n, const double* values,
                                  lonet_rmatrix** out);
/* Accepts a plain real-matrix object or a wrapper with a "p" member, so
 * Sinkhorn result files can be used directly. */
lonet_status lonet_rmatrix_parse(const char* json, lonet_rmatrix** out);
lonet_status lonet_rmatrix_to_json(const lonet_rmatrix* m, char** json_out);
int lonet_rmatrix_dim(const lonet_rmatrix* m);
lonet_status lonet_rmatrix_get(const lonet_rmatrix* m, int i, int j,
                               double* out);
void lonet_rmatrix_free(lonet_rmatrix* m);

/* ---- fidelity metrics --------------------------------------------------- */

/* ((1/n) sum_ij sqrt(a_ij b_ij))^2 of two column-normalized matrices. */
lonet_status lonet_fidelity_probability(const lonet_rmatrix* a,
                                        const lonet_rmatrix* b, double* out);
/* |<a_col, b_col>|^2 of the given column of two matrices. */
lonet_status lonet_fidelity_column(const lonet_cmatrix* a,
                                   const lonet_cmatrix* b, int column,
                                   double* out);

/* ---- transfer matrices and simulation ---------------------------------- */

/* Diagonal layers given as modulus/argument arrays of length n; a NULL
 * modulus array means a lossless, phase-free layer. */
lonet_status lonet_transfer_create(const lonet_cmatrix* unitary,
                                   const double* d1_mod, const double* d1_arg,
                                   const double* d2_mod, const double* d2_arg,
                                   lonet_transfer** out);
int lonet_transfer_dim(const lonet_transfer* t);
/* out_re/out_im are caller arrays of length n. */
lonet_status lonet_transfer_apply(const lonet_transfer* t, const double* in_re,
                                  const double* in_im, double* out_re,
                                  double* out_im);
void lonet_transfer_free(lonet_transfer* t);

/* noise_json may be NULL or "{}" for the default noise model:
 * { "relative_intensity_sigma": 1e-3, "thermal_phase_step_sigma": 0.05,
 *   "modulator_phases": [0, 2pi/3, 4pi/3], "gamma": 1.0 }. */
lonet_status lonet_simulate_intensity(const lonet_transfer* t,
                                      const char* noise_json, uint64_t seed,
                                      lonet_rmatrix** out);
lonet_status lonet_simulate_two_beam(const lonet_transfer* t, int h, int k,
                                     const char* noise_json, int n_samples,
                                     uint64_t seed, lonet_series** out);

int lonet_series_samples(const lonet_series* s);
int lonet_series_modes(const lonet_series* s);
/* CSV with header t,phi_M,I_0,...,I_{n-1}. */
lonet_status lonet_series_to_csv(const lonet_series* s, char** csv_out);
lonet_status lonet_series_parse_csv(const char* csv, int h, int k,
                                    lonet_series** out);
void lonet_series_free(lonet_series* s);

/* ---- two-photon oracle -------------------------------------------------- */

/* Probability of coincident photons in outputs i != j for inputs h != k with
 * squared state overlap `overlap` (1 indistinguishable, 0 distinguishable). */
lonet_status lonet_two_photon_probability(const lonet_cmatrix* u, int h, int k,
                                          int i, int j, double overlap,
                                          double* out);
lonet_status lonet_hom_visibility(const lonet_cmatrix* u, int h, int k, int i,
                                  int j, double overlap, double* out);
/* cos(phi_ih - phi_ik - phi_jh + phi_jk). */
lonet_status lonet_bunching_normalized(const lonet_cmatrix* u, int h, int k,
                                       int i, int j, double* out);

/* ---- moduli reconstruction ---------------------------------------------- */

/* Sinkhorn decomposition M = D1 P D2. d1/d2 are caller arrays of length n
 * (either may be NULL); iterations/residual/stalled may be NULL. */
lonet_status lonet_sinkhorn_decompose(const lonet_rmatrix* m, double tol,
                                      int max_iter, lonet_rmatrix** p_out,
                                      double* d1, double* d2, int* iterations,
                                      double* residual, int* stalled);
/* Same, as a JSON document { "p", "d1", "d2", "iterations", "residual",
 * "stalled" }. */
lonet_status lonet_sinkhorn_json(const lonet_rmatrix* m, double tol,
                                 int max_iter, char** result_json);

/* Variance-minimization reconstruction from a settings dataset
 * { "inputs": { "<mode>": [ { "theta": [...], "intensities": [...] }, ... ] } }.
 * Result: { "alpha", "xi2", "eigen_gap", "mean_sums", "input_loss_ratios" }. */
lonet_status lonet_variance_reconstruct(const char* dataset_json,
                                        char** result_json);

/* ---- phase reconstruction ----------------------------------------------- */

/* Normalized cross-correlations of every output pair of one series, as a
 * JSON list of { "h","k","i","j","c","stderr","samples" }. Output pairs
 * without a fringe are skipped. */
lonet_status lonet_estimate_correlations(const lonet_series* s,
                                         char** corrset_json);
/* Merged correlations of several series. */
lonet_status lonet_estimate_correlations_multi(const lonet_series* const* s,
                                               int count, char** corrset_json);
/* Solve (and optionally refine) the cosine system. moduli gates equations on
 * near-zero entries. Result: { "phases", "confidence", "chi2" }. */
lonet_status lonet_solve_phases(const char* corrset_json,
                                const lonet_rmatrix* moduli, int refine,
                                double tol_sign, char** solution_json);
lonet_status lonet_assemble_unitary(const lonet_rmatrix* moduli,
                                    const char* solution_json,
                                    lonet_cmatrix** out);

/* ---- pipeline ----------------------------------------------------------- */

/* Full simulate/reconstruct/compare run from a pipeline config JSON; the
 * report JSON is returned and, when out_dir is non-NULL, measurement files
 * plus report.json are written there. */
lonet_status lonet_pipeline_run(const char* config_json, const char* out_dir,
                                char** report_json);
/* Writes ground_truth.json, intensity_matrix.json, series_h*_k*.csv and
 * settings_dataset.json for a config. */
lonet_status lonet_simulate_dataset(const char* config_json,
                                    const char* out_dir);
/* Compares two documents (reports or matrices, JSON text). */
lonet_status lonet_compare_json(const char* a_json, const char* b_json,
                                char** summary_json);
/* Returns the config JSON with its "seed" field replaced. */
lonet_status lonet_config_with_seed(const char* config_json, uint64_t seed,
                                    char** out_json);
/* Diagnostic sweep CSVs for a chip config. */
lonet_status lonet_plot_data(const char* config_json, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* LONET_H */
