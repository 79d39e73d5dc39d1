#ifndef LONET_MODULI_RECON_HPP
#define LONET_MODULI_RECON_HPP

#include <map>
#include <vector>

#include "lonet/core_model.hpp"
#include "lonet/simulator.hpp"

namespace lonet {

/// Diagonal factorization M = D1 * P * D2 with P doubly stochastic.
///
/// The split of the global scale is fixed by max(d1) = 1; d1 and d2 are the
/// intensity-level loss vectors (entries of the measured matrix divide out
/// as d1_i * d2_j). `stalled` is set when the iteration plateaued above tol
/// and the best iterate was returned instead of a converged one.
struct SinkhornResult {
  RMat p;
  RVec d1;
  RVec d2;
  int iterations = 0;
  double residual = 0.0;
  bool stalled = false;
};

/// Alternating-inverse matrix scaling: x = (M y)^-1, y = (M^T x)^-1 from
/// y = ones, until every row and column sum of X M Y is 1 within tol.
///
/// Throws NumericError immediately for an all-zero row or column, and after
/// max_iter non-converged iterations (the message reports the structural
/// zero pattern, which is the usual culprit). A residual plateau above tol
/// returns the best iterate with `stalled` set instead of failing.
SinkhornResult sinkhorn_decompose(const RMat& m, double tol = 1e-12,
                                  int max_iter = 100000);

/// Output-loss weights recovered from an intensity sweep of a reconfigurable
/// circuit. alpha is proportional to the elementwise inverse of the output
/// losses, normalized to mean 1; xi2 is the variance of the weighted sum at
/// alpha, and eigen_gap the distance to the next eigenvalue of Q.
struct VarianceWeights {
  RVec alpha;
  double xi2 = 0.0;
  double eigen_gap = 0.0;
};

/// Covariance matrix Q of the output-intensity vectors across settings;
/// alpha^T Q alpha is the variance of the weighted sum.
RMat variance_q(const std::vector<RVec>& measurements);

/// Minimizes the variance of sum_j alpha_j M_j over the settings: returns
/// the eigenvector of the smallest eigenvalue of Q, sign-fixed positive and
/// rescaled to mean 1.
///
/// Throws NumericError when the smallest eigenspace is degenerate (more
/// settings needed) or when the sign-fixed eigenvector is not strictly
/// positive (data infeasible for a pure loss model).
VarianceWeights variance_weights(const std::vector<RVec>& measurements);

/// Shared weights plus relative input losses from sweeps grouped by input.
struct MultiInputWeights {
  RVec alpha;
  double xi2 = 0.0;
  double eigen_gap = 0.0;
  std::map<int, double> mean_sums;    // mean weighted sum per input
  std::map<int, double> loss_ratios;  // (D2)_k / (D2)_first
};

/// Minimizes the summed variances over all input groups with one weight
/// vector; the ratio of mean weighted sums per input estimates the relative
/// input losses. Needs >= 2 groups with >= 2 settings each.
MultiInputWeights multi_input_weights(const SettingsDataset& data);

/// Applies the recovered weights to single-setting measurements: column k of
/// P is alpha .* measurements_k, normalized to sum 1. `measured_columns` has
/// one column per entry of `input_modes`.
RMat recover_p_from_weights(const RMat& measured_columns,
                            const std::vector<int>& input_modes,
                            const RVec& alpha);

}  // namespace lonet

#endif
