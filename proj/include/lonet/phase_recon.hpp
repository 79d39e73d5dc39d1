#ifndef LONET_PHASE_RECON_HPP
#define LONET_PHASE_RECON_HPP

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lonet/core_model.hpp"
#include "lonet/simulator.hpp"

namespace lonet {

/// Index of one normalized cross-correlation: beams in (h, k), detectors on
/// (i, j). Stored with h < k and i < j (the correlation is symmetric under
/// both swaps).
struct CorrelationKey {
  int h = 0, k = 1, i = 0, j = 1;

  static CorrelationKey normalized(int h, int k, int i, int j);
  friend bool operator<(const CorrelationKey& a, const CorrelationKey& b) {
    return std::tie(a.h, a.k, a.i, a.j) < std::tie(b.h, b.k, b.i, b.j);
  }
  friend bool operator==(const CorrelationKey& a, const CorrelationKey& b) {
    return std::tie(a.h, a.k, a.i, a.j) == std::tie(b.h, b.k, b.i, b.j);
  }
};

struct CorrelationEstimate {
  double c = 0.0;       // clamped to [-1, 1]
  double stderr = 0.0;  // block-jackknife standard error
  int samples = 0;
};

struct CorrelationSet {
  std::map<CorrelationKey, CorrelationEstimate> entries;

  void insert(const CorrelationKey& key, const CorrelationEstimate& e) {
    entries[key] = e;
  }
  std::optional<CorrelationEstimate> find(int h, int k, int i, int j) const;
  void merge(const CorrelationSet& other);
};

/// Normalized cross-correlations c = sigma_ij / sqrt(sigma_ii sigma_jj) for
/// the requested output pairs of one two-beam series, with leave-one-block-out
/// jackknife standard errors (20 blocks).
///
/// Needs >= 100 samples. A pair whose self-correlation vanishes (no fringe
/// on that output) raises NumericError naming the pair.
CorrelationSet estimate_correlations(const TwoBeamSeries& series,
                                     const std::vector<std::pair<int, int>>& pairs);

/// All output pairs (i < j) of the series.
CorrelationSet estimate_correlations(const TwoBeamSeries& series);

/// Internal phases in the canonical gauge (first row and column pinned to 0).
struct PhaseSolution {
  RMat phases;      // n x n, radians, entries wrapped to (-pi, pi]
  RMat confidence;  // per-entry sign confidence in [0, 1]
  double chi2 = 0.0;
};

/// Solves the cosine equation system for the internal phases.
///
/// Magnitudes come from c(0,k,0,j) = cos(phi_jk); signs are resolved against
/// phi_11 (pinned non-negative) through the (0,1,1,j), (1,k,0,1) and
/// (1,k,1,j) correlations. An equation whose moduli vanish (per the supplied
/// moduli matrix) is skipped and the entry left at 0 with confidence 0; a
/// missing-but-measurable correlation raises NumericError listing the
/// required key. Entries with |phi| within tol_sign of 0 or pi keep sign +
/// but get confidence 0 (refinement disambiguates them).
PhaseSolution solve_phases(const CorrelationSet& correlations,
                           const RMat& moduli, double tol_sign = 0.05);

/// Weighted least-squares refinement of the phases over every measured
/// correlation: minimizes sum [(c - cos(phi_ih - phi_ik - phi_jh + phi_jk))
/// / stderr]^2 with the first row and column pinned. Zero-confidence signs
/// are disambiguated by refitting both branches and keeping the lower chi2.
/// Never returns a solution with higher chi2 than its input. chi2 is the
/// reduced chi-square.
PhaseSolution refine_phases(const PhaseSolution& initial,
                            const CorrelationSet& correlations,
                            const RMat& moduli);

struct AssembledUnitary {
  CanonicalUnitary canonical;
  double unitarity_residual = 0.0;  // quality metric, not enforced
};

/// U_jk = sqrt(P_jk) * exp(i phi_jk).
AssembledUnitary assemble_unitary(const RMat& moduli,
                                  const PhaseSolution& phases);

/// Reduced chi-square of a correlation set against a phase matrix.
double correlation_chi2(const CorrelationSet& correlations, const RMat& phases,
                        const RMat& moduli, int free_parameters);

}  // namespace lonet

#endif
