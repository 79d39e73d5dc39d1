#include "lonet/phase_recon.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "lonet/error.hpp"

namespace lonet {

namespace {

constexpr int kJackknifeBlocks = 20;
constexpr int kMinSamples = 100;

// Probability entries at or below this are treated as structural zeros:
// correlations whose self-fluctuations they control carry no phase
// information and their equations are skipped.
constexpr double kModuliGate = 1e-10;

// Weight floor for synthetic correlation sets with zero quoted error.
constexpr double kStderrFloor = 1e-9;

// Sign branches below this confidence are re-fitted on both branches.
constexpr double kAmbiguousConfidence = 0.05;

double clamp_corr(double c) { return std::clamp(c, -1.0, 1.0); }

// Correlation of columns i and j of `data` over the samples whose block
// index differs from `skip_block` (-1 keeps everything). Two-pass for
// cancellation-free variances. Returns false when a self-fluctuation
// vanishes.
bool column_correlation(const RMat& data, int i, int j, int n_blocks,
                        int skip_block, double* out) {
  const int n = static_cast<int>(data.rows());
  const auto block_of = [&](int t) {
    return std::min(n_blocks - 1, t * n_blocks / n);
  };
  double mi = 0.0, mj = 0.0;
  int count = 0;
  for (int t = 0; t < n; ++t) {
    if (block_of(t) == skip_block) continue;
    mi += data(t, i);
    mj += data(t, j);
    ++count;
  }
  if (count < 2) return false;
  mi /= count;
  mj /= count;
  double sij = 0.0, sii = 0.0, sjj = 0.0;
  for (int t = 0; t < n; ++t) {
    if (block_of(t) == skip_block) continue;
    const double di = data(t, i) - mi;
    const double dj = data(t, j) - mj;
    sij += di * dj;
    sii += di * di;
    sjj += dj * dj;
  }
  sij /= count;
  sii /= count;
  sjj /= count;
  const double floor_i = 1e-300 + 1e-18 * mi * mi;
  const double floor_j = 1e-300 + 1e-18 * mj * mj;
  if (sii <= floor_i || sjj <= floor_j) return false;
  *out = sij / std::sqrt(sii * sjj);
  return true;
}

}  // namespace

CorrelationKey CorrelationKey::normalized(int h, int k, int i, int j) {
  CorrelationKey key;
  key.h = std::min(h, k);
  key.k = std::max(h, k);
  key.i = std::min(i, j);
  key.j = std::max(i, j);
  return key;
}

std::optional<CorrelationEstimate> CorrelationSet::find(int h, int k, int i,
                                                        int j) const {
  auto it = entries.find(CorrelationKey::normalized(h, k, i, j));
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

void CorrelationSet::merge(const CorrelationSet& other) {
  for (const auto& [key, e] : other.entries) entries[key] = e;
}

CorrelationSet estimate_correlations(
    const TwoBeamSeries& series, const std::vector<std::pair<int, int>>& pairs) {
  const int n_samples = series.samples();
  const int n = series.modes();
  if (n_samples < kMinSamples)
    throw InvalidArgumentError("estimate_correlations: need >= " +
                               std::to_string(kMinSamples) + " samples, got " +
                               std::to_string(n_samples));

  CorrelationSet out;
  for (const auto& [i, j] : pairs) {
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw DimensionError("estimate_correlations: output index out of range");
    if (i == j)
      throw InvalidArgumentError("estimate_correlations: output pair must differ");

    double c_full = 0.0;
    if (!column_correlation(series.intensities, i, j, kJackknifeBlocks, -1,
                            &c_full))
      throw NumericError(
          "estimate_correlations: vanishing self-correlation for outputs (" +
          std::to_string(i) + "," + std::to_string(j) + ") of beams (" +
          std::to_string(series.h) + "," + std::to_string(series.k) + ")");

    double leave_out[kJackknifeBlocks];
    double mean_lo = 0.0;
    for (int b = 0; b < kJackknifeBlocks; ++b) {
      if (!column_correlation(series.intensities, i, j, kJackknifeBlocks, b,
                              &leave_out[b]))
        throw NumericError(
            "estimate_correlations: degenerate jackknife block for outputs (" +
            std::to_string(i) + "," + std::to_string(j) + ")");
      mean_lo += leave_out[b];
    }
    mean_lo /= kJackknifeBlocks;
    double var = 0.0;
    for (double v : leave_out) var += (v - mean_lo) * (v - mean_lo);
    var *= static_cast<double>(kJackknifeBlocks - 1) / kJackknifeBlocks;

    CorrelationEstimate e;
    e.c = clamp_corr(c_full);
    e.stderr = std::sqrt(var);
    e.samples = n_samples;
    out.insert(CorrelationKey::normalized(series.h, series.k, i, j), e);
  }
  return out;
}

CorrelationSet estimate_correlations(const TwoBeamSeries& series) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < series.modes(); ++i)
    for (int j = i + 1; j < series.modes(); ++j) pairs.emplace_back(i, j);
  return estimate_correlations(series, pairs);
}

namespace {

bool equation_valid(const RMat& moduli, int h, int k, int i, int j) {
  return moduli(i, h) > kModuliGate && moduli(i, k) > kModuliGate &&
         moduli(j, h) > kModuliGate && moduli(j, k) > kModuliGate;
}

// Gated lookup shared by the solver steps: returns the correlation when the
// equation is informative, nullopt when its moduli vanish, and records the
// key when the data should exist but does not.
std::optional<double> fetch(const CorrelationSet& corr, const RMat& moduli,
                            int h, int k, int i, int j,
                            std::vector<CorrelationKey>* missing) {
  if (!equation_valid(moduli, h, k, i, j)) return std::nullopt;
  if (auto e = corr.find(h, k, i, j)) return e->c;
  missing->push_back(CorrelationKey::normalized(h, k, i, j));
  return std::nullopt;
}

struct Equation {
  int h, k, i, j;
  double c;
  double weight;  // 1 / stderr
};

std::vector<Equation> gather_equations(const CorrelationSet& corr,
                                       const RMat& moduli) {
  std::vector<Equation> eqs;
  for (const auto& [key, e] : corr.entries) {
    if (!equation_valid(moduli, key.h, key.k, key.i, key.j)) continue;
    eqs.push_back({key.h, key.k, key.i, key.j, e.c,
                   1.0 / std::max(e.stderr, kStderrFloor)});
  }
  return eqs;
}

double phase_combination(const RMat& phases, const Equation& eq) {
  return phases(eq.i, eq.h) - phases(eq.i, eq.k) - phases(eq.j, eq.h) +
         phases(eq.j, eq.k);
}

double chi2_sum(const std::vector<Equation>& eqs, const RMat& phases) {
  double total = 0.0;
  for (const Equation& eq : eqs) {
    const double r = (eq.c - std::cos(phase_combination(phases, eq))) * eq.weight;
    total += r * r;
  }
  return total;
}

}  // namespace

double correlation_chi2(const CorrelationSet& correlations, const RMat& phases,
                        const RMat& moduli, int free_parameters) {
  const auto eqs = gather_equations(correlations, moduli);
  const int dof = std::max<int>(1, static_cast<int>(eqs.size()) - free_parameters);
  return chi2_sum(eqs, phases) / dof;
}

PhaseSolution solve_phases(const CorrelationSet& correlations,
                           const RMat& moduli, double tol_sign) {
  if (moduli.rows() != moduli.cols() || moduli.rows() < 2)
    throw DimensionError("solve_phases: moduli matrix must be square, n >= 2");
  const int n = static_cast<int>(moduli.rows());

  PhaseSolution sol;
  sol.phases = RMat::Zero(n, n);
  sol.confidence = RMat::Ones(n, n);
  std::vector<CorrelationKey> missing;

  // Step 1: magnitudes |phi_jk| = arccos c(0,k,0,j); phi_11 stays positive.
  RMat magnitude = RMat::Zero(n, n);
  RMat measurable = RMat::Zero(n, n);
  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k) {
      if (auto c = fetch(correlations, moduli, 0, k, 0, j, &missing)) {
        magnitude(j, k) = std::acos(clamp_corr(*c));
        measurable(j, k) = 1.0;
      } else {
        sol.confidence(j, k) = 0.0;
      }
    }

  const double phi11 = magnitude(1, 1);
  sol.phases(1, 1) = phi11;

  const auto near_degenerate = [&](double s) {
    return s < tol_sign || s > kPi - tol_sign;
  };

  // Resolves phases(j,k) = +-magnitude against c = cos(base + phi_jk).
  const auto resolve = [&](int j, int k, double base, double c,
                           double base_confidence) {
    const double s = magnitude(j, k);
    const double cand_pos = std::cos(base + s);
    const double cand_neg = std::cos(base - s);
    sol.phases(j, k) =
        std::abs(c - cand_pos) <= std::abs(c - cand_neg) ? s : -s;
    if (near_degenerate(s) || base_confidence <= 0.0) {
      sol.confidence(j, k) = 0.0;
    } else {
      sol.confidence(j, k) =
          std::min(base_confidence, 0.5 * std::abs(cand_pos - cand_neg));
    }
  };

  // Step 2: signs of the first internal column and row against phi_11.
  for (int j = 2; j < n; ++j) {
    if (!measurable(j, 1)) continue;
    if (auto c = fetch(correlations, moduli, 0, 1, 1, j, &missing)) {
      resolve(j, 1, -phi11, *c, measurable(1, 1) ? 1.0 : 0.0);
    } else {
      sol.phases(j, 1) = magnitude(j, 1);
      sol.confidence(j, 1) = 0.0;
    }
  }
  for (int k = 2; k < n; ++k) {
    if (!measurable(1, k)) continue;
    if (auto c = fetch(correlations, moduli, 1, k, 0, 1, &missing)) {
      resolve(1, k, -phi11, *c, measurable(1, 1) ? 1.0 : 0.0);
    } else {
      sol.phases(1, k) = magnitude(1, k);
      sol.confidence(1, k) = 0.0;
    }
  }

  // Step 3: interior signs from c(1,k,1,j) = cos(phi_11 - phi_1k - phi_j1
  // + phi_jk), using the already-resolved entries.
  for (int j = 2; j < n; ++j)
    for (int k = 2; k < n; ++k) {
      if (!measurable(j, k)) continue;
      if (auto c = fetch(correlations, moduli, 1, k, 1, j, &missing)) {
        const double base = phi11 - sol.phases(1, k) - sol.phases(j, 1);
        resolve(j, k, base, *c,
                std::min(sol.confidence(1, k), sol.confidence(j, 1)));
      } else {
        sol.phases(j, k) = magnitude(j, k);
        sol.confidence(j, k) = 0.0;
      }
    }

  if (!missing.empty()) {
    std::ostringstream os;
    for (std::size_t m = 0; m < missing.size(); ++m) {
      if (m) os << ", ";
      os << "(" << missing[m].h << "," << missing[m].k << "," << missing[m].i
         << "," << missing[m].j << ")";
    }
    throw NumericError("solve_phases: required correlations not measured: " +
                       os.str());
  }

  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k)
      sol.phases(j, k) = wrap_phase(sol.phases(j, k));

  const int free = (n - 1) * (n - 1);
  sol.chi2 = correlation_chi2(correlations, sol.phases, moduli, free);
  return sol;
}

namespace {

// Dense Levenberg-Marquardt pass over the free phases (first row/column
// pinned). Returns the achieved chi2; `phases` is updated in place.
double levenberg_refine(const std::vector<Equation>& eqs, RMat* phases) {
  const int n = static_cast<int>(phases->rows());
  const int m = (n - 1) * (n - 1);
  const auto index_of = [n](int j, int k) { return (j - 1) * (n - 1) + (k - 1); };

  double chi2 = chi2_sum(eqs, *phases);
  double lambda = 1e-3;
  const int n_eqs = static_cast<int>(eqs.size());

  Eigen::VectorXd r(n_eqs);
  Eigen::MatrixXd jac(n_eqs, m);
  for (int outer = 0; outer < 200; ++outer) {
    jac.setZero();
    for (int e = 0; e < n_eqs; ++e) {
      const Equation& eq = eqs[e];
      const double combo = phase_combination(*phases, eq);
      r[e] = (eq.c - std::cos(combo)) * eq.weight;
      // d residual / d phi_ab = sin(combo) * coefficient * weight
      const double g = std::sin(combo) * eq.weight;
      if (eq.i >= 1 && eq.h >= 1) jac(e, index_of(eq.i, eq.h)) += g;
      if (eq.i >= 1 && eq.k >= 1) jac(e, index_of(eq.i, eq.k)) -= g;
      if (eq.j >= 1 && eq.h >= 1) jac(e, index_of(eq.j, eq.h)) -= g;
      if (eq.j >= 1 && eq.k >= 1) jac(e, index_of(eq.j, eq.k)) += g;
    }
    const Eigen::VectorXd gradient = jac.transpose() * r;
    if (gradient.lpNorm<Eigen::Infinity>() < 1e-12) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;

    bool stepped = false;
    for (int inner = 0; inner < 30; ++inner) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(gradient);
      if (!delta.allFinite() || delta.lpNorm<Eigen::Infinity>() < 1e-14) break;

      RMat trial = *phases;
      for (int j = 1; j < n; ++j)
        for (int k = 1; k < n; ++k) trial(j, k) += delta[index_of(j, k)];
      const double trial_chi2 = chi2_sum(eqs, trial);
      if (trial_chi2 < chi2) {
        *phases = trial;
        stepped = true;
        const bool tiny = chi2 - trial_chi2 < 1e-16 * (1.0 + chi2);
        chi2 = trial_chi2;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (tiny) return chi2;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) break;
  }
  return chi2;
}

}  // namespace

PhaseSolution refine_phases(const PhaseSolution& initial,
                            const CorrelationSet& correlations,
                            const RMat& moduli) {
  const int n = static_cast<int>(initial.phases.rows());
  if (moduli.rows() != n || moduli.cols() != n)
    throw DimensionError("refine_phases: moduli shape mismatch");
  const auto eqs = gather_equations(correlations, moduli);
  const int free = (n - 1) * (n - 1);
  const int dof = std::max<int>(1, static_cast<int>(eqs.size()) - free);

  // Ambiguous sign branches to revisit: entries flagged by the solver.
  std::vector<std::pair<int, int>> ambiguous;
  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k)
      if (initial.confidence(j, k) < kAmbiguousConfidence &&
          std::abs(initial.phases(j, k)) > 1e-12)
        ambiguous.emplace_back(j, k);
  // Exhaustive branch search is exponential; cap it and fall back to the
  // single-branch fit beyond the cap.
  if (ambiguous.size() > 10) ambiguous.resize(10);

  RMat best_phases = initial.phases;
  double best_chi2 = levenberg_refine(eqs, &best_phases);

  const std::size_t branches = std::size_t{1} << ambiguous.size();
  for (std::size_t mask = 1; mask < branches; ++mask) {
    RMat trial = initial.phases;
    for (std::size_t b = 0; b < ambiguous.size(); ++b)
      if (mask & (std::size_t{1} << b))
        trial(ambiguous[b].first, ambiguous[b].second) *= -1.0;
    const double chi2 = levenberg_refine(eqs, &trial);
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best_phases = trial;
    }
  }

  PhaseSolution out;
  out.phases = std::move(best_phases);
  out.confidence = initial.confidence;
  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k)
      out.phases(j, k) = wrap_phase(out.phases(j, k));
  // Keep the canonical branch: phi_11 >= 0 (joint negation leaves every
  // cosine unchanged).
  if (out.phases(1, 1) < 0.0) {
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k)
        out.phases(j, k) = wrap_phase(-out.phases(j, k));
  }
  out.chi2 = best_chi2 / dof;
  return out;
}

AssembledUnitary assemble_unitary(const RMat& moduli,
                                  const PhaseSolution& phases) {
  if (moduli.rows() != moduli.cols())
    throw DimensionError("assemble_unitary: moduli matrix must be square");
  if (phases.phases.rows() != moduli.rows() ||
      phases.phases.cols() != moduli.cols())
    throw DimensionError("assemble_unitary: phase matrix shape mismatch");
  const int n = static_cast<int>(moduli.rows());
  CMat u(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      u(j, k) = std::polar(std::sqrt(std::max(0.0, moduli(j, k))),
                           phases.phases(j, k));
  AssembledUnitary out;
  out.unitarity_residual = unitarity_residual(u);
  out.canonical.entries = std::move(u);
  out.canonical.conjugated = false;
  return out;
}

}  // namespace lonet
