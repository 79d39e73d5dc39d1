#include "lonet/moduli_recon.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <string>

#include "lonet/error.hpp"

namespace lonet {

namespace {

// Entries below this fraction of the matrix maximum count as structural
// zeros in feasibility diagnostics.
constexpr double kStructuralZeroFraction = 1e-12;

// A plateau is declared when the best residual has not improved by this
// relative amount over kPlateauWindow iterations.
constexpr double kPlateauImprovement = 1e-3;
constexpr int kPlateauWindow = 1000;

std::string zero_pattern(const RMat& m) {
  const double cut = m.maxCoeff() * kStructuralZeroFraction;
  std::ostringstream os;
  int count = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) <= cut) {
        if (count++) os << ", ";
        if (count <= 16) os << "(" << i << "," << j << ")";
      }
  if (count > 16) os << ", ...";
  if (count == 0) return "no structural zeros";
  return "structural zeros at " + os.str();
}

double scaling_residual(const RMat& m, const RVec& x, const RVec& y) {
  const RVec row = x.array() * (m * y).array();
  const RVec col = y.array() * (m.transpose() * x).array();
  return std::max((row.array() - 1.0).abs().maxCoeff(),
                  (col.array() - 1.0).abs().maxCoeff());
}

}  // namespace

SinkhornResult sinkhorn_decompose(const RMat& m, double tol, int max_iter) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionError("sinkhorn_decompose: matrix must be square, n >= 1");
  if ((m.array() < 0.0).any())
    throw InvalidArgumentError("sinkhorn_decompose: negative entries");
  if (!(tol > 0.0))
    throw InvalidArgumentError("sinkhorn_decompose: tol must be > 0");
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i) {
    if (m.row(i).maxCoeff() <= 0.0)
      throw NumericError("sinkhorn_decompose: row " + std::to_string(i) +
                         " is all zero; matrix is not decomposable");
    if (m.col(i).maxCoeff() <= 0.0)
      throw NumericError("sinkhorn_decompose: column " + std::to_string(i) +
                         " is all zero; matrix is not decomposable");
  }

  RVec x = RVec::Ones(n), y = RVec::Ones(n);
  RVec best_x = x, best_y = y;
  double best_residual = scaling_residual(m, x, y);
  int best_iter = 0;
  int iter = 0;

  while (best_residual >= tol && iter < max_iter) {
    ++iter;
    x = (m * y).cwiseInverse();
    y = (m.transpose() * x).cwiseInverse();
    const double residual = scaling_residual(m, x, y);
    if (residual < best_residual * (1.0 - kPlateauImprovement)) {
      best_residual = residual;
      best_x = x;
      best_y = y;
      best_iter = iter;
    } else if (residual < best_residual) {
      best_residual = residual;
      best_x = x;
      best_y = y;
    }
    if (residual < tol) {
      best_iter = iter;
      break;
    }
    if (iter - best_iter >= kPlateauWindow) {
      SinkhornResult out;
      out.p = best_x.asDiagonal() * m * best_y.asDiagonal();
      out.d1 = best_x.cwiseInverse();
      out.d2 = best_y.cwiseInverse();
      out.iterations = iter;
      out.residual = best_residual;
      out.stalled = true;
      const double scale = out.d1.maxCoeff();
      out.d1 /= scale;
      out.d2 *= scale;
      return out;
    }
  }

  if (best_residual >= tol)
    throw NumericError(
        "sinkhorn_decompose: no convergence after " + std::to_string(iter) +
        " iterations (residual " + std::to_string(best_residual) + "); " +
        zero_pattern(m));

  SinkhornResult out;
  out.p = best_x.asDiagonal() * m * best_y.asDiagonal();
  out.d1 = best_x.cwiseInverse();
  out.d2 = best_y.cwiseInverse();
  out.iterations = iter;
  out.residual = best_residual;
  out.stalled = false;
  const double scale = out.d1.maxCoeff();
  out.d1 /= scale;
  out.d2 *= scale;
  return out;
}

RMat variance_q(const std::vector<RVec>& measurements) {
  if (measurements.empty())
    throw InvalidArgumentError("variance_q: no measurements");
  const int n = static_cast<int>(measurements.front().size());
  for (const RVec& v : measurements)
    if (v.size() != n)
      throw DimensionError("variance_q: inconsistent measurement lengths");
  const double s = static_cast<double>(measurements.size());
  RVec mean = RVec::Zero(n);
  for (const RVec& v : measurements) mean += v;
  mean /= s;
  RMat q = RMat::Zero(n, n);
  for (const RVec& v : measurements) q += v * v.transpose();
  q /= s;
  q -= mean * mean.transpose();
  q = 0.5 * (q + q.transpose()).eval();  // exact symmetry for the eigensolver
  return q;
}

namespace {

VarianceWeights weights_from_q(const RMat& q) {
  const int n = static_cast<int>(q.rows());
  Eigen::SelfAdjointEigenSolver<RMat> eig(q);
  if (eig.info() != Eigen::Success)
    throw NumericError("variance_weights: eigendecomposition failed");
  const RVec evals = eig.eigenvalues();  // ascending
  if (n >= 2 && evals[1] - evals[0] < 1e-9)
    throw NumericError(
        "variance_weights: smallest eigenspace of Q is degenerate (gap " +
        std::to_string(evals[1] - evals[0]) +
        "); measure more circuit settings");
  RVec alpha = eig.eigenvectors().col(0);
  if (alpha.sum() < 0.0) alpha = -alpha;
  if ((alpha.array() <= 0.0).any())
    throw NumericError(
        "variance_weights: sign-fixed eigenvector has non-positive "
        "components; data incompatible with an output-loss model");

  VarianceWeights out;
  out.eigen_gap = n >= 2 ? evals[1] - evals[0] : 0.0;
  alpha *= static_cast<double>(n) / alpha.sum();  // mean weight 1
  out.xi2 = alpha.dot(q * alpha);
  out.alpha = std::move(alpha);
  return out;
}

}  // namespace

VarianceWeights variance_weights(const std::vector<RVec>& measurements) {
  return weights_from_q(variance_q(measurements));
}

MultiInputWeights multi_input_weights(const SettingsDataset& data) {
  if (data.inputs.size() < 2)
    throw InvalidArgumentError("multi_input_weights: need >= 2 input groups");
  int n = -1;
  RMat q_total;
  for (const auto& [mode, settings] : data.inputs) {
    if (settings.size() < 2)
      throw InvalidArgumentError("multi_input_weights: input " +
                                 std::to_string(mode) +
                                 " has fewer than 2 settings");
    std::vector<RVec> vectors;
    vectors.reserve(settings.size());
    for (const auto& s : settings) vectors.push_back(s.intensities);
    RMat q = variance_q(vectors);
    if (n < 0) {
      n = static_cast<int>(q.rows());
      q_total = RMat::Zero(n, n);
    } else if (q.rows() != n) {
      throw DimensionError("multi_input_weights: inconsistent mode counts");
    }
    q_total += q;
  }

  const VarianceWeights w = weights_from_q(q_total);
  MultiInputWeights out;
  out.alpha = w.alpha;
  out.xi2 = w.xi2;
  out.eigen_gap = w.eigen_gap;

  for (const auto& [mode, settings] : data.inputs) {
    double sum = 0.0;
    for (const auto& s : settings) sum += out.alpha.dot(s.intensities);
    out.mean_sums[mode] = sum / static_cast<double>(settings.size());
  }
  const double reference = out.mean_sums.begin()->second;
  if (reference <= 0.0)
    throw NumericError("multi_input_weights: non-positive weighted sum");
  for (const auto& [mode, sum] : out.mean_sums)
    out.loss_ratios[mode] = sum / reference;
  return out;
}

RMat recover_p_from_weights(const RMat& measured_columns,
                            const std::vector<int>& input_modes,
                            const RVec& alpha) {
  if ((alpha.array() <= 0.0).any())
    throw InvalidArgumentError("recover_p_from_weights: weights must be positive");
  if (measured_columns.rows() != alpha.size())
    throw DimensionError("recover_p_from_weights: weight length mismatch");
  if (measured_columns.cols() != static_cast<Eigen::Index>(input_modes.size()))
    throw DimensionError("recover_p_from_weights: one column per input mode expected");
  RMat p(measured_columns.rows(), measured_columns.cols());
  for (int c = 0; c < p.cols(); ++c) {
    RVec col = alpha.array() * measured_columns.col(c).array();
    const double sum = col.sum();
    if (sum <= 0.0)
      throw NumericError("recover_p_from_weights: column for input mode " +
                         std::to_string(input_modes[c]) +
                         " vanishes after reweighting");
    p.col(c) = col / sum;
  }
  return p;
}

}  // namespace lonet
