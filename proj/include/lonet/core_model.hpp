#ifndef LONET_CORE_MODEL_HPP
#define LONET_CORE_MODEL_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace lonet {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Modulus below which a matrix entry counts as zero for canonicalization
/// and for phase-equation validity checks.
inline constexpr double kZeroModulusEps = 1e-9;

/// Wraps an angle to (-pi, pi].
double wrap_phase(double phi);

/// A lossy interferometer: diagonal loss-and-phase layers around a unitary
/// core. d1 acts on the outputs, d2 on the inputs; both store complex
/// amplitudes (modulus = field transmission in (0, 1], argument = static
/// phase offset of that port).
struct TransferMatrix {
  CMat unitary;
  CVec d1;
  CVec d2;

  int n() const { return static_cast<int>(unitary.rows()); }

  /// Composite matrix D1 * U * D2 seen by the fields.
  CMat composite() const;

  /// Lossless, phase-free transfer around the given core.
  static TransferMatrix lossless(CMat u);
};

/// Throws if the layers are inconsistent: U not square, diagonal lengths
/// wrong, or any diagonal modulus outside (0, 1].
void validate_transfer(const TransferMatrix& t);

/// Representative of the measurement-equivalence class {F1 U F2, conjugates}:
/// real non-negative first row and column, arg of entry (1,1) in [0, pi].
struct CanonicalUnitary {
  CMat entries;
  bool conjugated = false;
};

/// Haar-distributed n x n unitary, deterministic per seed. QR of a complex
/// Gaussian matrix with the R-diagonal phase correction.
CMat haar_random_unitary(int n, std::uint64_t seed);

/// Max absolute entry of U^dagger U - I.
double unitarity_residual(const CMat& u);

bool is_unitary(const CMat& u, double tol = 1e-10);

/// True when every entry is in [-tol, 1 + tol] and all row and column sums
/// equal 1 within tol.
bool is_doubly_stochastic(const RMat& p, double tol = 1e-8);

/// output = D1 * U * D2 * input. Throws DimensionError on length mismatch.
CVec apply_transfer(const TransferMatrix& t, const CVec& input);

/// Canonical form of a square complex matrix. Requires every first-row and
/// first-column modulus above kZeroModulusEps; throws NumericError naming the
/// offending index otherwise. Idempotent; ties of the (1,1) phase at exactly
/// 0 or pi resolve to conjugated = false.
CanonicalUnitary canonicalize(const CMat& u);

/// Classical similarity ((1/n) sum_ij sqrt(P_ij P'_ij))^2 between two
/// column-normalized non-negative matrices.
double fidelity_probability(const RMat& p, const RMat& q);

/// Squared modulus of the inner product of two unit-norm complex vectors.
double fidelity_column(const CVec& u, const CVec& v);

}  // namespace lonet

#endif
