#include "lonet/core_model.hpp"

#include <cmath>
#include <string>

#include "lonet/error.hpp"
#include "lonet/rng.hpp"

namespace lonet {

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);
  if (w <= -kPi) w = kPi;  // remainder() can return exactly -pi
  return w;
}

CMat TransferMatrix::composite() const {
  return d1.asDiagonal() * unitary * d2.asDiagonal();
}

TransferMatrix TransferMatrix::lossless(CMat u) {
  const auto n = u.rows();
  TransferMatrix t;
  t.unitary = std::move(u);
  t.d1 = CVec::Ones(n);
  t.d2 = CVec::Ones(n);
  return t;
}

void validate_transfer(const TransferMatrix& t) {
  if (t.unitary.rows() != t.unitary.cols() || t.unitary.rows() < 1)
    throw DimensionError("transfer matrix: unitary core must be square, n >= 1");
  const int n = t.n();
  if (t.d1.size() != n || t.d2.size() != n)
    throw DimensionError("transfer matrix: diagonal layers must have length n");
  if (unitarity_residual(t.unitary) > 1e-8)
    throw InvalidArgumentError("transfer matrix: core is not unitary");
  for (int i = 0; i < n; ++i) {
    const double m1 = std::abs(t.d1[i]);
    const double m2 = std::abs(t.d2[i]);
    if (!(m1 > 0.0) || m1 > 1.0 + 1e-12)
      throw InvalidArgumentError("transfer matrix: |d1[" + std::to_string(i) +
                                 "]| must lie in (0, 1]");
    if (!(m2 > 0.0) || m2 > 1.0 + 1e-12)
      throw InvalidArgumentError("transfer matrix: |d2[" + std::to_string(i) +
                                 "]| must lie in (0, 1]");
  }
}

CMat haar_random_unitary(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgumentError("haar_random_unitary: n must be >= 1");
  Rng rng(seed);
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = Complex(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
  Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the gauge of the QR factorization so Q follows the Haar measure.
  for (int j = 0; j < n; ++j) {
    Complex d = r(j, j);
    double m = std::abs(d);
    Complex phase = m > 0.0 ? d / m : Complex(1.0, 0.0);
    q.col(j) *= phase;
  }
  return q;
}

double unitarity_residual(const CMat& u) {
  const auto n = u.rows();
  CMat g = u.adjoint() * u - CMat::Identity(n, n);
  return g.cwiseAbs().maxCoeff();
}

bool is_unitary(const CMat& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return unitarity_residual(u) <= tol;
}

bool is_doubly_stochastic(const RMat& p, double tol) {
  if (p.rows() != p.cols()) return false;
  if ((p.array() < -tol).any() || (p.array() > 1.0 + tol).any()) return false;
  const auto rows = p.rowwise().sum();
  const auto cols = p.colwise().sum();
  return (rows.array() - 1.0).abs().maxCoeff() <= tol &&
         (cols.array() - 1.0).abs().maxCoeff() <= tol;
}

CVec apply_transfer(const TransferMatrix& t, const CVec& input) {
  if (input.size() != t.n())
    throw DimensionError("apply_transfer: amplitude vector length " +
                         std::to_string(input.size()) + " != n = " +
                         std::to_string(t.n()));
  return t.composite() * input;
}

CanonicalUnitary canonicalize(const CMat& u) {
  if (u.rows() != u.cols() || u.rows() < 1)
    throw DimensionError("canonicalize: matrix must be square, n >= 1");
  const int n = static_cast<int>(u.rows());
  for (int j = 0; j < n; ++j)
    if (std::abs(u(0, j)) <= kZeroModulusEps)
      throw NumericError("canonicalize: entry (0," + std::to_string(j) +
                         ") has vanishing modulus");
  for (int i = 1; i < n; ++i)
    if (std::abs(u(i, 0)) <= kZeroModulusEps)
      throw NumericError("canonicalize: entry (" + std::to_string(i) +
                         ",0) has vanishing modulus");

  // Right phases zero the first row, left phases then zero the first column.
  CVec f2(n), f1(n);
  for (int j = 0; j < n; ++j) f2[j] = std::polar(1.0, -std::arg(u(0, j)));
  f1[0] = 1.0;
  CMat v = u * f2.asDiagonal();
  for (int i = 1; i < n; ++i) f1[i] = std::polar(1.0, -std::arg(v(i, 0)));
  v = f1.asDiagonal() * v;

  CanonicalUnitary out;
  out.conjugated = false;
  if (n > 1 && std::arg(v(1, 1)) < 0.0) {
    v = v.conjugate();
    out.conjugated = true;
  }
  out.entries = std::move(v);
  return out;
}

double fidelity_probability(const RMat& p, const RMat& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw DimensionError("fidelity_probability: shape mismatch");
  if ((p.array() < 0.0).any() || (q.array() < 0.0).any())
    throw InvalidArgumentError("fidelity_probability: negative entries");
  const auto check_columns = [](const RMat& m, const char* which) {
    RVec sums = m.colwise().sum();
    if ((sums.array() - 1.0).abs().maxCoeff() > 1e-6)
      throw InvalidArgumentError(std::string("fidelity_probability: ") + which +
                                 " matrix is not column-normalized");
  };
  check_columns(p, "first");
  check_columns(q, "second");
  const double n = static_cast<double>(p.cols());
  double s = (p.array() * q.array()).sqrt().sum() / n;
  return s * s;
}

double fidelity_column(const CVec& u, const CVec& v) {
  if (u.size() != v.size())
    throw DimensionError("fidelity_column: length mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-6 || std::abs(v.norm() - 1.0) > 1e-6)
    throw InvalidArgumentError("fidelity_column: vectors must be unit-norm");
  return std::norm(u.dot(v));
}

}  // namespace lonet
