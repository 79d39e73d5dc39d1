#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lonet/core_model.hpp"
#include "lonet/error.hpp"
#include "lonet/rng.hpp"

using namespace lonet;

namespace {

CMat splitter50() {
  CMat u(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  u << s, s, s, -s;
  return u;
}

CVec phase_diagonal(int n, std::uint64_t seed) {
  Rng rng(seed);
  CVec d(n);
  for (int i = 0; i < n; ++i) d[i] = std::polar(1.0, rng.uniform(-kPi, kPi));
  return d;
}

}  // namespace

TEST_CASE("haar unitary: 1x1 is a pure phase") {
  for (std::uint64_t seed : {0ULL, 5ULL, 123456789ULL}) {
    const CMat u = haar_random_unitary(1, seed);
    CHECK(std::abs(std::abs(u(0, 0)) - 1.0) < 1e-12);
  }
}

TEST_CASE("haar unitary: unitarity and determinism") {
  const CMat u = haar_random_unitary(3, 7);
  CHECK(unitarity_residual(u) < 1e-10);
  const CMat v = haar_random_unitary(3, 7);
  CHECK((u - v).cwiseAbs().maxCoeff() == 0.0);
  const CMat w = haar_random_unitary(3, 8);
  CHECK((u - w).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("haar unitary: Monte-Carlo first moment E|U_00|^2 = 1/n") {
  const int n = 4;
  const int samples = 10000;
  double sum = 0.0;
  for (int s = 0; s < samples; ++s)
    sum += std::norm(haar_random_unitary(n, 1000 + s)(0, 0));
  CHECK(sum / samples == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("haar unitary: rejects n = 0") {
  CHECK_THROWS_AS(haar_random_unitary(0, 1), InvalidArgumentError);
}

TEST_CASE("apply_transfer: identity passes e_0 through") {
  TransferMatrix t = TransferMatrix::lossless(CMat::Identity(3, 3));
  CVec in = CVec::Zero(3);
  in[0] = 1.0;
  const CVec out = apply_transfer(t, in);
  CHECK((out - in).norm() < 1e-15);
}

TEST_CASE("apply_transfer: 50/50 splitter splits the power") {
  TransferMatrix t = TransferMatrix::lossless(splitter50());
  CVec in(2);
  in << 1.0, 0.0;
  const CVec out = apply_transfer(t, in);
  CHECK(std::norm(out[0]) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::norm(out[1]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("apply_transfer: output loss attenuates the power") {
  TransferMatrix t = TransferMatrix::lossless(CMat::Identity(2, 2));
  t.d1[0] = Complex(0.5, 0.0) * std::polar(1.0, 0.3);
  CVec in(2);
  in << 1.0, 0.0;
  const CVec out = apply_transfer(t, in);
  CHECK(std::norm(out[0]) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::norm(out[1]) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("apply_transfer: dimension mismatch throws") {
  TransferMatrix t = TransferMatrix::lossless(CMat::Identity(3, 3));
  CHECK_THROWS_AS(apply_transfer(t, CVec::Zero(2)), DimensionError);
}

TEST_CASE("apply_transfer: never increases total power") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    TransferMatrix t;
    t.unitary = haar_random_unitary(n, 500 + trial);
    t.d1 = CVec(n);
    t.d2 = CVec(n);
    for (int i = 0; i < n; ++i) {
      t.d1[i] = std::polar(rng.uniform(0.05, 1.0), rng.uniform(-kPi, kPi));
      t.d2[i] = std::polar(rng.uniform(0.05, 1.0), rng.uniform(-kPi, kPi));
    }
    CVec in(n);
    for (int i = 0; i < n; ++i)
      in[i] = Complex(rng.gaussian(), rng.gaussian());
    const CVec out = apply_transfer(t, in);
    CHECK(out.squaredNorm() <= in.squaredNorm() + 1e-12);
  }
}

TEST_CASE("canonicalize: already-canonical matrix is a fixed point") {
  const CanonicalUnitary c = canonicalize(splitter50());
  CHECK(!c.conjugated);
  CHECK((c.entries - splitter50()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("canonicalize: collapses the F1 U F2 equivalence class") {
  for (std::uint64_t seed : {11ULL, 12ULL, 13ULL, 14ULL}) {
    const CMat u = haar_random_unitary(4, seed);
    const CMat f1 = CMat(phase_diagonal(4, seed * 31).asDiagonal());
    const CMat f2 = CMat(phase_diagonal(4, seed * 57 + 1).asDiagonal());
    const CanonicalUnitary a = canonicalize(u);
    const CanonicalUnitary b = canonicalize(f1 * u * f2);
    CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("canonicalize: conjugate collapses to the same representative") {
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL, 24ULL, 25ULL}) {
    const CMat u = haar_random_unitary(3, seed);
    const CanonicalUnitary a = canonicalize(u);
    const CanonicalUnitary b = canonicalize(u.conjugate());
    CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(a.conjugated != b.conjugated);
  }
}

TEST_CASE("canonicalize: idempotent, moduli untouched, (1,1) phase in [0,pi]") {
  for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
    const CMat u = haar_random_unitary(4, seed);
    const CanonicalUnitary c = canonicalize(u);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(std::arg(c.entries(0, j))) < 1e-12);
      CHECK(std::abs(std::arg(c.entries(j, 0))) < 1e-12);
    }
    const double phi11 = std::arg(c.entries(1, 1));
    CHECK(phi11 >= 0.0);
    CHECK(phi11 <= kPi);
    CHECK((c.entries.cwiseAbs() - u.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
    const CanonicalUnitary again = canonicalize(c.entries);
    CHECK(!again.conjugated);
    CHECK((again.entries - c.entries).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("canonicalize: vanishing first-row entry names the index") {
  CMat u = CMat::Identity(3, 3);
  CHECK_THROWS_WITH_AS(canonicalize(u), doctest::Contains("(0,1)"),
                       NumericError);
}

TEST_CASE("fidelity_probability: equal matrices give 1") {
  RMat p(3, 3);
  p << 0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2;
  CHECK(fidelity_probability(p, p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fidelity_probability: disjoint supports give 0") {
  RMat p = RMat::Identity(3, 3);
  RMat q = RMat::Zero(3, 3);
  q(1, 0) = q(2, 1) = q(0, 2) = 1.0;  // cyclic permutation
  CHECK(fidelity_probability(p, q) == doctest::Approx(0.0));
}

TEST_CASE("fidelity_probability: symmetric, rejects bad input") {
  RMat p(2, 2), q(2, 2);
  p << 0.7, 0.4, 0.3, 0.6;
  q << 0.5, 0.2, 0.5, 0.8;
  CHECK(fidelity_probability(p, q) ==
        doctest::Approx(fidelity_probability(q, p)).epsilon(1e-14));
  RMat bad = p;
  bad(0, 0) = -0.1;
  CHECK_THROWS_AS(fidelity_probability(bad, q), InvalidArgumentError);
  CHECK_THROWS_AS(fidelity_probability(RMat::Ones(2, 2), q),
                  InvalidArgumentError);
  CHECK_THROWS_AS(fidelity_probability(RMat::Identity(3, 3), q),
                  DimensionError);
}

TEST_CASE("fidelity_column: identical, orthogonal, and contract checks") {
  CVec u(3);
  u << Complex(0.5, 0.5), Complex(0.5, -0.5), Complex(0.0, 0.0);
  CHECK(fidelity_column(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  CVec e0 = CVec::Zero(3), e1 = CVec::Zero(3);
  e0[0] = 1.0;
  e1[1] = 1.0;
  CHECK(fidelity_column(e0, e1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fidelity_column(2.0 * e0, e1), InvalidArgumentError);
}

TEST_CASE("fidelity_column: invariant under a global phase") {
  Rng rng(77);
  CVec u(4);
  for (int i = 0; i < 4; ++i) u[i] = Complex(rng.gaussian(), rng.gaussian());
  u.normalize();
  const CVec v = std::polar(1.0, 1.234) * u;
  CHECK(fidelity_column(u, v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("is_doubly_stochastic and wrap_phase basics") {
  CHECK(is_doubly_stochastic(RMat::Constant(3, 3, 1.0 / 3.0)));
  CHECK(!is_doubly_stochastic(RMat::Constant(3, 3, 0.4)));
  CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(0.5) == doctest::Approx(0.5));
}

TEST_CASE("validate_transfer: rejects out-of-range loss moduli") {
  TransferMatrix t = TransferMatrix::lossless(CMat::Identity(2, 2));
  t.d1[0] = 1.5;
  CHECK_THROWS_AS(validate_transfer(t), InvalidArgumentError);
  t.d1[0] = 0.0;
  CHECK_THROWS_AS(validate_transfer(t), InvalidArgumentError);
}
