#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lonet/error.hpp"
#include "lonet/moduli_recon.hpp"
#include "lonet/rng.hpp"
#include "lonet/simulator.hpp"
#include "oracles.hpp"

using namespace lonet;

namespace {

NoiseModel quiet() {
  NoiseModel noise;
  noise.relative_intensity_sigma = 0.0;
  noise.thermal_phase_step_sigma = 0.0;
  return noise;
}

std::vector<ChipConfig> sweep_settings(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ChipConfig> settings(count);
  for (ChipConfig& s : settings)
    for (double& t : s.theta) t = rng.uniform(0.0, 2.0 * kPi);
  return settings;
}

std::vector<RVec> input0_vectors(const SettingsDataset& data) {
  std::vector<RVec> out;
  for (const auto& s : data.inputs.at(0)) out.push_back(s.intensities);
  return out;
}

}  // namespace

TEST_CASE("sinkhorn: a doubly stochastic matrix is a fixed point") {
  const RMat m = RMat::Constant(3, 3, 1.0 / 3.0);
  const SinkhornResult r = sinkhorn_decompose(m);
  CHECK(r.residual < 1e-12);
  CHECK(!r.stalled);
  CHECK((r.p - m).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.d1.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((r.d2.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("sinkhorn: frozen 2x2 construct-then-decompose round trip") {
  // M = diag(2,1) * [[0.3,0.7],[0.7,0.3]] * diag(1,3)
  RMat m(2, 2);
  m << 0.6, 4.2, 0.7, 0.9;
  const SinkhornResult r = sinkhorn_decompose(m);
  RMat p0(2, 2);
  p0 << 0.3, 0.7, 0.7, 0.3;
  CHECK((r.p - p0).cwiseAbs().maxCoeff() < 1e-10);
  // max(d1) = 1 pushes the scale into d2: d1 = (1, 0.5), d2 = (2, 6).
  CHECK(r.d1[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.d1[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(r.d2[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.d2[1] == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("sinkhorn: reconstruction identity D1 P D2 = M") {
  const RMat p = test::random_doubly_stochastic(4, 8);
  Rng rng(9);
  RVec d1(4), d2(4);
  for (int i = 0; i < 4; ++i) {
    d1[i] = rng.uniform(0.2, 1.0);
    d2[i] = rng.uniform(0.2, 1.0);
  }
  const RMat m = d1.asDiagonal() * p * d2.asDiagonal();
  const SinkhornResult r = sinkhorn_decompose(m);
  const RMat rebuilt = r.d1.asDiagonal() * r.p * r.d2.asDiagonal();
  CHECK((rebuilt - m).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r.p - p).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(is_doubly_stochastic(r.p, 1e-8));
}

TEST_CASE("sinkhorn: scale invariance, losses absorb the global factor") {
  const RMat p = test::random_doubly_stochastic(3, 15);
  RVec d1(3), d2(3);
  d1 << 0.9, 0.4, 0.7;
  d2 << 0.5, 1.0, 0.8;
  const RMat m = d1.asDiagonal() * p * d2.asDiagonal();
  const SinkhornResult a = sinkhorn_decompose(m);
  const SinkhornResult b = sinkhorn_decompose(3.7 * m);
  CHECK((a.p - b.p).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.d1 - b.d1).cwiseAbs().maxCoeff() < 1e-10);  // max(d1) = 1 on both
  CHECK((3.7 * a.d2 - b.d2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sinkhorn: all-zero row or column fails immediately") {
  RMat m = RMat::Ones(3, 3);
  m.row(1).setZero();
  CHECK_THROWS_WITH_AS(sinkhorn_decompose(m), doctest::Contains("row 1"),
                       NumericError);
  m = RMat::Ones(3, 3);
  m.col(2).setZero();
  CHECK_THROWS_AS(sinkhorn_decompose(m), NumericError);
}

TEST_CASE("sinkhorn: support without total support does not converge") {
  RMat m(2, 2);
  m << 1.0, 1.0, 0.0, 1.0;
  CHECK_THROWS_WITH_AS(sinkhorn_decompose(m, 1e-12, 5000),
                       doctest::Contains("structural zeros"), NumericError);
}

TEST_CASE("sinkhorn: negative entries are rejected") {
  RMat m = RMat::Ones(2, 2);
  m(0, 1) = -0.5;
  CHECK_THROWS_AS(sinkhorn_decompose(m), InvalidArgumentError);
}

TEST_CASE("variance_weights: balanced losses give uniform weights") {
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(20, 5), {0}, CVec::Ones(3), CVec::Ones(3), quiet(), 6);
  const VarianceWeights w = variance_weights(input0_vectors(data));
  CHECK((w.alpha.array() - 1.0).abs().maxCoeff() < 1e-8);
  CHECK(w.xi2 < 1e-20);
}

TEST_CASE("variance_weights: recovers the inverse loss vector") {
  CVec d1(3);
  d1 << 1.0, std::sqrt(0.5), std::sqrt(0.8);  // intensity losses 1, 0.5, 0.8
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(50, 21), {0}, d1, CVec::Ones(3), quiet(), 22);
  const VarianceWeights w = variance_weights(input0_vectors(data));
  // alpha proportional to (1, 2, 1.25)
  const RVec expected = (RVec(3) << 1.0, 2.0, 1.25).finished();
  const RVec scaled = w.alpha / w.alpha[0];
  CHECK((scaled - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("variance_weights: weighted sum becomes constant across settings") {
  CVec d1(3);
  d1 << 0.6, 1.0, 0.8;
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(40, 31), {0}, d1, CVec::Ones(3), quiet(), 32);
  const auto vectors = input0_vectors(data);
  const VarianceWeights w = variance_weights(vectors);
  double mean = 0.0, var = 0.0;
  for (const RVec& v : vectors) mean += w.alpha.dot(v);
  mean /= static_cast<double>(vectors.size());
  for (const RVec& v : vectors) {
    const double s = w.alpha.dot(v) - mean;
    var += s * s;
  }
  var /= static_cast<double>(vectors.size());
  CHECK(std::sqrt(var) / mean < 1e-6);
}

TEST_CASE("variance_weights: Q is PSD and alpha reaches the smallest eigenvalue") {
  CVec d1(3);
  d1 << 0.9, 0.5, 1.0;
  NoiseModel noise = quiet();
  noise.relative_intensity_sigma = 1e-3;
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(60, 41), {0}, d1, CVec::Ones(3), noise, 42);
  const auto vectors = input0_vectors(data);
  const RMat q = variance_q(vectors);
  Eigen::SelfAdjointEigenSolver<RMat> eig(q);
  CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  const VarianceWeights w = variance_weights(vectors);
  const RVec unit = w.alpha.normalized();
  CHECK(unit.dot(q * unit) ==
        doctest::Approx(eig.eigenvalues()[0]).epsilon(1e-10));
}

TEST_CASE("variance_weights: degenerate eigenspace demands more settings") {
  // Two settings give rank(Q) <= 1 on 3 modes: at least two zero eigenvalues.
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(2, 51), {0}, CVec::Ones(3), CVec::Ones(3), quiet(), 52);
  CHECK_THROWS_WITH_AS(variance_weights(input0_vectors(data)),
                       doctest::Contains("more circuit settings"),
                       NumericError);
}

TEST_CASE("multi_input_weights: equal input losses give unit ratios") {
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(30, 61), {0, 1, 2}, CVec::Ones(3), CVec::Ones(3), quiet(),
      62);
  const MultiInputWeights w = multi_input_weights(data);
  for (const auto& [mode, ratio] : w.loss_ratios)
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("multi_input_weights: recovers injected input-loss ratios") {
  CVec d1(3), d2(3);
  d1 << 0.9, 0.6, 1.0;
  d2 << 1.0, std::sqrt(0.7), std::sqrt(0.9);  // intensity ratios 1, 0.7, 0.9
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(50, 71), {0, 1, 2}, d1, d2, quiet(), 72);
  const MultiInputWeights w = multi_input_weights(data);
  CHECK(w.loss_ratios.at(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w.loss_ratios.at(1) == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(w.loss_ratios.at(2) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("multi_input_weights: noisy ratios stay within a percent") {
  CVec d2(3);
  d2 << 1.0, std::sqrt(0.7), std::sqrt(0.9);
  NoiseModel noise = quiet();
  noise.relative_intensity_sigma = 1e-3;
  const SettingsDataset data = simulate_settings_dataset(
      sweep_settings(100, 81), {0, 1, 2}, CVec::Ones(3), d2, noise, 82);
  const MultiInputWeights w = multi_input_weights(data);
  CHECK(w.loss_ratios.at(1) == doctest::Approx(0.7).epsilon(1e-2));
  CHECK(w.loss_ratios.at(2) == doctest::Approx(0.9).epsilon(1e-2));
}

TEST_CASE("multi_input_weights: needs at least two groups of two settings") {
  SettingsDataset data = simulate_settings_dataset(
      sweep_settings(10, 91), {0}, CVec::Ones(3), CVec::Ones(3), quiet(), 92);
  CHECK_THROWS_AS(multi_input_weights(data), InvalidArgumentError);
}

TEST_CASE("recover_p_from_weights: identity chip puts the column on e_input") {
  RMat columns(3, 1);
  columns << 0.0, 0.9, 0.0;  // lossy measurement of input 1 on an identity-like column
  const RMat p =
      recover_p_from_weights(columns, {1}, (RVec(3) << 1, 1, 1).finished());
  CHECK(p(1, 0) == doctest::Approx(1.0));
  CHECK(p(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("recover_p_from_weights: exact round trip with known weights") {
  const CMat u = chip_unitary({{0.5, 1.7, 2.9}});
  CVec d1(3);
  d1 << 1.0, 0.7, 0.85;
  TransferMatrix t = TransferMatrix::lossless(u);
  t.d1 = d1;
  const RMat m = intensity_matrix(t, quiet(), 3);
  RVec alpha(3);
  for (int i = 0; i < 3; ++i) alpha[i] = 1.0 / std::norm(d1[i]);
  const RMat p = recover_p_from_weights(m, {0, 1, 2}, alpha);
  CHECK((p - u.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("recover_p_from_weights: rejects non-positive weights") {
  CHECK_THROWS_AS(recover_p_from_weights(RMat::Ones(3, 3), {0, 1, 2},
                                         (RVec(3) << 1, 0, 1).finished()),
                  InvalidArgumentError);
}

TEST_CASE("cross-loss-configuration invariance of the recovered P") {
  const CMat u = chip_unitary({{1.2, 0.4, 2.6}});
  TransferMatrix plain = TransferMatrix::lossless(u);
  TransferMatrix attenuated = plain;
  attenuated.d1[0] = std::sqrt(0.5);
  const RMat pa = sinkhorn_decompose(intensity_matrix(plain, quiet(), 5)).p;
  const RMat pb =
      sinkhorn_decompose(intensity_matrix(attenuated, quiet(), 5)).p;
  CHECK(fidelity_probability(pa, pb) >= 1.0 - 1e-10);
}
