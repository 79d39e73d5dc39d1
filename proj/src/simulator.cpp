#include "lonet/simulator.hpp"

#include <cmath>
#include <string>

#include "lonet/error.hpp"
#include "lonet/rng.hpp"

namespace lonet {

namespace {

void check_index_pairs(int n, int h, int k, int i, int j) {
  if (h < 0 || h >= n || k < 0 || k >= n || i < 0 || i >= n || j < 0 || j >= n)
    throw DimensionError("mode index out of range");
  if (h == k) throw InvalidArgumentError("input modes h and k must differ");
  if (i == j) throw InvalidArgumentError("output modes i and j must differ");
}

}  // namespace

void validate_noise(const NoiseModel& noise) {
  if (noise.relative_intensity_sigma < 0.0)
    throw InvalidArgumentError("noise: relative_intensity_sigma must be >= 0");
  if (noise.thermal_phase_step_sigma < 0.0)
    throw InvalidArgumentError("noise: thermal_phase_step_sigma must be >= 0");
  if (noise.modulator_phases.empty())
    throw InvalidArgumentError("noise: modulator phase set must be non-empty");
  if (noise.gamma < 0.0 || noise.gamma > 1.0)
    throw InvalidArgumentError("noise: gamma must lie in [0, 1]");
}

CMat tritter3() {
  CMat u(3, 3);
  const double s = 1.0 / std::sqrt(3.0);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      u(j, k) = s * std::polar(1.0, 2.0 * kPi * j * k / 3.0);
  return u;
}

CMat chip_unitary(const ChipConfig& cfg) {
  CVec heater(3);
  for (int i = 0; i < 3; ++i) heater[i] = std::polar(1.0, cfg.theta[i]);
  CMat t = tritter3();
  return t * heater.asDiagonal() * t;
}

RMat intensity_matrix(const TransferMatrix& t, const NoiseModel& noise,
                      std::uint64_t seed) {
  validate_transfer(t);
  validate_noise(noise);
  Rng rng(seed);
  const CMat c = t.composite();
  const int n = t.n();
  RMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = std::norm(c(i, j));
      v *= 1.0 + rng.gaussian(0.0, noise.relative_intensity_sigma);
      m(i, j) = v < 0.0 ? 0.0 : v;
    }
  return m;
}

TwoBeamSeries simulate_two_beam(const TransferMatrix& t, int h, int k,
                                const NoiseModel& noise, int n_samples,
                                std::uint64_t seed, double beam_i1,
                                double beam_i2) {
  validate_transfer(t);
  validate_noise(noise);
  const int n = t.n();
  if (h < 0 || h >= n || k < 0 || k >= n)
    throw DimensionError("simulate_two_beam: input index out of range");
  if (h == k)
    throw InvalidArgumentError("simulate_two_beam: inputs h and k must differ");
  if (n_samples < 2)
    throw InvalidArgumentError("simulate_two_beam: need at least 2 samples");
  if (beam_i1 < 0.0 || beam_i2 < 0.0)
    throw InvalidArgumentError("simulate_two_beam: beam intensities must be >= 0");

  const CMat c = t.composite();
  const double contrast = std::sqrt(noise.gamma);
  const double amp = 2.0 * contrast * std::sqrt(beam_i1 * beam_i2);

  // Per-output constants of I_i = I1|T_ih|^2 + I2|T_ik|^2
  //                              + 2 sqrt(g I1 I2) Re(T_ih T_ik^* e^{-i phi}).
  RVec base(n);
  CVec cross(n);
  for (int i = 0; i < n; ++i) {
    base[i] = beam_i1 * std::norm(c(i, h)) + beam_i2 * std::norm(c(i, k));
    cross[i] = c(i, h) * std::conj(c(i, k));
  }

  Rng rng(seed);
  TwoBeamSeries series;
  series.h = h;
  series.k = k;
  series.intensities.resize(n_samples, n);
  series.modulator_phase.resize(n_samples);

  const auto& mods = noise.modulator_phases;
  double phi_thermal = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    phi_thermal += rng.gaussian(0.0, noise.thermal_phase_step_sigma);
    const double phi_mod = mods[static_cast<std::size_t>(s) % mods.size()];
    const double phi = phi_mod + phi_thermal;
    const Complex rot = std::polar(1.0, -phi);
    series.modulator_phase[s] = phi_mod;
    for (int i = 0; i < n; ++i) {
      double v = base[i] + amp * (cross[i] * rot).real();
      v *= 1.0 + rng.gaussian(0.0, noise.relative_intensity_sigma);
      series.intensities(s, i) = v < 0.0 ? 0.0 : v;
    }
  }
  return series;
}

SettingsDataset simulate_settings_dataset(const std::vector<ChipConfig>& settings,
                                          const std::vector<int>& input_modes,
                                          const CVec& d1, const CVec& d2,
                                          const NoiseModel& noise,
                                          std::uint64_t seed) {
  validate_noise(noise);
  if (d1.size() != 3 || d2.size() != 3)
    throw DimensionError("simulate_settings_dataset: loss diagonals must have length 3");
  if (settings.empty())
    throw InvalidArgumentError("simulate_settings_dataset: no settings given");
  if (input_modes.empty())
    throw InvalidArgumentError("simulate_settings_dataset: no input modes given");

  Rng rng(seed);
  SettingsDataset data;
  for (int mode : input_modes) {
    if (mode < 0 || mode >= 3)
      throw DimensionError("simulate_settings_dataset: input mode out of range");
    data.inputs[mode] = {};
  }
  for (const ChipConfig& cfg : settings) {
    const CMat u = chip_unitary(cfg);
    for (int mode : input_modes) {
      SettingsDataset::Setting s;
      s.theta.assign(cfg.theta.begin(), cfg.theta.end());
      s.intensities.resize(3);
      const double in_loss = std::norm(d2[mode]);
      for (int i = 0; i < 3; ++i) {
        double v = std::norm(d1[i]) * std::norm(u(i, mode)) * in_loss;
        v *= 1.0 + rng.gaussian(0.0, noise.relative_intensity_sigma);
        s.intensities[i] = v < 0.0 ? 0.0 : v;
      }
      data.inputs[mode].push_back(std::move(s));
    }
  }
  return data;
}

double two_photon_output_probability(const CMat& u, int h, int k, int i, int j,
                                     double overlap) {
  check_index_pairs(static_cast<int>(u.rows()), h, k, i, j);
  if (overlap < 0.0 || overlap > 1.0)
    throw InvalidArgumentError("overlap must lie in [0, 1]");
  const Complex a = u(i, h) * u(j, k);
  const Complex b = u(j, h) * u(i, k);
  return std::norm(a) + std::norm(b) +
         2.0 * (a * std::conj(b)).real() * overlap;
}

double hom_visibility(const CMat& u, int h, int k, int i, int j,
                      double overlap) {
  check_index_pairs(static_cast<int>(u.rows()), h, k, i, j);
  if (overlap < 0.0 || overlap > 1.0)
    throw InvalidArgumentError("overlap must lie in [0, 1]");
  const double t_ih = std::abs(u(i, h)), t_ik = std::abs(u(i, k));
  const double t_jh = std::abs(u(j, h)), t_jk = std::abs(u(j, k));
  const double denom = t_jk * t_jk * t_ih * t_ih + t_ik * t_ik * t_jh * t_jh;
  if (denom <= 0.0)
    throw NumericError("hom_visibility: distinguishable probability vanishes");
  const double combo = std::arg(u(j, k)) + std::arg(u(i, h)) -
                       std::arg(u(i, k)) - std::arg(u(j, h));
  return -(2.0 * t_jk * t_ih * t_ik * t_jh / denom) * std::cos(combo) *
         overlap;
}

double bunching_normalized_correlation(const CMat& u, int h, int k, int i,
                                       int j) {
  check_index_pairs(static_cast<int>(u.rows()), h, k, i, j);
  const double norm = std::abs(u(i, h)) * std::abs(u(i, k)) *
                      std::abs(u(j, h)) * std::abs(u(j, k));
  if (norm <= kZeroModulusEps * kZeroModulusEps)
    throw NumericError("bunching_normalized_correlation: vanishing modulus in (" +
                       std::to_string(i) + "," + std::to_string(j) + ") x (" +
                       std::to_string(h) + "," + std::to_string(k) + ")");
  const Complex z = u(i, h) * std::conj(u(i, k)) * std::conj(u(j, h)) * u(j, k);
  return z.real() / norm;
}

}  // namespace lonet
