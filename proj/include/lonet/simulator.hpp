#ifndef LONET_SIMULATOR_HPP
#define LONET_SIMULATOR_HPP

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "lonet/core_model.hpp"

namespace lonet {

/// Imperfections applied to synthetic measurements.
///
/// gamma is the first-order coherence of the two injected beams: the
/// interference term of every two-beam sample is scaled by sqrt(gamma), so
/// the intensity-fluctuation products come out proportional to gamma exactly
/// as in the cross-correlation model. gamma = 1 means fully coherent beams.
struct NoiseModel {
  double relative_intensity_sigma = 1e-3;
  double thermal_phase_step_sigma = 0.05;  // radians per sample, random walk
  std::vector<double> modulator_phases = {0.0, 2.0 * kPi / 3.0,
                                          4.0 * kPi / 3.0};
  double gamma = 1.0;
};

/// Throws unless sigmas >= 0, the modulator set is non-empty and
/// gamma lies in [0, 1].
void validate_noise(const NoiseModel& noise);

/// Output-intensity record of a two-beam injection experiment.
struct TwoBeamSeries {
  int h = 0;
  int k = 1;
  RMat intensities;                     // samples x n, row t = sample t
  std::vector<double> modulator_phase;  // phi_M applied at each sample

  int samples() const { return static_cast<int>(intensities.rows()); }
  int modes() const { return static_cast<int>(intensities.cols()); }
};

/// Settings of the 3-mode reconfigurable test circuit (internal phases of
/// the heater layer between the two tritters).
struct ChipConfig {
  std::array<double, 3> theta = {0.0, 0.0, 0.0};
};

/// Intensity measurements over a sweep of circuit settings, grouped by the
/// injected input mode. Input to the variance-minimization reconstruction.
struct SettingsDataset {
  struct Setting {
    std::vector<double> theta;
    RVec intensities;  // one value per output mode
  };
  std::map<int, std::vector<Setting>> inputs;
};

/// Ideal 3-mode discrete-Fourier tritter: all |U_ij|^2 = 1/3.
CMat tritter3();

/// Tritter, heater phase layer, tritter.
CMat chip_unitary(const ChipConfig& cfg);

/// Single-input intensity matrix M_ij = |d1_i U_ij d2_j|^2 with
/// multiplicative Gaussian intensity noise; negative entries clamp to 0.
RMat intensity_matrix(const TransferMatrix& t, const NoiseModel& noise,
                      std::uint64_t seed);

/// Two coherent beams into inputs h and k; per sample the modulator phase
/// cycles through noise.modulator_phases while the thermal phase performs a
/// Gaussian random walk. beam_i1/beam_i2 are the injected intensities.
TwoBeamSeries simulate_two_beam(const TransferMatrix& t, int h, int k,
                                const NoiseModel& noise, int n_samples,
                                std::uint64_t seed, double beam_i1 = 1.0,
                                double beam_i2 = 1.0);

/// Sweeps the 3-mode chip over the given heater settings for each requested
/// input mode and records the noisy output-intensity vectors.
SettingsDataset simulate_settings_dataset(const std::vector<ChipConfig>& settings,
                                          const std::vector<int>& input_modes,
                                          const CVec& d1, const CVec& d2,
                                          const NoiseModel& noise,
                                          std::uint64_t seed);

/// Probability of one photon in each of outputs i != j for photons injected
/// in h != k with squared state overlap `overlap` (1 = indistinguishable,
/// 0 = distinguishable).
double two_photon_output_probability(const CMat& u, int h, int k, int i, int j,
                                     double overlap);

/// Hong-Ou-Mandel visibility 1 - P^I/P^D, closed form. Throws NumericError
/// when the distinguishable probability vanishes.
double hom_visibility(const CMat& u, int h, int k, int i, int j,
                      double overlap);

/// cos(phi_ih - phi_ik - phi_jh + phi_jk): the bunching-normalized
/// two-photon quantity, equal to the classical normalized cross-correlation.
/// Throws NumericError when any of the four moduli vanishes.
double bunching_normalized_correlation(const CMat& u, int h, int k, int i,
                                       int j);

}  // namespace lonet

#endif
