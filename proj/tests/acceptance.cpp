// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code = number of
// failures. Criterion 9 drives the installed CLI through the LONET_CLI
// environment variable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lonet/error.hpp"
#include "lonet/io.hpp"
#include "lonet/moduli_recon.hpp"
#include "lonet/phase_recon.hpp"
#include "lonet/pipeline.hpp"
#include "lonet/rng.hpp"
#include "lonet/simulator.hpp"
#include "oracles.hpp"

using namespace lonet;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 20;
const ChipConfig kChip{{0.7, 1.9, 3.1}};

NoiseModel intensity_noise_only() {
  NoiseModel noise;
  noise.relative_intensity_sigma = 1e-3;
  noise.thermal_phase_step_sigma = 0.0;
  return noise;
}

TransferMatrix chip_transfer(bool attenuated) {
  TransferMatrix t = TransferMatrix::lossless(chip_unitary(kChip));
  if (attenuated) t.d1[0] = std::sqrt(0.5);
  return t;
}

std::vector<ChipConfig> random_settings(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ChipConfig> settings(count);
  for (ChipConfig& s : settings)
    for (double& theta : s.theta) theta = rng.uniform(0.0, 2.0 * kPi);
  return settings;
}

RMat variance_reconstruct_p(const TransferMatrix& t, int settings_count,
                            std::uint64_t seed) {
  const SettingsDataset data = simulate_settings_dataset(
      random_settings(settings_count, Rng::derive(seed, 1)), {0, 1, 2}, t.d1,
      t.d2, intensity_noise_only(), Rng::derive(seed, 2));
  const MultiInputWeights w = multi_input_weights(data);
  const RMat m =
      intensity_matrix(t, intensity_noise_only(), Rng::derive(seed, 3));
  return recover_p_from_weights(m, {0, 1, 2}, w.alpha);
}

// ---- criteria ------------------------------------------------------------

bool criterion1_sinkhorn_loss_invariance(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  double min_fidelity = 1.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RMat ma = intensity_matrix(chip_transfer(false),
                                     intensity_noise_only(),
                                     Rng::derive(seed, 11));
    const RMat mb = intensity_matrix(chip_transfer(true),
                                     intensity_noise_only(),
                                     Rng::derive(seed, 12));
    const double f = fidelity_probability(sinkhorn_decompose(ma).p,
                                          sinkhorn_decompose(mb).p);
    min_fidelity = std::min(min_fidelity, f);
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "min fidelity " << min_fidelity << " (>= 0.9997), " << elapsed
     << " s (< 5)";
  *detail = os.str();
  return min_fidelity >= 0.9997 && elapsed < 5.0;
}

bool criterion2_variance_loss_invariance(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  double min_fidelity = 1.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RMat pa =
        variance_reconstruct_p(chip_transfer(false), 50, 1000 + seed);
    const RMat pb =
        variance_reconstruct_p(chip_transfer(true), 50, 2000 + seed);
    min_fidelity = std::min(min_fidelity, fidelity_probability(pa, pb));
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "min fidelity " << min_fidelity << " (>= 0.9990), " << elapsed
     << " s (< 10)";
  *detail = os.str();
  return min_fidelity >= 0.9990 && elapsed < 10.0;
}

bool criterion3_cross_method_agreement(std::string* detail) {
  double min_fidelity = 1.0, sum = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const TransferMatrix t = chip_transfer(true);
    const RMat m =
        intensity_matrix(t, intensity_noise_only(), Rng::derive(seed, 31));
    const SettingsDataset data = simulate_settings_dataset(
        random_settings(50, Rng::derive(seed, 32)), {0, 1, 2}, t.d1, t.d2,
        intensity_noise_only(), Rng::derive(seed, 33));
    const RMat p_sinkhorn = sinkhorn_decompose(m).p;
    const RMat p_variance = recover_p_from_weights(
        m, {0, 1, 2}, multi_input_weights(data).alpha);
    const double f = fidelity_probability(p_sinkhorn, p_variance);
    min_fidelity = std::min(min_fidelity, f);
    sum += f;
  }
  const double mean = sum / kSeeds;
  std::ostringstream os;
  os << "min " << min_fidelity << " (>= 0.992), mean " << mean
     << " (>= 0.999)";
  *detail = os.str();
  return min_fidelity >= 0.992 && mean >= 0.999;
}

bool criterion4_chi2_against_closed_form(std::string* detail) {
  const auto start = std::chrono::steady_clock::now();
  const int settings = 30;
  double chi2 = 0.0;
  int count = 0;
  for (int s = 0; s < settings; ++s) {
    ChipConfig chip = kChip;
    chip.theta[0] = 2.0 * kPi * s / settings;
    const CMat u = chip_unitary(chip);
    const TransferMatrix t = TransferMatrix::lossless(u);
    const TwoBeamSeries series =
        simulate_two_beam(t, 0, 1, NoiseModel{}, 10000,
                          Rng::derive(9000 + s, 41));
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        CorrelationSet set;
        try {
          set = estimate_correlations(series, {{i, j}});
        } catch (const NumericError&) {
          continue;  // fringe-free pair at this setting
        }
        const auto e = set.find(0, 1, i, j);
        const double truth = bunching_normalized_correlation(u, 0, 1, i, j);
        const double r = (e->c - truth) / e->stderr;
        chi2 += r * r;
        ++count;
      }
  }
  chi2 /= count;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::ostringstream os;
  os << "reduced chi2 " << chi2 << " over " << count
     << " comparisons (in [0.5, 2.0]), " << elapsed << " s (< 60)";
  *detail = os.str();
  return chi2 >= 0.5 && chi2 <= 2.0 && elapsed < 60.0;
}

bool criterion5_end_to_end_column_fidelity(std::string* detail) {
  double min_fidelity = 1.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    PipelineConfig cfg;
    cfg.n = 3;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.circuit.kind = CircuitSpec::Kind::chip;
    cfg.circuit.chip = kChip;
    cfg.samples_per_series = 10000;
    cfg.refine = true;
    const ReconstructionReport report = run_pipeline(cfg);
    min_fidelity =
        std::min(min_fidelity, report.truth->column_fidelities[1]);
  }
  std::ostringstream os;
  os << "min second-column fidelity " << min_fidelity << " (>= 0.994)";
  *detail = os.str();
  return min_fidelity >= 0.994;
}

bool criterion6_oracle_equivalence(std::string* detail) {
  double worst_visibility = 0.0, worst_correlation = 0.0;
  int cases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const CMat u = haar_random_unitary(n, 60000 + trial);
    for (int h = 0; h < n; ++h)
      for (int k = h + 1; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const double v_closed = hom_visibility(u, h, k, i, j, 1.0);
            const double v_oracle =
                test::visibility_from_probabilities(u, h, k, i, j);
            worst_visibility =
                std::max(worst_visibility, std::abs(v_closed - v_oracle));
            const double c_closed =
                bunching_normalized_correlation(u, h, k, i, j);
            const double combo = std::arg(u(i, h)) - std::arg(u(i, k)) -
                                 std::arg(u(j, h)) + std::arg(u(j, k));
            worst_correlation = std::max(
                worst_correlation, std::abs(c_closed - std::cos(combo)));
            ++cases;
          }
  }
  std::ostringstream os;
  os << cases << " index choices, max |dV| " << worst_visibility
     << ", max |dC| " << worst_correlation << " (both < 1e-12)";
  *detail = os.str();
  return worst_visibility < 1e-12 && worst_correlation < 1e-12;
}

bool criterion7_sinkhorn_round_trip(std::string* detail) {
  double worst_entry = 0.0, worst_residual = 0.0;
  int worst_iterations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 15;
    const RMat p = test::random_doubly_stochastic(n, 70000 + trial);
    Rng rng(71000 + trial);
    RVec d1(n), d2(n);
    for (int i = 0; i < n; ++i) {
      d1[i] = rng.uniform(0.1, 1.0);
      d2[i] = rng.uniform(0.1, 1.0);
    }
    const RMat m = d1.asDiagonal() * p * d2.asDiagonal();
    const SinkhornResult r = sinkhorn_decompose(m, 1e-12, 10000);
    if (r.stalled) {
      *detail = "iteration stalled";
      return false;
    }
    worst_entry =
        std::max(worst_entry, (r.p - p).cwiseAbs().maxCoeff());
    worst_residual = std::max(worst_residual, r.residual);
    worst_iterations = std::max(worst_iterations, r.iterations);
  }
  std::ostringstream os;
  os << "max entry error " << worst_entry << " (< 1e-8), max residual "
     << worst_residual << " (< 1e-12), max iterations " << worst_iterations
     << " (< 1e4)";
  *detail = os.str();
  return worst_entry < 1e-8 && worst_residual < 1e-12 &&
         worst_iterations < 10000;
}

bool criterion8_loss_gamma_invariance(std::string* detail) {
  TransferMatrix bare = chip_transfer(false);
  TransferMatrix lossy = bare;
  lossy.d1[0] = std::polar(std::sqrt(0.5), 0.4);
  lossy.d1[2] = std::polar(0.9, -0.8);
  lossy.d2[1] = std::polar(0.8, 1.1);

  struct Variant {
    const TransferMatrix* t;
    double gamma;
    std::uint64_t seed;
  };
  const Variant baseline{&bare, 1.0, 81};
  const Variant variants[] = {
      {&lossy, 1.0, 82}, {&bare, 0.6, 83}, {&lossy, 0.6, 84}};

  const auto measure = [](const Variant& v) {
    NoiseModel noise;
    noise.gamma = v.gamma;
    CorrelationSet set;
    int stream = 0;
    for (const auto& [h, k] : input_pair_schedule(3, true)) {
      const TwoBeamSeries series = simulate_two_beam(
          *v.t, h, k, noise, 10000, Rng::derive(v.seed, 90 + stream++));
      set.merge(estimate_correlations(series));
    }
    return set;
  };

  const CorrelationSet base = measure(baseline);
  double worst_pull = 0.0;
  int compared = 0;
  for (const Variant& v : variants) {
    const CorrelationSet other = measure(v);
    for (const auto& [key, ea] : base.entries) {
      const auto it = other.entries.find(key);
      if (it == other.entries.end()) {
        *detail = "correlation sets differ in coverage";
        return false;
      }
      const auto& eb = it->second;
      const double sigma =
          std::sqrt(ea.stderr * ea.stderr + eb.stderr * eb.stderr);
      worst_pull = std::max(worst_pull, std::abs(ea.c - eb.c) / sigma);
      ++compared;
    }
  }
  std::ostringstream os;
  os << compared << " pairs, worst |dC|/sigma " << worst_pull << " (< 3)";
  *detail = os.str();
  return worst_pull < 3.0;
}

// ---- criterion 9: CLI determinism ----------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path.string() + ">";
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

bool identical_trees(const fs::path& a, const fs::path& b, std::string* why) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(a))
    names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const std::string& name : names) {
    if (slurp(a / name) != slurp(b / name)) {
      *why = name + " differs";
      return false;
    }
  }
  if (names.empty()) {
    *why = "no output files";
    return false;
  }
  return true;
}

bool criterion9_cli_determinism(std::string* detail) {
  const char* cli_env = std::getenv("LONET_CLI");
  if (!cli_env) {
    *detail = "LONET_CLI not set";
    return false;
  }
  const std::string cli = cli_env;
  const fs::path root = fs::temp_directory_path() / "lonet_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);

  PipelineConfig cfg;
  cfg.n = 3;
  cfg.seed = 5;
  cfg.circuit.kind = CircuitSpec::Kind::chip;
  cfg.circuit.chip = kChip;
  cfg.d1 = CVec(3);
  cfg.d1 << std::sqrt(0.5), 1.0, 1.0;
  cfg.samples_per_series = 2000;
  cfg.settings_count = 20;
  cfg.use_variance = true;
  cfg.refine = true;
  const fs::path config = root / "config.json";
  write_text_file(config.string(), config_to_json(cfg).dump(2) + "\n");

  const auto pass = [&](char tag) {
    const fs::path sim = root / (std::string("sim_") + tag);
    const fs::path pipe = root / (std::string("pipe_") + tag);
    const fs::path plots = root / (std::string("plots_") + tag);
    const fs::path recon = root / (std::string("recon_") + tag);
    fs::create_directories(recon);
    bool ok = true;
    ok &= run_cli(cli, "simulate --config " + config.string() + " --out " +
                           sim.string());
    ok &= run_cli(cli, "pipeline --config " + config.string() + " --out " +
                           pipe.string());
    ok &= run_cli(cli, "plot-data --config " + config.string() + " --out " +
                           plots.string());
    ok &= run_cli(cli, "reconstruct-moduli --method sinkhorn --input " +
                           (sim / "intensity_matrix.json").string() +
                           " --out " + (recon / "sinkhorn.json").string());
    ok &= run_cli(cli, "reconstruct-moduli --method variance --input " +
                           (sim / "settings_dataset.json").string() +
                           " --out " + (recon / "variance.json").string());
    ok &= run_cli(cli, "reconstruct-phases --series-dir " + sim.string() +
                           " --moduli " + (recon / "sinkhorn.json").string() +
                           " --refine --out " + recon.string());
    ok &= run_cli(cli, "compare --a " + (pipe / "report.json").string() +
                           " --b " + (pipe / "report.json").string() +
                           " --out " + (recon / "compare.json").string());
    return ok;
  };

  if (!pass('a') || !pass('b')) {
    *detail = "a CLI invocation failed";
    return false;
  }

  std::string why;
  for (const char* name : {"sim", "pipe", "plots", "recon"}) {
    const fs::path a = root / (std::string(name) + "_a");
    const fs::path b = root / (std::string(name) + "_b");
    if (!identical_trees(a, b, &why)) {
      *detail = std::string(name) + ": " + why;
      return false;
    }
  }
  fs::remove_all(root);
  *detail = "simulate, pipeline, plot-data, reconstruct-*, compare byte-identical";
  return true;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string*)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "loss-invariance of Sinkhorn moduli", criterion1_sinkhorn_loss_invariance},
      {2, "loss-invariance of variance-method moduli", criterion2_variance_loss_invariance},
      {3, "cross-method agreement", criterion3_cross_method_agreement},
      {4, "correlation chi2 against closed form", criterion4_chi2_against_closed_form},
      {5, "end-to-end column fidelity", criterion5_end_to_end_column_fidelity},
      {6, "two-photon oracle equivalence", criterion6_oracle_equivalence},
      {7, "Sinkhorn round-trip property", criterion7_sinkhorn_round_trip},
      {8, "loss and gamma invariance of C", criterion8_loss_gamma_invariance},
      {9, "CLI determinism", criterion9_cli_determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(&detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %d: %s — %s [%.2f s]\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.name, detail.c_str(), elapsed);
    if (!ok) ++failures;
  }
  if (failures == 0)
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures;
}
