#ifndef LONET_PIPELINE_HPP
#define LONET_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lonet/core_model.hpp"
#include "lonet/io.hpp"
#include "lonet/moduli_recon.hpp"
#include "lonet/phase_recon.hpp"
#include "lonet/simulator.hpp"

namespace lonet {

struct CircuitSpec {
  enum class Kind { haar, chip, matrix };
  Kind kind = Kind::chip;
  std::uint64_t haar_seed = 0;
  ChipConfig chip;
  CMat matrix;  // set when kind == matrix
};

struct PipelineConfig {
  int n = 3;
  std::uint64_t seed = 1;
  CircuitSpec circuit;
  CVec d1;  // empty = lossless
  CVec d2;
  NoiseModel noise;
  int samples_per_series = 10000;
  int settings_count = 50;  // variance-method sweep size
  bool use_sinkhorn = true;
  bool use_variance = false;
  bool refine = true;
  bool all_pairs = false;
  double tol_sign = 0.05;
};

/// Throws InvalidArgumentError / ParseError on inconsistent configs:
/// n < 2, no method selected, variance without the 3-mode chip,
/// samples_per_series < 100.
void validate_config(const PipelineConfig& cfg);

PipelineConfig config_from_json(const Json& j);
Json config_to_json(const PipelineConfig& cfg);

struct GroundTruth {
  TransferMatrix transfer;
  RMat p;
  std::optional<CanonicalUnitary> canonical;  // absent when the circuit has
                                              // zeros in the first row/column
};

GroundTruth make_ground_truth(const PipelineConfig& cfg);

/// Everything the reconstruction consumes, generated with sub-seeds derived
/// from cfg.seed so that file-based runs reproduce in-process runs exactly.
struct SimulatedData {
  RMat intensity;                          // full single-input matrix
  std::optional<SettingsDataset> dataset;  // variance sweep, chip only
  std::vector<TwoBeamSeries> series;       // scheduled input pairs
};

SimulatedData simulate_pipeline_data(const PipelineConfig& cfg,
                                     const GroundTruth& truth);

/// Input pairs measured for the phase stage: (0,k) for k>=1 plus (1,k) for
/// k>=2, or every pair when all_pairs is set.
std::vector<std::pair<int, int>> input_pair_schedule(int n, bool all_pairs);

struct VarianceOutcome {
  MultiInputWeights weights;
  RMat p;
};

struct TruthComparison {
  double fidelity_probability = 0.0;
  std::vector<double> column_fidelities;  // empty when truth is not
                                          // canonicalizable
  std::optional<double> max_phase_deviation;
};

struct ReconstructionReport {
  int n = 0;
  std::optional<SinkhornResult> sinkhorn;
  std::optional<VarianceOutcome> variance;
  std::optional<double> cross_method_fidelity;
  std::string moduli_method;  // method whose P fed the assembly
  RMat p;
  CorrelationSet correlations;
  PhaseSolution phases;
  CMat unitary;
  double unitarity_residual = 0.0;
  std::optional<TruthComparison> truth;
  std::map<std::string, double> timing_ms;
};

/// Simulate, reconstruct moduli and phases, assemble, compare against the
/// ground truth. Errors from submodules are re-thrown with a stage label.
ReconstructionReport run_pipeline(const PipelineConfig& cfg);

/// Report serialization. Timing is deliberately excluded by default so that
/// identical config and seed produce byte-identical files; pass
/// include_timing for interactive inspection.
Json report_to_json(const ReconstructionReport& report,
                    bool include_timing = false);

struct ComparisonSummary {
  std::optional<double> fidelity_probability;
  std::optional<std::vector<double>> column_fidelities;
  std::optional<double> max_phase_deviation;
  std::optional<double> chi2;  // correlations of one side vs phases of the other
};

Json comparison_to_json(const ComparisonSummary& s);

/// Compares two documents, each a report, a complex matrix or a real
/// matrix (JSON forms). Emits whatever both sides support.
ComparisonSummary compare_documents(const Json& a, const Json& b);

ComparisonSummary compare_probability_matrices(const RMat& a, const RMat& b);
ComparisonSummary compare_unitaries(const CMat& a, const CMat& b);

/// Writes the simulated measurement files for a config into out_dir:
/// ground_truth.json, intensity_matrix.json, series_h<h>_k<k>.csv and
/// (when the variance method is configured) settings_dataset.json.
void write_simulated_dataset(const PipelineConfig& cfg,
                             const std::string& out_dir);

/// Emits the diagnostic sweep CSVs for a chip config into out_dir:
/// intensity_sweep.csv (raw outputs and their sum), weighted_sums.csv
/// (after variance reweighting) and correlation_sweep.csv (estimated C vs
/// the closed-form cosine).
void emit_plot_data(const PipelineConfig& cfg, const std::string& out_dir);

}  // namespace lonet

#endif
