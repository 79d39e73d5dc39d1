#include "lonet/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "lonet/error.hpp"
#include "lonet/rng.hpp"

namespace lonet {

namespace {

// Sub-seed streams, fixed so that write_simulated_dataset and run_pipeline
// generate identical data for the same config.
constexpr std::uint64_t kStreamIntensity = 1;
constexpr std::uint64_t kStreamSettingsTheta = 2;
constexpr std::uint64_t kStreamSettingsNoise = 3;
constexpr std::uint64_t kStreamSeriesBase = 100;
constexpr std::uint64_t kStreamSweep = 201;
constexpr std::uint64_t kStreamSweepSeries = 202;

constexpr double kPhaseCompareGate = 1e-10;  // on probability entries

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>* sink) : sink_(sink) {}
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    try {
      auto result = f();
      record(stage, start);
      return result;
    } catch (const Error& e) {
      record(stage, start);
      throw Error(e.code(), stage + " stage: " + e.what(), stage);
    }
  }

 private:
  void record(const std::string& stage,
              std::chrono::steady_clock::time_point start) {
    const auto end = std::chrono::steady_clock::now();
    (*sink_)[stage] =
        std::chrono::duration<double, std::milli>(end - start).count();
  }
  std::map<std::string, double>* sink_;
};

CVec ones_if_empty(const CVec& d, int n) {
  if (d.size() == 0) return CVec::Ones(n);
  return d;
}

}  // namespace

void validate_config(const PipelineConfig& cfg) {
  if (cfg.n < 2) throw InvalidArgumentError("config: n must be >= 2");
  if (!cfg.use_sinkhorn && !cfg.use_variance)
    throw InvalidArgumentError("config: select at least one moduli method");
  if (cfg.samples_per_series < 100)
    throw InvalidArgumentError("config: samples_per_series must be >= 100");
  if (cfg.use_variance) {
    if (cfg.circuit.kind != CircuitSpec::Kind::chip || cfg.n != 3)
      throw InvalidArgumentError(
          "config: the variance method needs the reconfigurable 3-mode chip");
    if (cfg.settings_count < 2)
      throw InvalidArgumentError("config: settings_count must be >= 2");
  }
  if (cfg.circuit.kind == CircuitSpec::Kind::chip && cfg.n != 3)
    throw InvalidArgumentError("config: the chip circuit has exactly 3 modes");
  if (cfg.circuit.kind == CircuitSpec::Kind::matrix &&
      cfg.circuit.matrix.rows() != cfg.n)
    throw InvalidArgumentError("config: circuit matrix size does not match n");
  validate_noise(cfg.noise);
}

PipelineConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  PipelineConfig cfg;
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("circuit")) {
    const Json& c = j.at("circuit");
    const std::string type =
        c.contains("type") ? c.at("type").get<std::string>() : "chip";
    if (type == "chip") {
      cfg.circuit.kind = CircuitSpec::Kind::chip;
      if (c.contains("theta")) {
        const auto theta = c.at("theta").get<std::vector<double>>();
        if (theta.size() != 3)
          throw ParseError("config: chip theta must have 3 entries");
        std::copy(theta.begin(), theta.end(), cfg.circuit.chip.theta.begin());
      }
    } else if (type == "haar") {
      cfg.circuit.kind = CircuitSpec::Kind::haar;
      cfg.circuit.haar_seed =
          c.contains("seed") ? c.at("seed").get<std::uint64_t>() : cfg.seed;
    } else if (type == "matrix") {
      cfg.circuit.kind = CircuitSpec::Kind::matrix;
      if (!c.contains("matrix"))
        throw ParseError("config: circuit type \"matrix\" needs a \"matrix\" object");
      cfg.circuit.matrix = cmatrix_from_json(c.at("matrix"));
    } else {
      throw ParseError("config: unknown circuit type \"" + type + "\"");
    }
  }
  if (j.contains("losses")) {
    const Json& l = j.at("losses");
    if (l.contains("d1")) cfg.d1 = loss_from_json(l.at("d1"));
    if (l.contains("d2")) cfg.d2 = loss_from_json(l.at("d2"));
  }
  if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
  if (j.contains("samples_per_series"))
    cfg.samples_per_series = j.at("samples_per_series").get<int>();
  if (j.contains("settings_count"))
    cfg.settings_count = j.at("settings_count").get<int>();
  if (j.contains("methods")) {
    cfg.use_sinkhorn = false;
    cfg.use_variance = false;
    for (const Json& m : j.at("methods")) {
      const std::string name = m.get<std::string>();
      if (name == "sinkhorn")
        cfg.use_sinkhorn = true;
      else if (name == "variance")
        cfg.use_variance = true;
      else
        throw ParseError("config: unknown method \"" + name + "\"");
    }
  }
  if (j.contains("refine")) cfg.refine = j.at("refine").get<bool>();
  if (j.contains("all_pairs")) cfg.all_pairs = j.at("all_pairs").get<bool>();
  if (j.contains("tol_sign")) cfg.tol_sign = j.at("tol_sign").get<double>();
  validate_config(cfg);
  return cfg;
}

Json config_to_json(const PipelineConfig& cfg) {
  Json j;
  j["n"] = cfg.n;
  j["seed"] = cfg.seed;
  Json circuit;
  switch (cfg.circuit.kind) {
    case CircuitSpec::Kind::chip:
      circuit["type"] = "chip";
      circuit["theta"] = std::vector<double>(cfg.circuit.chip.theta.begin(),
                                             cfg.circuit.chip.theta.end());
      break;
    case CircuitSpec::Kind::haar:
      circuit["type"] = "haar";
      circuit["seed"] = cfg.circuit.haar_seed;
      break;
    case CircuitSpec::Kind::matrix:
      circuit["type"] = "matrix";
      circuit["matrix"] = cmatrix_to_json(cfg.circuit.matrix);
      break;
  }
  j["circuit"] = std::move(circuit);
  if (cfg.d1.size() || cfg.d2.size()) {
    Json losses;
    if (cfg.d1.size()) losses["d1"] = loss_to_json(cfg.d1);
    if (cfg.d2.size()) losses["d2"] = loss_to_json(cfg.d2);
    j["losses"] = std::move(losses);
  }
  j["noise"] = noise_to_json(cfg.noise);
  j["samples_per_series"] = cfg.samples_per_series;
  j["settings_count"] = cfg.settings_count;
  Json methods = Json::array();
  if (cfg.use_sinkhorn) methods.push_back("sinkhorn");
  if (cfg.use_variance) methods.push_back("variance");
  j["methods"] = std::move(methods);
  j["refine"] = cfg.refine;
  j["all_pairs"] = cfg.all_pairs;
  j["tol_sign"] = cfg.tol_sign;
  return j;
}

GroundTruth make_ground_truth(const PipelineConfig& cfg) {
  validate_config(cfg);
  CMat u;
  switch (cfg.circuit.kind) {
    case CircuitSpec::Kind::haar:
      u = haar_random_unitary(cfg.n, cfg.circuit.haar_seed);
      break;
    case CircuitSpec::Kind::chip:
      u = chip_unitary(cfg.circuit.chip);
      break;
    case CircuitSpec::Kind::matrix:
      u = cfg.circuit.matrix;
      if (unitarity_residual(u) > 1e-8)
        throw InvalidArgumentError("config: supplied circuit matrix is not unitary");
      break;
  }
  GroundTruth truth;
  truth.transfer.unitary = u;
  truth.transfer.d1 = ones_if_empty(cfg.d1, cfg.n);
  truth.transfer.d2 = ones_if_empty(cfg.d2, cfg.n);
  validate_transfer(truth.transfer);
  truth.p = u.cwiseAbs2();
  try {
    truth.canonical = canonicalize(u);
  } catch (const NumericError&) {
    truth.canonical = std::nullopt;  // zeros in the first row/column
  }
  return truth;
}

std::vector<std::pair<int, int>> input_pair_schedule(int n, bool all_pairs) {
  std::vector<std::pair<int, int>> pairs;
  if (all_pairs) {
    for (int h = 0; h < n; ++h)
      for (int k = h + 1; k < n; ++k) pairs.emplace_back(h, k);
    return pairs;
  }
  for (int k = 1; k < n; ++k) pairs.emplace_back(0, k);
  for (int k = 2; k < n; ++k) pairs.emplace_back(1, k);
  return pairs;
}

SimulatedData simulate_pipeline_data(const PipelineConfig& cfg,
                                     const GroundTruth& truth) {
  SimulatedData data;
  data.intensity = intensity_matrix(truth.transfer, cfg.noise,
                                    Rng::derive(cfg.seed, kStreamIntensity));
  if (cfg.use_variance) {
    Rng theta_rng(Rng::derive(cfg.seed, kStreamSettingsTheta));
    std::vector<ChipConfig> settings(cfg.settings_count);
    for (ChipConfig& s : settings)
      for (double& t : s.theta) t = theta_rng.uniform(0.0, 2.0 * kPi);
    data.dataset = simulate_settings_dataset(
        settings, {0, 1, 2}, truth.transfer.d1, truth.transfer.d2, cfg.noise,
        Rng::derive(cfg.seed, kStreamSettingsNoise));
  }
  const auto schedule = input_pair_schedule(cfg.n, cfg.all_pairs);
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    data.series.push_back(simulate_two_beam(
        truth.transfer, schedule[p].first, schedule[p].second, cfg.noise,
        cfg.samples_per_series, Rng::derive(cfg.seed, kStreamSeriesBase + p)));
  }
  return data;
}

namespace {

// Per-pair estimation that drops fringe-free output pairs (their phase
// equations are gated by the moduli anyway) instead of failing the run.
CorrelationSet estimate_available(const TwoBeamSeries& series) {
  CorrelationSet out;
  for (int i = 0; i < series.modes(); ++i)
    for (int j = i + 1; j < series.modes(); ++j) {
      try {
        out.merge(estimate_correlations(series, {{i, j}}));
      } catch (const NumericError&) {
        // no fringe on this output pair
      }
    }
  return out;
}

std::optional<TruthComparison> compare_with_truth(
    const GroundTruth& truth, const RMat& p, const CMat& unitary,
    const RMat& phases) {
  TruthComparison cmp;
  cmp.fidelity_probability = fidelity_probability(p, truth.p);
  if (truth.canonical) {
    const CMat& ref = truth.canonical->entries;
    const int n = static_cast<int>(ref.rows());
    for (int c = 0; c < n; ++c)
      cmp.column_fidelities.push_back(fidelity_column(unitary.col(c), ref.col(c)));
    double max_dev = 0.0;
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k) {
        if (truth.p(j, k) <= kPhaseCompareGate) continue;
        max_dev = std::max(
            max_dev, std::abs(wrap_phase(phases(j, k) - std::arg(ref(j, k)))));
      }
    cmp.max_phase_deviation = max_dev;
  }
  return cmp;
}

}  // namespace

ReconstructionReport run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  ReconstructionReport report;
  report.n = cfg.n;
  StageTimer timer(&report.timing_ms);

  const GroundTruth truth =
      timer.run("ground_truth", [&] { return make_ground_truth(cfg); });
  const SimulatedData data =
      timer.run("simulate", [&] { return simulate_pipeline_data(cfg, truth); });

  timer.run("moduli", [&] {
    if (cfg.use_sinkhorn) report.sinkhorn = sinkhorn_decompose(data.intensity);
    if (cfg.use_variance) {
      VarianceOutcome outcome;
      outcome.weights = multi_input_weights(*data.dataset);
      std::vector<int> modes(cfg.n);
      for (int i = 0; i < cfg.n; ++i) modes[i] = i;
      outcome.p = recover_p_from_weights(data.intensity, modes,
                                         outcome.weights.alpha);
      report.variance = std::move(outcome);
    }
    if (report.sinkhorn && report.variance)
      report.cross_method_fidelity =
          fidelity_probability(report.sinkhorn->p, report.variance->p);
    if (report.sinkhorn) {
      report.p = report.sinkhorn->p;
      report.moduli_method = "sinkhorn";
    } else {
      report.p = report.variance->p;
      report.moduli_method = "variance";
    }
    return 0;
  });

  timer.run("phases", [&] {
    for (const TwoBeamSeries& series : data.series)
      report.correlations.merge(estimate_available(series));
    report.phases = solve_phases(report.correlations, report.p, cfg.tol_sign);
    if (cfg.refine)
      report.phases = refine_phases(report.phases, report.correlations, report.p);
    return 0;
  });

  timer.run("assemble", [&] {
    AssembledUnitary assembled = assemble_unitary(report.p, report.phases);
    report.unitary = std::move(assembled.canonical.entries);
    report.unitarity_residual = assembled.unitarity_residual;
    return 0;
  });

  timer.run("compare", [&] {
    report.truth =
        compare_with_truth(truth, report.p, report.unitary, report.phases.phases);
    return 0;
  });

  return report;
}

Json report_to_json(const ReconstructionReport& report, bool include_timing) {
  Json j;
  j["n"] = report.n;
  j["moduli_method"] = report.moduli_method;
  j["p"] = rmatrix_to_json(report.p);
  if (report.sinkhorn) j["sinkhorn"] = sinkhorn_to_json(*report.sinkhorn);
  if (report.variance) {
    Json v;
    Json alpha = Json::array();
    for (int i = 0; i < report.variance->weights.alpha.size(); ++i)
      alpha.push_back(report.variance->weights.alpha[i]);
    v["alpha"] = std::move(alpha);
    v["xi2"] = report.variance->weights.xi2;
    v["eigen_gap"] = report.variance->weights.eigen_gap;
    Json ratios = Json::object();
    for (const auto& [mode, ratio] : report.variance->weights.loss_ratios)
      ratios[std::to_string(mode)] = ratio;
    v["input_loss_ratios"] = std::move(ratios);
    v["p"] = rmatrix_to_json(report.variance->p);
    j["variance"] = std::move(v);
  }
  if (report.cross_method_fidelity)
    j["cross_method_fidelity"] = *report.cross_method_fidelity;
  j["correlations"] = correlations_to_json(report.correlations);
  j["phases"] = phase_solution_to_json(report.phases);
  j["unitary"] = cmatrix_to_json(report.unitary);
  j["unitarity_residual"] = report.unitarity_residual;
  if (report.truth) {
    Json t;
    t["fidelity_probability"] = report.truth->fidelity_probability;
    t["column_fidelities"] = report.truth->column_fidelities;
    if (report.truth->max_phase_deviation)
      t["max_phase_deviation"] = *report.truth->max_phase_deviation;
    j["truth"] = std::move(t);
  }
  if (include_timing) j["timing_ms"] = report.timing_ms;
  return j;
}

Json comparison_to_json(const ComparisonSummary& s) {
  Json j = Json::object();
  if (s.fidelity_probability) j["fidelity_probability"] = *s.fidelity_probability;
  if (s.column_fidelities) j["column_fidelities"] = *s.column_fidelities;
  if (s.max_phase_deviation) j["max_phase_deviation"] = *s.max_phase_deviation;
  if (s.chi2) j["chi2"] = *s.chi2;
  return j;
}

namespace {

struct ComparableDocument {
  std::optional<RMat> p;
  std::optional<CMat> unitary;
  std::optional<PhaseSolution> phases;
  std::optional<CorrelationSet> correlations;
};

ComparableDocument extract_document(const Json& j) {
  ComparableDocument doc;
  if (!j.is_object()) throw ParseError("compare: expected a JSON object");
  if (j.contains("unitary")) {  // reconstruction report
    doc.unitary = cmatrix_from_json(j.at("unitary"));
    if (j.contains("p")) doc.p = rmatrix_from_json(j.at("p"));
    if (j.contains("phases"))
      doc.phases = phase_solution_from_json(j.at("phases"));
    if (j.contains("correlations"))
      doc.correlations = correlations_from_json(j.at("correlations"));
    return doc;
  }
  if (j.contains("re")) {
    doc.unitary = cmatrix_from_json(j);
    doc.p = doc.unitary->cwiseAbs2();
    return doc;
  }
  if (j.contains("values") || j.contains("p")) {
    doc.p = rmatrix_from_json(j);
    return doc;
  }
  throw ParseError("compare: document is neither a report nor a matrix");
}

bool column_normalized(const RMat& p) {
  if ((p.array() < 0.0).any()) return false;
  return (p.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-6;
}

}  // namespace

ComparisonSummary compare_probability_matrices(const RMat& a, const RMat& b) {
  ComparisonSummary s;
  s.fidelity_probability = fidelity_probability(a, b);
  return s;
}

ComparisonSummary compare_unitaries(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows())
    throw DimensionError("compare: dimension mismatch");
  ComparisonSummary s;
  const CanonicalUnitary ca = canonicalize(a);
  const CanonicalUnitary cb = canonicalize(b);
  const int n = static_cast<int>(a.rows());
  std::vector<double> cols;
  for (int c = 0; c < n; ++c)
    cols.push_back(fidelity_column(ca.entries.col(c), cb.entries.col(c)));
  s.column_fidelities = std::move(cols);
  double max_dev = 0.0;
  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k) {
      if (std::norm(ca.entries(j, k)) <= kPhaseCompareGate ||
          std::norm(cb.entries(j, k)) <= kPhaseCompareGate)
        continue;
      max_dev = std::max(max_dev,
                         std::abs(wrap_phase(std::arg(ca.entries(j, k)) -
                                             std::arg(cb.entries(j, k)))));
    }
  s.max_phase_deviation = max_dev;
  const RMat pa = a.cwiseAbs2(), pb = b.cwiseAbs2();
  if (column_normalized(pa) && column_normalized(pb))
    s.fidelity_probability = fidelity_probability(pa, pb);
  return s;
}

ComparisonSummary compare_documents(const Json& a, const Json& b) {
  const ComparableDocument da = extract_document(a);
  const ComparableDocument db = extract_document(b);
  ComparisonSummary s;
  if (da.unitary && db.unitary) {
    try {
      s = compare_unitaries(*da.unitary, *db.unitary);
    } catch (const NumericError&) {
      // canonical form unavailable (zeros in a first row/column); fall back
      // to the probability comparison below
    }
  }
  if (da.p && db.p && !s.fidelity_probability) {
    if (da.p->rows() != db.p->rows())
      throw DimensionError("compare: dimension mismatch");
    if (column_normalized(*da.p) && column_normalized(*db.p))
      s.fidelity_probability = fidelity_probability(*da.p, *db.p);
  }
  // Cross-validation chi2: measured correlations of one side against the
  // phases reconstructed by the other (no parameters fitted here).
  if (da.correlations && db.phases && db.p) {
    s.chi2 = correlation_chi2(*da.correlations, db.phases->phases, *db.p, 0);
  } else if (db.correlations && da.phases && da.p) {
    s.chi2 = correlation_chi2(*db.correlations, da.phases->phases, *da.p, 0);
  }
  return s;
}

void write_simulated_dataset(const PipelineConfig& cfg,
                             const std::string& out_dir) {
  validate_config(cfg);
  std::filesystem::create_directories(out_dir);
  const GroundTruth truth = make_ground_truth(cfg);
  const SimulatedData data = simulate_pipeline_data(cfg, truth);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  Json gt;
  gt["unitary"] = cmatrix_to_json(truth.transfer.unitary);
  if (truth.canonical) {
    gt["canonical"] = cmatrix_to_json(truth.canonical->entries);
    gt["conjugated"] = truth.canonical->conjugated;
  }
  gt["d1"] = loss_to_json(truth.transfer.d1);
  gt["d2"] = loss_to_json(truth.transfer.d2);
  gt["p"] = rmatrix_to_json(truth.p);
  write_text_file(path("ground_truth.json"), gt.dump(2) + "\n");

  write_text_file(path("intensity_matrix.json"),
                  rmatrix_to_json(data.intensity).dump(2) + "\n");
  if (data.dataset)
    write_text_file(path("settings_dataset.json"),
                    dataset_to_json(*data.dataset).dump(2) + "\n");
  for (const TwoBeamSeries& series : data.series) {
    std::ostringstream name;
    name << "series_h" << series.h << "_k" << series.k << ".csv";
    write_text_file(path(name.str()), series_to_csv(series));
  }
}

void emit_plot_data(const PipelineConfig& cfg, const std::string& out_dir) {
  validate_config(cfg);
  if (cfg.circuit.kind != CircuitSpec::Kind::chip)
    throw InvalidArgumentError("plot-data: sweeps are defined for the chip circuit");
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };
  const CVec d1 = ones_if_empty(cfg.d1, 3);
  const CVec d2 = ones_if_empty(cfg.d2, 3);

  const int count = std::max(cfg.settings_count, 8);
  Rng sweep_rng(Rng::derive(cfg.seed, kStreamSweep));
  std::vector<double> theta1(count);
  std::vector<RVec> outputs(count);
  for (int s = 0; s < count; ++s) {
    theta1[s] = 2.0 * kPi * s / count;
    ChipConfig chip = cfg.circuit.chip;
    chip.theta[0] = theta1[s];
    const CMat u = chip_unitary(chip);
    RVec v(3);
    for (int i = 0; i < 3; ++i) {
      double value = std::norm(d1[i]) * std::norm(u(i, 0)) * std::norm(d2[0]);
      value *= 1.0 + sweep_rng.gaussian(0.0, cfg.noise.relative_intensity_sigma);
      v[i] = value < 0.0 ? 0.0 : value;
    }
    outputs[s] = std::move(v);
  }

  {
    std::ostringstream os;
    os << "theta_1,I_0,I_1,I_2,sum\n";
    for (int s = 0; s < count; ++s) {
      os << format_double(theta1[s]);
      for (int i = 0; i < 3; ++i) os << "," << format_double(outputs[s][i]);
      os << "," << format_double(outputs[s].sum()) << "\n";
    }
    write_text_file(path("intensity_sweep.csv"), os.str());
  }

  {
    const VarianceWeights w = variance_weights(outputs);
    std::ostringstream os;
    os << "theta_1,wI_0,wI_1,wI_2,weighted_sum\n";
    for (int s = 0; s < count; ++s) {
      os << format_double(theta1[s]);
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double wi = w.alpha[i] * outputs[s][i];
        sum += wi;
        os << "," << format_double(wi);
      }
      os << "," << format_double(sum) << "\n";
    }
    write_text_file(path("weighted_sums.csv"), os.str());
  }

  {
    TransferMatrix t;
    t.d1 = d1;
    t.d2 = d2;
    std::ostringstream os;
    os << "theta_1";
    const std::pair<int, int> pairs[] = {{0, 1}, {0, 2}, {1, 2}};
    for (const auto& [i, j] : pairs)
      os << ",c_" << i << j << ",stderr_" << i << j << ",cos_" << i << j;
    os << "\n";
    for (int s = 0; s < count; ++s) {
      ChipConfig chip = cfg.circuit.chip;
      chip.theta[0] = theta1[s];
      t.unitary = chip_unitary(chip);
      const TwoBeamSeries series = simulate_two_beam(
          t, 0, 1, cfg.noise, cfg.samples_per_series,
          Rng::derive(cfg.seed, kStreamSweepSeries + 16 * s));
      const CorrelationSet corr = estimate_available(series);
      os << format_double(theta1[s]);
      for (const auto& [i, j] : pairs) {
        const auto e = corr.find(0, 1, i, j);
        os << "," << format_double(e ? e->c : 0.0) << ","
           << format_double(e ? e->stderr : 0.0) << ","
           << format_double(bunching_normalized_correlation(t.unitary, 0, 1, i, j));
      }
      os << "\n";
    }
    write_text_file(path("correlation_sweep.csv"), os.str());
  }
}

}  // namespace lonet
