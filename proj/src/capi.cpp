#include "lonet.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "lonet/error.hpp"
#include "lonet/io.hpp"
#include "lonet/moduli_recon.hpp"
#include "lonet/phase_recon.hpp"
#include "lonet/pipeline.hpp"
#include "lonet/simulator.hpp"

// Glue between the public C interface and the C++ core: opaque handles wrap
// the core value types, exceptions map to status codes plus a thread-local
// message.

struct lonet_cmatrix {
  lonet::CMat m;
};
struct lonet_rmatrix {
  lonet::RMat m;
};
struct lonet_transfer {
  lonet::TransferMatrix t;
};
struct lonet_series {
  lonet::TwoBeamSeries s;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_error_stage;

lonet_status set_error(lonet_status status, const std::string& message,
                       const std::string& stage = {}) {
  g_last_error = message;
  g_last_error_stage = stage;
  return status;
}

lonet_status status_of(const lonet::Error& e) {
  switch (e.code()) {
    case lonet::ErrorCode::invalid_argument:
      return LONET_ERR_INVALID_ARGUMENT;
    case lonet::ErrorCode::dimension_mismatch:
      return LONET_ERR_DIMENSION;
    case lonet::ErrorCode::numeric:
      return LONET_ERR_NUMERIC;
    case lonet::ErrorCode::parse:
      return LONET_ERR_PARSE;
    case lonet::ErrorCode::io:
      return LONET_ERR_IO;
  }
  return LONET_ERR_INTERNAL;
}

template <typename F>
lonet_status guarded(F&& f) {
  try {
    return f();
  } catch (const lonet::Error& e) {
    return set_error(status_of(e), e.what(), e.stage());
  } catch (const std::bad_alloc&) {
    return set_error(LONET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LONET_ERR_INTERNAL, e.what());
  }
}

lonet_status require(bool ok, const char* message) {
  return ok ? LONET_OK : set_error(LONET_ERR_INVALID_ARGUMENT, message);
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

lonet::NoiseModel parse_noise(const char* noise_json) {
  if (noise_json == nullptr || *noise_json == '\0') return {};
  return lonet::noise_from_json(
      lonet::parse_json_text(noise_json, "noise model"));
}

lonet::CVec diagonal_from_arrays(const double* mod, const double* arg, int n) {
  if (mod == nullptr) return lonet::CVec::Ones(n);
  lonet::CVec d(n);
  for (int i = 0; i < n; ++i)
    d[i] = std::polar(mod[i], arg ? arg[i] : 0.0);
  return d;
}

}  // namespace

extern "C" {

const char* lonet_last_error(void) { return g_last_error.c_str(); }

const char* lonet_last_error_stage(void) { return g_last_error_stage.c_str(); }

const char* lonet_version(void) { return "0.1.0"; }

void lonet_string_free(char* s) { delete[] s; }

/* ---- complex matrices ------------------------------------------------- */

lonet_status lonet_cmatrix_create(int n, const double* re, const double* im,
                                  lonet_cmatrix** out) {
  if (auto s = require(out && re && n >= 1, "cmatrix_create: bad arguments"))
    return s;
  return guarded([&] {
    lonet::CMat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = lonet::Complex(re[i * n + j], im ? im[i * n + j] : 0.0);
    *out = new lonet_cmatrix{std::move(m)};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_haar(int n, uint64_t seed, lonet_cmatrix** out) {
  if (auto s = require(out != nullptr, "cmatrix_haar: out is NULL")) return s;
  return guarded([&] {
    *out = new lonet_cmatrix{lonet::haar_random_unitary(n, seed)};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_tritter3(lonet_cmatrix** out) {
  if (auto s = require(out != nullptr, "cmatrix_tritter3: out is NULL"))
    return s;
  return guarded([&] {
    *out = new lonet_cmatrix{lonet::tritter3()};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_chip3(const double* theta, lonet_cmatrix** out) {
  if (auto s = require(out && theta, "cmatrix_chip3: bad arguments")) return s;
  return guarded([&] {
    lonet::ChipConfig cfg;
    cfg.theta = {theta[0], theta[1], theta[2]};
    *out = new lonet_cmatrix{lonet::chip_unitary(cfg)};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_parse(const char* json, lonet_cmatrix** out) {
  if (auto s = require(out && json, "cmatrix_parse: bad arguments")) return s;
  return guarded([&] {
    *out = new lonet_cmatrix{lonet::cmatrix_from_json(
        lonet::parse_json_text(json, "complex matrix"))};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_to_json(const lonet_cmatrix* m, char** json_out) {
  if (auto s = require(m && json_out, "cmatrix_to_json: bad arguments"))
    return s;
  return guarded([&] {
    *json_out = copy_string(lonet::cmatrix_to_json(m->m).dump());
    return LONET_OK;
  });
}

int lonet_cmatrix_dim(const lonet_cmatrix* m) {
  return m ? static_cast<int>(m->m.rows()) : 0;
}

lonet_status lonet_cmatrix_get(const lonet_cmatrix* m, int i, int j,
                               double* re, double* im) {
  if (auto s = require(m && re && im, "cmatrix_get: bad arguments")) return s;
  if (i < 0 || i >= m->m.rows() || j < 0 || j >= m->m.cols())
    return set_error(LONET_ERR_DIMENSION, "cmatrix_get: index out of range");
  *re = m->m(i, j).real();
  *im = m->m(i, j).imag();
  return LONET_OK;
}

lonet_status lonet_cmatrix_canonicalize(const lonet_cmatrix* m,
                                        lonet_cmatrix** out, int* conjugated) {
  if (auto s = require(m && out, "cmatrix_canonicalize: bad arguments"))
    return s;
  return guarded([&] {
    lonet::CanonicalUnitary c = lonet::canonicalize(m->m);
    if (conjugated) *conjugated = c.conjugated ? 1 : 0;
    *out = new lonet_cmatrix{std::move(c.entries)};
    return LONET_OK;
  });
}

lonet_status lonet_cmatrix_unitarity_residual(const lonet_cmatrix* m,
                                              double* out) {
  if (auto s = require(m && out, "cmatrix_unitarity_residual: bad arguments"))
    return s;
  return guarded([&] {
    *out = lonet::unitarity_residual(m->m);
    return LONET_OK;
  });
}

void lonet_cmatrix_free(lonet_cmatrix* m) { delete m; }

/* ---- real matrices ----------------------------------------------------- */

lonet_status lonet_rmatrix_create(int n, const double* values,
                                  lonet_rmatrix** out) {
  if (auto s = require(out && values && n >= 1, "rmatrix_create: bad arguments"))
    return s;
  return guarded([&] {
    lonet::RMat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = values[i * n + j];
    *out = new lonet_rmatrix{std::move(m)};
    return LONET_OK;
  });
}

lonet_status lonet_rmatrix_parse(const char* json, lonet_rmatrix** out) {
  if (auto s = require(out && json, "rmatrix_parse: bad arguments")) return s;
  return guarded([&] {
    *out = new lonet_rmatrix{lonet::rmatrix_from_json(
        lonet::parse_json_text(json, "real matrix"))};
    return LONET_OK;
  });
}

lonet_status lonet_rmatrix_to_json(const lonet_rmatrix* m, char** json_out) {
  if (auto s = require(m && json_out, "rmatrix_to_json: bad arguments"))
    return s;
  return guarded([&] {
    *json_out = copy_string(lonet::rmatrix_to_json(m->m).dump());
    return LONET_OK;
  });
}

int lonet_rmatrix_dim(const lonet_rmatrix* m) {
  return m ? static_cast<int>(m->m.rows()) : 0;
}

lonet_status lonet_rmatrix_get(const lonet_rmatrix* m, int i, int j,
                               double* out) {
  if (auto s = require(m && out, "rmatrix_get: bad arguments")) return s;
  if (i < 0 || i >= m->m.rows() || j < 0 || j >= m->m.cols())
    return set_error(LONET_ERR_DIMENSION, "rmatrix_get: index out of range");
  *out = m->m(i, j);
  return LONET_OK;
}

void lonet_rmatrix_free(lonet_rmatrix* m) { delete m; }

/* ---- fidelity metrics --------------------------------------------------- */

lonet_status lonet_fidelity_probability(const lonet_rmatrix* a,
                                        const lonet_rmatrix* b, double* out) {
  if (auto s = require(a && b && out, "fidelity_probability: bad arguments"))
    return s;
  return guarded([&] {
    *out = lonet::fidelity_probability(a->m, b->m);
    return LONET_OK;
  });
}

lonet_status lonet_fidelity_column(const lonet_cmatrix* a,
                                   const lonet_cmatrix* b, int column,
                                   double* out) {
  if (auto s = require(a && b && out, "fidelity_column: bad arguments"))
    return s;
  if (column < 0 || column >= a->m.cols() || column >= b->m.cols())
    return set_error(LONET_ERR_DIMENSION, "fidelity_column: column out of range");
  return guarded([&] {
    *out = lonet::fidelity_column(a->m.col(column), b->m.col(column));
    return LONET_OK;
  });
}

/* ---- transfer matrices and simulation ---------------------------------- */

lonet_status lonet_transfer_create(const lonet_cmatrix* unitary,
                                   const double* d1_mod, const double* d1_arg,
                                   const double* d2_mod, const double* d2_arg,
                                   lonet_transfer** out) {
  if (auto s = require(unitary && out, "transfer_create: bad arguments"))
    return s;
  return guarded([&] {
    const int n = static_cast<int>(unitary->m.rows());
    lonet::TransferMatrix t;
    t.unitary = unitary->m;
    t.d1 = diagonal_from_arrays(d1_mod, d1_arg, n);
    t.d2 = diagonal_from_arrays(d2_mod, d2_arg, n);
    lonet::validate_transfer(t);
    *out = new lonet_transfer{std::move(t)};
    return LONET_OK;
  });
}

int lonet_transfer_dim(const lonet_transfer* t) { return t ? t->t.n() : 0; }

lonet_status lonet_transfer_apply(const lonet_transfer* t, const double* in_re,
                                  const double* in_im, double* out_re,
                                  double* out_im) {
  if (auto s = require(t && in_re && out_re && out_im,
                       "transfer_apply: bad arguments"))
    return s;
  return guarded([&] {
    const int n = t->t.n();
    lonet::CVec input(n);
    for (int i = 0; i < n; ++i)
      input[i] = lonet::Complex(in_re[i], in_im ? in_im[i] : 0.0);
    const lonet::CVec output = lonet::apply_transfer(t->t, input);
    for (int i = 0; i < n; ++i) {
      out_re[i] = output[i].real();
      out_im[i] = output[i].imag();
    }
    return LONET_OK;
  });
}

void lonet_transfer_free(lonet_transfer* t) { delete t; }

lonet_status lonet_simulate_intensity(const lonet_transfer* t,
                                      const char* noise_json, uint64_t seed,
                                      lonet_rmatrix** out) {
  if (auto s = require(t && out, "simulate_intensity: bad arguments")) return s;
  return guarded([&] {
    *out = new lonet_rmatrix{
        lonet::intensity_matrix(t->t, parse_noise(noise_json), seed)};
    return LONET_OK;
  });
}

lonet_status lonet_simulate_two_beam(const lonet_transfer* t, int h, int k,
                                     const char* noise_json, int n_samples,
                                     uint64_t seed, lonet_series** out) {
  if (auto s = require(t && out, "simulate_two_beam: bad arguments")) return s;
  return guarded([&] {
    *out = new lonet_series{lonet::simulate_two_beam(
        t->t, h, k, parse_noise(noise_json), n_samples, seed)};
    return LONET_OK;
  });
}

int lonet_series_samples(const lonet_series* s) {
  return s ? s->s.samples() : 0;
}

int lonet_series_modes(const lonet_series* s) { return s ? s->s.modes() : 0; }

lonet_status lonet_series_to_csv(const lonet_series* s, char** csv_out) {
  if (auto st = require(s && csv_out, "series_to_csv: bad arguments"))
    return st;
  return guarded([&] {
    *csv_out = copy_string(lonet::series_to_csv(s->s));
    return LONET_OK;
  });
}

lonet_status lonet_series_parse_csv(const char* csv, int h, int k,
                                    lonet_series** out) {
  if (auto s = require(csv && out, "series_parse_csv: bad arguments")) return s;
  return guarded([&] {
    *out = new lonet_series{lonet::series_from_csv(csv, h, k)};
    return LONET_OK;
  });
}

void lonet_series_free(lonet_series* s) { delete s; }

/* ---- two-photon oracle -------------------------------------------------- */

lonet_status lonet_two_photon_probability(const lonet_cmatrix* u, int h, int k,
                                          int i, int j, double overlap,
                                          double* out) {
  if (auto s = require(u && out, "two_photon_probability: bad arguments"))
    return s;
  return guarded([&] {
    *out = lonet::two_photon_output_probability(u->m, h, k, i, j, overlap);
    return LONET_OK;
  });
}

lonet_status lonet_hom_visibility(const lonet_cmatrix* u, int h, int k, int i,
                                  int j, double overlap, double* out) {
  if (auto s = require(u && out, "hom_visibility: bad arguments")) return s;
  return guarded([&] {
    *out = lonet::hom_visibility(u->m, h, k, i, j, overlap);
    return LONET_OK;
  });
}

lonet_status lonet_bunching_normalized(const lonet_cmatrix* u, int h, int k,
                                       int i, int j, double* out) {
  if (auto s = require(u && out, "bunching_normalized: bad arguments"))
    return s;
  return guarded([&] {
    *out = lonet::bunching_normalized_correlation(u->m, h, k, i, j);
    return LONET_OK;
  });
}

/* ---- moduli reconstruction ---------------------------------------------- */

lonet_status lonet_sinkhorn_decompose(const lonet_rmatrix* m, double tol,
                                      int max_iter, lonet_rmatrix** p_out,
                                      double* d1, double* d2, int* iterations,
                                      double* residual, int* stalled) {
  if (auto s = require(m && p_out, "sinkhorn_decompose: bad arguments"))
    return s;
  return guarded([&] {
    lonet::SinkhornResult r = lonet::sinkhorn_decompose(m->m, tol, max_iter);
    const int n = static_cast<int>(r.p.rows());
    if (d1)
      for (int i = 0; i < n; ++i) d1[i] = r.d1[i];
    if (d2)
      for (int i = 0; i < n; ++i) d2[i] = r.d2[i];
    if (iterations) *iterations = r.iterations;
    if (residual) *residual = r.residual;
    if (stalled) *stalled = r.stalled ? 1 : 0;
    *p_out = new lonet_rmatrix{std::move(r.p)};
    return LONET_OK;
  });
}

lonet_status lonet_sinkhorn_json(const lonet_rmatrix* m, double tol,
                                 int max_iter, char** result_json) {
  if (auto s = require(m && result_json, "sinkhorn_json: bad arguments"))
    return s;
  return guarded([&] {
    *result_json = copy_string(
        lonet::sinkhorn_to_json(lonet::sinkhorn_decompose(m->m, tol, max_iter))
            .dump(2) + "\n");
    return LONET_OK;
  });
}

lonet_status lonet_variance_reconstruct(const char* dataset_json,
                                        char** result_json) {
  if (auto s = require(dataset_json && result_json,
                       "variance_reconstruct: bad arguments"))
    return s;
  return guarded([&] {
    const lonet::SettingsDataset data = lonet::dataset_from_json(
        lonet::parse_json_text(dataset_json, "settings dataset"));
    const lonet::MultiInputWeights w = lonet::multi_input_weights(data);
    lonet::Json j;
    lonet::Json alpha = lonet::Json::array();
    for (int i = 0; i < w.alpha.size(); ++i) alpha.push_back(w.alpha[i]);
    j["alpha"] = std::move(alpha);
    j["xi2"] = w.xi2;
    j["eigen_gap"] = w.eigen_gap;
    lonet::Json sums = lonet::Json::object(), ratios = lonet::Json::object();
    for (const auto& [mode, sum] : w.mean_sums)
      sums[std::to_string(mode)] = sum;
    for (const auto& [mode, ratio] : w.loss_ratios)
      ratios[std::to_string(mode)] = ratio;
    j["mean_sums"] = std::move(sums);
    j["input_loss_ratios"] = std::move(ratios);
    *result_json = copy_string(j.dump(2) + "\n");
    return LONET_OK;
  });
}

/* ---- phase reconstruction ----------------------------------------------- */

namespace {

lonet_status correlations_of_series(const lonet::TwoBeamSeries* const* series,
                                    int count, char** corrset_json) {
  lonet::CorrelationSet set;
  for (int s = 0; s < count; ++s) {
    const lonet::TwoBeamSeries& sr = *series[s];
    for (int i = 0; i < sr.modes(); ++i)
      for (int j = i + 1; j < sr.modes(); ++j) {
        try {
          set.merge(lonet::estimate_correlations(sr, {{i, j}}));
        } catch (const lonet::NumericError&) {
          // fringe-free output pair: skipped, gated downstream by moduli
        }
      }
  }
  *corrset_json = copy_string(lonet::correlations_to_json(set).dump(2) + "\n");
  return LONET_OK;
}

}  // namespace

lonet_status lonet_estimate_correlations(const lonet_series* s,
                                         char** corrset_json) {
  if (auto st = require(s && corrset_json,
                        "estimate_correlations: bad arguments"))
    return st;
  return guarded([&] {
    const lonet::TwoBeamSeries* one = &s->s;
    return correlations_of_series(&one, 1, corrset_json);
  });
}

lonet_status lonet_estimate_correlations_multi(const lonet_series* const* s,
                                               int count, char** corrset_json) {
  if (auto st = require(s && count > 0 && corrset_json,
                        "estimate_correlations_multi: bad arguments"))
    return st;
  return guarded([&] {
    std::vector<const lonet::TwoBeamSeries*> all(count);
    for (int i = 0; i < count; ++i) {
      if (!s[i])
        return set_error(LONET_ERR_INVALID_ARGUMENT,
                         "estimate_correlations_multi: NULL series");
      all[i] = &s[i]->s;
    }
    return correlations_of_series(all.data(), count, corrset_json);
  });
}

lonet_status lonet_solve_phases(const char* corrset_json,
                                const lonet_rmatrix* moduli, int refine,
                                double tol_sign, char** solution_json) {
  if (auto s = require(corrset_json && moduli && solution_json,
                       "solve_phases: bad arguments"))
    return s;
  return guarded([&] {
    const lonet::CorrelationSet set = lonet::correlations_from_json(
        lonet::parse_json_text(corrset_json, "correlation set"));
    lonet::PhaseSolution sol = lonet::solve_phases(set, moduli->m, tol_sign);
    if (refine) sol = lonet::refine_phases(sol, set, moduli->m);
    *solution_json =
        copy_string(lonet::phase_solution_to_json(sol).dump(2) + "\n");
    return LONET_OK;
  });
}

lonet_status lonet_assemble_unitary(const lonet_rmatrix* moduli,
                                    const char* solution_json,
                                    lonet_cmatrix** out) {
  if (auto s = require(moduli && solution_json && out,
                       "assemble_unitary: bad arguments"))
    return s;
  return guarded([&] {
    const lonet::PhaseSolution sol = lonet::phase_solution_from_json(
        lonet::parse_json_text(solution_json, "phase solution"));
    lonet::AssembledUnitary assembled = lonet::assemble_unitary(moduli->m, sol);
    *out = new lonet_cmatrix{std::move(assembled.canonical.entries)};
    return LONET_OK;
  });
}

/* ---- pipeline ----------------------------------------------------------- */

lonet_status lonet_pipeline_run(const char* config_json, const char* out_dir,
                                char** report_json) {
  if (auto s = require(config_json && report_json,
                       "pipeline_run: bad arguments"))
    return s;
  return guarded([&] {
    const lonet::PipelineConfig cfg = lonet::config_from_json(
        lonet::parse_json_text(config_json, "pipeline config"));
    const lonet::ReconstructionReport report = lonet::run_pipeline(cfg);
    const std::string text = lonet::report_to_json(report).dump(2) + "\n";
    if (out_dir) {
      std::filesystem::create_directories(out_dir);
      lonet::write_simulated_dataset(cfg, out_dir);
      lonet::write_text_file(
          (std::filesystem::path(out_dir) / "report.json").string(), text);
    }
    *report_json = copy_string(text);
    return LONET_OK;
  });
}

lonet_status lonet_simulate_dataset(const char* config_json,
                                    const char* out_dir) {
  if (auto s = require(config_json && out_dir,
                       "simulate_dataset: bad arguments"))
    return s;
  return guarded([&] {
    lonet::write_simulated_dataset(
        lonet::config_from_json(
            lonet::parse_json_text(config_json, "pipeline config")),
        out_dir);
    return LONET_OK;
  });
}

lonet_status lonet_compare_json(const char* a_json, const char* b_json,
                                char** summary_json) {
  if (auto s = require(a_json && b_json && summary_json,
                       "compare_json: bad arguments"))
    return s;
  return guarded([&] {
    const lonet::ComparisonSummary summary = lonet::compare_documents(
        lonet::parse_json_text(a_json, "first document"),
        lonet::parse_json_text(b_json, "second document"));
    *summary_json =
        copy_string(lonet::comparison_to_json(summary).dump(2) + "\n");
    return LONET_OK;
  });
}

lonet_status lonet_plot_data(const char* config_json, const char* out_dir) {
  if (auto s = require(config_json && out_dir, "plot_data: bad arguments"))
    return s;
  return guarded([&] {
    lonet::emit_plot_data(
        lonet::config_from_json(
            lonet::parse_json_text(config_json, "pipeline config")),
        out_dir);
    return LONET_OK;
  });
}

lonet_status lonet_config_with_seed(const char* config_json, uint64_t seed,
                                    char** out_json) {
  if (auto s = require(config_json && out_json,
                       "config_with_seed: bad arguments"))
    return s;
  return guarded([&] {
    lonet::Json j = lonet::parse_json_text(config_json, "pipeline config");
    if (!j.is_object())
      return set_error(LONET_ERR_PARSE, "pipeline config: expected an object");
    j["seed"] = seed;
    *out_json = copy_string(j.dump());
    return LONET_OK;
  });
}

}  // extern "C"
