// lonet command-line tool: simulate measurement data for lossy multi-mode
// interferometers and reconstruct the network matrix from it. Thin driver
// over the shared-library C API; all numerics live in liblonet.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lonet.h"

namespace {

namespace fs = std::filesystem;

// Exit codes, also documented in the README: 0 success, 2 config/parse,
// 3 simulate stage, 4 moduli stage, 5 phase stage, 6 assembly/comparison
// stage, 7 file I/O, 8 invalid argument or dimension, 9 numeric failure,
// 1 anything else.
int exit_code_for(lonet_status status) {
  const std::string stage = lonet_last_error_stage();
  if (stage == "simulate") return 3;
  if (stage == "moduli") return 4;
  if (stage == "phases") return 5;
  if (stage == "assemble" || stage == "compare") return 6;
  if (stage == "ground_truth") return 2;
  switch (status) {
    case LONET_ERR_PARSE:
      return 2;
    case LONET_ERR_IO:
      return 7;
    case LONET_ERR_INVALID_ARGUMENT:
    case LONET_ERR_DIMENSION:
      return 8;
    case LONET_ERR_NUMERIC:
      return 9;
    default:
      return 1;
  }
}

[[noreturn]] void fail(lonet_status status) {
  std::cerr << "error: " << lonet_last_error() << "\n";
  std::exit(exit_code_for(status));
}

void check(lonet_status status) {
  if (status != LONET_OK) fail(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(7);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(7);
  }
}

// Owned C string with RAII release.
class ApiString {
 public:
  ~ApiString() { lonet_string_free(ptr_); }
  char** out() { return &ptr_; }
  const char* get() const { return ptr_; }
  std::string str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

std::string load_config(const std::string& path,
                        const std::optional<std::uint64_t>& seed) {
  std::string text = read_file(path);
  if (!seed) return text;
  ApiString overridden;
  check(lonet_config_with_seed(text.c_str(), *seed, overridden.out()));
  return overridden.str();
}

// series_h<h>_k<k>.csv -> (h, k)
bool parse_series_name(const std::string& name, int* h, int* k) {
  int consumed = 0;
  if (std::sscanf(name.c_str(), "series_h%d_k%d.csv%n", h, k, &consumed) != 2)
    return false;
  return consumed == static_cast<int>(name.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characterization of multi-mode linear optical networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_path;
  std::optional<std::uint64_t> seed;

  auto* simulate = app.add_subcommand(
      "simulate", "Generate measurement files for a pipeline config");
  simulate->add_option("--config", config_path, "pipeline config JSON file")
      ->required();
  simulate->add_option("--out", out_dir, "output directory")->required();
  simulate->add_option("--seed", seed, "override the config seed");

  std::string method = "sinkhorn";
  double tol = 1e-12;
  int max_iter = 100000;
  std::string moduli_out;
  auto* moduli = app.add_subcommand(
      "reconstruct-moduli", "Recover P and the loss vectors from intensities");
  moduli->add_option("--method", method, "sinkhorn | variance")
      ->check(CLI::IsMember({"sinkhorn", "variance"}));
  moduli
      ->add_option("--input", input_path,
                   "intensity matrix JSON (sinkhorn) or settings dataset "
                   "JSON (variance)")
      ->required();
  moduli->add_option("--tol", tol, "Sinkhorn convergence tolerance");
  moduli->add_option("--max-iter", max_iter, "Sinkhorn iteration budget");
  moduli->add_option("--out", moduli_out, "result file (default: stdout)");

  std::string series_dir, moduli_path, phases_out;
  bool refine = false;
  double tol_sign = 0.05;
  auto* phases = app.add_subcommand(
      "reconstruct-phases", "Estimate correlations and solve for the phases");
  phases->add_option("--series-dir", series_dir,
                     "directory with series_h<h>_k<k>.csv files")
      ->required();
  phases->add_option("--moduli", moduli_path,
                     "probability matrix or Sinkhorn result JSON")
      ->required();
  phases->add_flag("--refine", refine, "least-squares refinement pass");
  phases->add_option("--tol-sign", tol_sign,
                     "phase distance to 0/pi below which signs are ambiguous");
  phases->add_option("--out", phases_out,
                     "output directory for correlations.json and phases.json "
                     "(default: phases to stdout)");

  auto* pipeline = app.add_subcommand(
      "pipeline", "Full simulate + reconstruct + compare run");
  pipeline->add_option("--config", config_path, "pipeline config JSON file")
      ->required();
  pipeline->add_option("--out", out_dir,
                       "directory for measurement files and report.json");
  pipeline->add_option("--seed", seed, "override the config seed");

  std::string a_path, b_path, compare_out;
  auto* compare = app.add_subcommand(
      "compare", "Compare two reports or matrices (fidelities, phases, chi2)");
  compare->add_option("--a", a_path, "first document")->required();
  compare->add_option("--b", b_path, "second document")->required();
  compare->add_option("--out", compare_out, "summary file (default: stdout)");

  auto* plot = app.add_subcommand(
      "plot-data", "Emit sweep CSVs (intensities, weighted sums, correlations)");
  plot->add_option("--config", config_path, "pipeline config JSON file")
      ->required();
  plot->add_option("--out", out_dir, "output directory")->required();
  plot->add_option("--seed", seed, "override the config seed");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed()) {
    const std::string config = load_config(config_path, seed);
    check(lonet_simulate_dataset(config.c_str(), out_dir.c_str()));
    return 0;
  }

  if (moduli->parsed()) {
    const std::string text = read_file(input_path);
    ApiString result;
    if (method == "sinkhorn") {
      lonet_rmatrix* m = nullptr;
      check(lonet_rmatrix_parse(text.c_str(), &m));
      const lonet_status status =
          lonet_sinkhorn_json(m, tol, max_iter, result.out());
      lonet_rmatrix_free(m);
      check(status);
    } else {
      check(lonet_variance_reconstruct(text.c_str(), result.out()));
    }
    if (moduli_out.empty())
      std::cout << result.get();
    else
      write_file(moduli_out, result.str());
    return 0;
  }

  if (phases->parsed()) {
    std::vector<std::pair<int, std::string>> found;  // (sort key, path)
    std::vector<std::pair<int, int>> beams;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(series_dir, ec)) {
      int h = 0, k = 0;
      const std::string name = entry.path().filename().string();
      if (!parse_series_name(name, &h, &k)) continue;
      found.emplace_back(h * 1000 + k, entry.path().string());
      beams.emplace_back(h, k);
    }
    if (ec) {
      std::cerr << "error: cannot read " << series_dir << ": " << ec.message()
                << "\n";
      return 7;
    }
    if (found.empty()) {
      std::cerr << "error: no series_h<h>_k<k>.csv files in " << series_dir
                << "\n";
      return 8;
    }
    std::vector<std::size_t> order(found.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return found[a].first < found[b].first;
    });

    std::vector<lonet_series*> series;
    for (std::size_t i : order) {
      const std::string csv = read_file(found[i].second);
      lonet_series* s = nullptr;
      check(lonet_series_parse_csv(csv.c_str(), beams[i].first,
                                   beams[i].second, &s));
      series.push_back(s);
    }
    ApiString correlations;
    const lonet_status est_status = lonet_estimate_correlations_multi(
        const_cast<const lonet_series* const*>(series.data()),
        static_cast<int>(series.size()), correlations.out());
    for (lonet_series* s : series) lonet_series_free(s);
    check(est_status);

    lonet_rmatrix* p = nullptr;
    check(lonet_rmatrix_parse(read_file(moduli_path).c_str(), &p));
    ApiString solution;
    const lonet_status solve_status = lonet_solve_phases(
        correlations.get(), p, refine ? 1 : 0, tol_sign, solution.out());
    lonet_rmatrix_free(p);
    check(solve_status);

    if (phases_out.empty()) {
      std::cout << solution.get();
    } else {
      fs::create_directories(phases_out);
      write_file((fs::path(phases_out) / "correlations.json").string(),
                 correlations.str());
      write_file((fs::path(phases_out) / "phases.json").string(),
                 solution.str());
    }
    return 0;
  }

  if (pipeline->parsed()) {
    const std::string config = load_config(config_path, seed);
    ApiString report;
    check(lonet_pipeline_run(config.c_str(),
                             out_dir.empty() ? nullptr : out_dir.c_str(),
                             report.out()));
    std::cout << report.get();
    return 0;
  }

  if (compare->parsed()) {
    ApiString summary;
    check(lonet_compare_json(read_file(a_path).c_str(),
                             read_file(b_path).c_str(), summary.out()));
    if (compare_out.empty())
      std::cout << summary.get();
    else
      write_file(compare_out, summary.str());
    return 0;
  }

  if (plot->parsed()) {
    const std::string config = load_config(config_path, seed);
    check(lonet_plot_data(config.c_str(), out_dir.c_str()));
    return 0;
  }

  return 0;
}
