#include "lonet/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lonet/error.hpp"

namespace lonet {

namespace {

const Json& require(const Json& j, const char* field, const char* what) {
  if (!j.is_object() || !j.contains(field))
    throw ParseError(std::string(what) + ": missing field \"" + field + "\"");
  return j.at(field);
}

RMat grid_from_json(const Json& rows, int n, const char* what) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    throw ParseError(std::string(what) + ": expected " + std::to_string(n) +
                     " rows");
  RMat m(n, n);
  for (int i = 0; i < n; ++i) {
    const Json& row = rows.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ParseError(std::string(what) + ": row " + std::to_string(i) +
                       " has wrong length");
    for (int j = 0; j < n; ++j) m(i, j) = row.at(j).get<double>();
  }
  return m;
}

Json grid_to_json(const RMat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Json cmatrix_to_json(const CMat& m) {
  Json j;
  j["n"] = static_cast<int>(m.rows());
  j["re"] = grid_to_json(m.real());
  j["im"] = grid_to_json(m.imag());
  return j;
}

CMat cmatrix_from_json(const Json& j) {
  const int n = require(j, "n", "complex matrix").get<int>();
  if (n < 1) throw ParseError("complex matrix: n must be >= 1");
  const RMat re = grid_from_json(require(j, "re", "complex matrix"), n,
                                 "complex matrix re");
  const RMat im = grid_from_json(require(j, "im", "complex matrix"), n,
                                 "complex matrix im");
  CMat m(n, n);
  m.real() = re;
  m.imag() = im;
  return m;
}

Json rmatrix_to_json(const RMat& m) {
  Json j;
  j["n"] = static_cast<int>(m.rows());
  j["values"] = grid_to_json(m);
  return j;
}

RMat rmatrix_from_json(const Json& j) {
  if (j.is_object() && j.contains("p") && !j.contains("values"))
    return rmatrix_from_json(j.at("p"));
  const int n = require(j, "n", "real matrix").get<int>();
  if (n < 1) throw ParseError("real matrix: n must be >= 1");
  return grid_from_json(require(j, "values", "real matrix"), n, "real matrix");
}

Json loss_to_json(const CVec& d) {
  Json mod = Json::array(), arg = Json::array();
  for (int i = 0; i < d.size(); ++i) {
    mod.push_back(std::abs(d[i]));
    arg.push_back(std::arg(d[i]));
  }
  Json j;
  j["mod"] = std::move(mod);
  j["arg"] = std::move(arg);
  return j;
}

CVec loss_from_json(const Json& j) {
  const Json& mod = require(j, "mod", "loss diagonal");
  if (!mod.is_array() || mod.empty())
    throw ParseError("loss diagonal: \"mod\" must be a non-empty array");
  const int n = static_cast<int>(mod.size());
  CVec d(n);
  if (j.contains("arg")) {
    const Json& arg = j.at("arg");
    if (!arg.is_array() || static_cast<int>(arg.size()) != n)
      throw ParseError("loss diagonal: \"arg\" length mismatch");
    for (int i = 0; i < n; ++i)
      d[i] = std::polar(mod.at(i).get<double>(), arg.at(i).get<double>());
  } else {
    for (int i = 0; i < n; ++i) d[i] = mod.at(i).get<double>();
  }
  return d;
}

Json noise_to_json(const NoiseModel& noise) {
  Json j;
  j["relative_intensity_sigma"] = noise.relative_intensity_sigma;
  j["thermal_phase_step_sigma"] = noise.thermal_phase_step_sigma;
  j["modulator_phases"] = noise.modulator_phases;
  j["gamma"] = noise.gamma;
  return j;
}

NoiseModel noise_from_json(const Json& j) {
  NoiseModel noise;
  if (j.is_null()) return noise;
  if (!j.is_object()) throw ParseError("noise model: expected an object");
  if (j.contains("relative_intensity_sigma"))
    noise.relative_intensity_sigma = j.at("relative_intensity_sigma").get<double>();
  if (j.contains("thermal_phase_step_sigma"))
    noise.thermal_phase_step_sigma = j.at("thermal_phase_step_sigma").get<double>();
  if (j.contains("modulator_phases"))
    noise.modulator_phases = j.at("modulator_phases").get<std::vector<double>>();
  if (j.contains("gamma")) noise.gamma = j.at("gamma").get<double>();
  validate_noise(noise);
  return noise;
}

Json dataset_to_json(const SettingsDataset& data) {
  Json inputs = Json::object();
  for (const auto& [mode, settings] : data.inputs) {
    Json list = Json::array();
    for (const auto& s : settings) {
      Json entry;
      entry["theta"] = s.theta;
      Json intensities = Json::array();
      for (int i = 0; i < s.intensities.size(); ++i)
        intensities.push_back(s.intensities[i]);
      entry["intensities"] = std::move(intensities);
      list.push_back(std::move(entry));
    }
    inputs[std::to_string(mode)] = std::move(list);
  }
  Json j;
  j["inputs"] = std::move(inputs);
  return j;
}

SettingsDataset dataset_from_json(const Json& j) {
  const Json& inputs = require(j, "inputs", "settings dataset");
  if (!inputs.is_object())
    throw ParseError("settings dataset: \"inputs\" must be an object");
  SettingsDataset data;
  for (auto it = inputs.begin(); it != inputs.end(); ++it) {
    int mode = 0;
    try {
      mode = std::stoi(it.key());
    } catch (const std::exception&) {
      throw ParseError("settings dataset: input key \"" + it.key() +
                       "\" is not a mode index");
    }
    std::vector<SettingsDataset::Setting> settings;
    for (const Json& entry : it.value()) {
      SettingsDataset::Setting s;
      s.theta = require(entry, "theta", "settings dataset entry")
                    .get<std::vector<double>>();
      const auto vals = require(entry, "intensities", "settings dataset entry")
                            .get<std::vector<double>>();
      s.intensities = Eigen::Map<const RVec>(vals.data(),
                                             static_cast<Eigen::Index>(vals.size()));
      settings.push_back(std::move(s));
    }
    data.inputs[mode] = std::move(settings);
  }
  return data;
}

Json correlations_to_json(const CorrelationSet& set) {
  Json list = Json::array();
  for (const auto& [key, e] : set.entries) {
    Json entry;
    entry["h"] = key.h;
    entry["k"] = key.k;
    entry["i"] = key.i;
    entry["j"] = key.j;
    entry["c"] = e.c;
    entry["stderr"] = e.stderr;
    entry["samples"] = e.samples;
    list.push_back(std::move(entry));
  }
  return list;
}

CorrelationSet correlations_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("correlation set: expected an array");
  CorrelationSet set;
  for (const Json& entry : j) {
    CorrelationEstimate e;
    e.c = require(entry, "c", "correlation entry").get<double>();
    e.stderr = require(entry, "stderr", "correlation entry").get<double>();
    e.samples = entry.contains("samples") ? entry.at("samples").get<int>() : 0;
    set.insert(CorrelationKey::normalized(
                   require(entry, "h", "correlation entry").get<int>(),
                   require(entry, "k", "correlation entry").get<int>(),
                   require(entry, "i", "correlation entry").get<int>(),
                   require(entry, "j", "correlation entry").get<int>()),
               e);
  }
  return set;
}

Json phase_solution_to_json(const PhaseSolution& sol) {
  Json j;
  j["phases"] = grid_to_json(sol.phases);
  j["confidence"] = grid_to_json(sol.confidence);
  j["chi2"] = sol.chi2;
  return j;
}

PhaseSolution phase_solution_from_json(const Json& j) {
  const Json& rows = require(j, "phases", "phase solution");
  if (!rows.is_array() || rows.empty())
    throw ParseError("phase solution: \"phases\" must be a non-empty array");
  const int n = static_cast<int>(rows.size());
  PhaseSolution sol;
  sol.phases = grid_from_json(rows, n, "phase solution phases");
  if (j.contains("confidence"))
    sol.confidence = grid_from_json(j.at("confidence"), n,
                                    "phase solution confidence");
  else
    sol.confidence = RMat::Ones(n, n);
  sol.chi2 = j.contains("chi2") ? j.at("chi2").get<double>() : 0.0;
  return sol;
}

Json sinkhorn_to_json(const SinkhornResult& r) {
  Json j;
  j["p"] = rmatrix_to_json(r.p);
  Json d1 = Json::array(), d2 = Json::array();
  for (int i = 0; i < r.d1.size(); ++i) d1.push_back(r.d1[i]);
  for (int i = 0; i < r.d2.size(); ++i) d2.push_back(r.d2[i]);
  j["d1"] = std::move(d1);
  j["d2"] = std::move(d2);
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["stalled"] = r.stalled;
  return j;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string series_to_csv(const TwoBeamSeries& series) {
  std::ostringstream os;
  os << "t,phi_M";
  for (int i = 0; i < series.modes(); ++i) os << ",I_" << i;
  os << "\n";
  for (int t = 0; t < series.samples(); ++t) {
    os << t << "," << format_double(series.modulator_phase[t]);
    for (int i = 0; i < series.modes(); ++i)
      os << "," << format_double(series.intensities(t, i));
    os << "\n";
  }
  return os.str();
}

TwoBeamSeries series_from_csv(const std::string& csv, int h, int k) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line))
    throw ParseError("series CSV: empty input");
  if (line.rfind("t,phi_M,I_0", 0) != 0)
    throw ParseError("series CSV: unexpected header \"" + line + "\"");
  const int n = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
  if (n < 1) throw ParseError("series CSV: no intensity columns");

  std::vector<double> mods;
  std::vector<double> values;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> parsed;
    while (std::getline(ls, field, ',')) {
      char* end = nullptr;
      parsed.push_back(std::strtod(field.c_str(), &end));
      if (end == field.c_str())
        throw ParseError("series CSV: bad number \"" + field + "\" in row " +
                         std::to_string(rows));
    }
    if (static_cast<int>(parsed.size()) != n + 2)
      throw ParseError("series CSV: row " + std::to_string(rows) +
                       " has wrong field count");
    mods.push_back(parsed[1]);
    values.insert(values.end(), parsed.begin() + 2, parsed.end());
    ++rows;
  }
  if (rows == 0) throw ParseError("series CSV: no samples");

  TwoBeamSeries series;
  series.h = h;
  series.k = k;
  series.modulator_phase = std::move(mods);
  series.intensities = Eigen::Map<const Eigen::Matrix<
      double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(),
                                                                rows, n);
  return series;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

Json parse_json_text(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(what + ": invalid JSON");
  return j;
}

}  // namespace lonet
