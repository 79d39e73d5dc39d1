#ifndef LONET_IO_HPP
#define LONET_IO_HPP

#include <string>

#include <json.hpp>

#include "lonet/core_model.hpp"
#include "lonet/moduli_recon.hpp"
#include "lonet/phase_recon.hpp"
#include "lonet/simulator.hpp"

namespace lonet {

using Json = nlohmann::json;

// Complex matrices serialize as { "n", "re": [[...]], "im": [[...]] },
// real matrices as { "n", "values": [[...]] }, loss diagonals as
// { "mod": [...], "arg": [...] }. Parsers throw ParseError with the field
// name on malformed input.

Json cmatrix_to_json(const CMat& m);
CMat cmatrix_from_json(const Json& j);

Json rmatrix_to_json(const RMat& m);
/// Also accepts a wrapper object carrying the matrix under "p" or "values",
/// so Sinkhorn result files can be fed wherever a real matrix is expected.
RMat rmatrix_from_json(const Json& j);

Json loss_to_json(const CVec& d);
CVec loss_from_json(const Json& j);

Json noise_to_json(const NoiseModel& noise);
/// Missing fields take the documented defaults.
NoiseModel noise_from_json(const Json& j);

Json dataset_to_json(const SettingsDataset& data);
SettingsDataset dataset_from_json(const Json& j);

Json correlations_to_json(const CorrelationSet& set);
CorrelationSet correlations_from_json(const Json& j);

Json phase_solution_to_json(const PhaseSolution& sol);
PhaseSolution phase_solution_from_json(const Json& j);

Json sinkhorn_to_json(const SinkhornResult& r);

/// CSV with header t,phi_M,I_0,...,I_{n-1}; one row per sample. The beam
/// indices are not part of the format and travel in the file name
/// (series_h<h>_k<k>.csv) or as explicit arguments.
std::string series_to_csv(const TwoBeamSeries& series);
TwoBeamSeries series_from_csv(const std::string& csv, int h, int k);

/// Shortest-round-trip-safe double formatting used for all CSV output.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Parses text as JSON; throws ParseError mentioning `what` on failure.
Json parse_json_text(const std::string& text, const std::string& what);

}  // namespace lonet

#endif
