#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "distilkit/activation.hpp"
#include "distilkit/distillability.hpp"
#include "distilkit/states.hpp"
#include "distilkit/symmetry.hpp"
#include "distilkit/tomography.hpp"

namespace distilkit::io {

using nlohmann::json;

/// Keys every artifact may carry besides its payload.
inline constexpr const char* kMetaKeys[] = {"seed", "version", "command", "options"};

/// Fixed 12-significant-digit rendering.
std::string format_double(double v);

/// [[re, im], ...] row-major.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols);

/// {"dimA", "dimB", "pairs", "matrix"}.
json state_to_json(const BipartiteState& state);
/// Throws InvalidStateError when the matrix fails validation and
/// ParameterError on malformed or unknown keys.
BipartiteState state_from_json(const json& j);

/// {"weights", "members"}; members are inline states or paths resolved
/// against `base`.
Ensemble ensemble_from_json(const json& j, const std::filesystem::path& base = {});
json ensemble_to_json(const Ensemble& ensemble);

/// A file holding either a state or an ensemble.
Source source_from_json(const json& j, const std::filesystem::path& base = {});

json certificate_to_json(const Certificate& c);
json report_to_json(const WitnessReport& r);
json frame_to_json(const Frame& f);
json pipeline_to_json(const PipelineReport& r);
json activator_to_json(const ActivatorResult& r, double c);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// `outcome_index,count` rows after an optional `# {json}` comment line.
void write_counts_csv(std::ostream& os, const OutcomeCounts& counts, const json& meta);
OutcomeCounts read_counts_csv(std::istream& is);

}  // namespace distilkit::io
