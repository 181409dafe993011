#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mrsi/admm.hpp"
#include "mrsi/geometry.hpp"
#include "mrsi/model_selection.hpp"
#include "mrsi/phantom.hpp"
#include "mrsi/sampling.hpp"

namespace mrsi::json_io {

using nlohmann::json;

/// Parses a file; ConfigError on I/O or syntax failure.
json load(const std::filesystem::path& path);

/// Required-field lookup. Missing fields raise ConfigError naming `path.key`.
const json& require(const json& j, const std::string& key, const std::string& path);

json to_json(const AcquisitionGeometry& g);
AcquisitionGeometry geometry_from_json(const json& j, const std::string& path = "geometry");

/// {M, frame_interval_s, frames: [{m, point: {spectral, k}} | {m, gap: true}]}
/// Frames carrying several points use "points": [...] instead of "point".
json to_json(const SamplingSchedule& s);
SamplingSchedule schedule_from_json(const json& j, const std::string& path = "schedule");

SamplerConfig sampler_from_json(const json& j, const std::string& path = "sampler");
PhantomConfig phantom_from_json(const json& j, const std::string& path = "");
SolverConfig solver_from_json(const json& j, const std::string& path = "solver");
json to_json(const SolverConfig& c);
json to_json(const Regularization& r);

/// Serialized with a trailing newline; key order is fixed, so equal inputs
/// give equal bytes.
std::string dump(const json& j);
void write(const std::filesystem::path& path, const json& j);

}  // namespace mrsi::json_io
