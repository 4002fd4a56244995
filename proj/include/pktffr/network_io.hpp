#pragma once

#include "pktffr/grid.hpp"

#include <json.hpp>
#include <string>

namespace pktffr::grid {

/// Parses a network definition. Keys: dt, nominal_hz, buses, lines,
/// generators, with per-entry field names matching the struct members.
/// Unknown keys are rejected with ConfigError.
GridModel network_from_json(const nlohmann::json& j);
GridModel load_network(const std::string& path);
nlohmann::json network_to_json(const GridModel& model);

} // namespace pktffr::grid
