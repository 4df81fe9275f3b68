// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "json.hpp"
#include "vrl/sim/world.hpp"

namespace vrl {

void to_json(nlohmann::json& j, const Rng& r);
void from_json(const nlohmann::json& j, Rng& r);

namespace sim {

void to_json(nlohmann::json& j, ZoneKind v);
void from_json(const nlohmann::json& j, ZoneKind& v);
void to_json(nlohmann::json& j, Orientation v);
void from_json(const nlohmann::json& j, Orientation& v);
void to_json(nlohmann::json& j, Placement v);
void from_json(const nlohmann::json& j, Placement& v);
void to_json(nlohmann::json& j, Mode v);
void from_json(const nlohmann::json& j, Mode& v);
void to_json(nlohmann::json& j, IssueCategory v);
void from_json(const nlohmann::json& j, IssueCategory& v);
void to_json(nlohmann::json& j, FaultKind v);
void from_json(const nlohmann::json& j, FaultKind& v);

void to_json(nlohmann::json& j, const Rect& v);
void from_json(const nlohmann::json& j, Rect& v);
void to_json(nlohmann::json& j, const Zone& v);
void from_json(const nlohmann::json& j, Zone& v);
void to_json(nlohmann::json& j, const BlockSpec& v);
void from_json(const nlohmann::json& j, BlockSpec& v);
void to_json(nlohmann::json& j, const FieldConfig& v);
void from_json(const nlohmann::json& j, FieldConfig& v);
void to_json(nlohmann::json& j, const FaultModel& v);
void from_json(const nlohmann::json& j, FaultModel& v);
void to_json(nlohmann::json& j, const PerceptionProfile& v);
void from_json(const nlohmann::json& j, PerceptionProfile& v);
void to_json(nlohmann::json& j, const BlockLocation& v);
void from_json(const nlohmann::json& j, BlockLocation& v);
void to_json(nlohmann::json& j, const BlockState& v);
void from_json(const nlohmann::json& j, BlockState& v);
void to_json(nlohmann::json& j, const BlockFault& v);
void from_json(const nlohmann::json& j, BlockFault& v);
void to_json(nlohmann::json& j, const WorldEvent& v);
void from_json(const nlohmann::json& j, WorldEvent& v);
void to_json(nlohmann::json& j, const WorldState& v);
void from_json(const nlohmann::json& j, WorldState& v);
void to_json(nlohmann::json& j, const ZoneView& v);
void from_json(const nlohmann::json& j, ZoneView& v);
void to_json(nlohmann::json& j, const Observation& v);
void from_json(const nlohmann::json& j, Observation& v);
void to_json(nlohmann::json& j, const GroundTruthIssue& v);
void from_json(const nlohmann::json& j, GroundTruthIssue& v);

// Reads and checks a field config file; errors are SimError(InvalidConfig).
FieldConfig load_field_config(const std::filesystem::path& path);

// Canonical text of a world state: sorted keys, no whitespace.
std::string canonical(const WorldState& world);

}  // namespace sim
}  // namespace vrl
