// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"
#include "vrl/bt/tree.hpp"

namespace vrl::bt {

void to_json(nlohmann::json& j, TickStatus v);
void from_json(const nlohmann::json& j, TickStatus& v);
void to_json(nlohmann::json& j, const TraceEvent& v);
void from_json(const nlohmann::json& j, TraceEvent& v);

}  // namespace vrl::bt
