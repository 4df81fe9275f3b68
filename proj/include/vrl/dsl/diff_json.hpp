// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"
#include "vrl/dsl/dsl.hpp"

namespace vrl::dsl {

void to_json(nlohmann::json& j, const TreeEdit& v);
void from_json(const nlohmann::json& j, TreeEdit& v);
void to_json(nlohmann::json& j, const TreeDiff& v);
void from_json(const nlohmann::json& j, TreeDiff& v);

}  // namespace vrl::dsl
