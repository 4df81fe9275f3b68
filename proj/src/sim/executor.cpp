// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "vrl/sim/executor.hpp"

namespace vrl::sim {

namespace {

bool listed(const std::vector<std::string>& kinds, std::string_view kind) {
    return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

}  // namespace

bool WorldExecutor::supports_action(std::string_view kind) const { return listed(action_kinds(), kind); }

bool WorldExecutor::supports_condition(std::string_view kind) const { return listed(condition_kinds(), kind); }

bt::LeafOutcome WorldExecutor::run_action(const bt::BTNode& node) {
    try {
        const auto out = execute_action(world_, node.leaf_kind, node.params, faults_);
        const auto& ev = world_.event_log[out.event_index];
        std::string detail = ev.note;
        if (node.leaf_kind == "PlaceBlocks" && out.status == bt::TickStatus::Success) {
            detail = "zone=" + ev.robot_zone + " " + detail;
        }
        if (node.leaf_kind == "PickBlocks" || node.leaf_kind == "RotateBlocks") {
            detail += (detail.empty() ? "" : " ") + std::string("carried=") + join(world_.carried);
        }
        for (const auto& f : ev.faults) {
            detail += (detail.empty() ? "" : " ") + std::string("fault=") + std::string(to_string(f.kind));
        }
        return {out.status, detail, out.event_index};
    } catch (const SimError& e) {
        ++errors_;
        return {bt::TickStatus::Failure, std::string("error: ") + e.what(), std::nullopt};
    }
}

bt::LeafOutcome WorldExecutor::check_condition(const bt::BTNode& node) {
    try {
        const bool ok = sim::check_condition(world_, node.leaf_kind, node.params);
        return {ok ? bt::TickStatus::Success : bt::TickStatus::Failure, {}, std::nullopt};
    } catch (const SimError& e) {
        ++errors_;
        return {bt::TickStatus::Failure, std::string("error: ") + e.what(), std::nullopt};
    }
}

}  // namespace vrl::sim
