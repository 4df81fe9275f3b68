// SPDX-License-Identifier: Apache-2.0
#include <map>
#include <set>

#include "vrl/sim/world.hpp"

namespace vrl::sim {

std::string_view to_string(IssueCategory c) {
    switch (c) {
        case IssueCategory::MisorientedPlacement: return "MisorientedPlacement";
        case IssueCategory::BlockOutsideZones: return "BlockOutsideZones";
        case IssueCategory::BlockIncorrectlyPlaced: return "BlockIncorrectlyPlaced";
        case IssueCategory::PickFailure: return "PickFailure";
        case IssueCategory::DropInTransit: return "DropInTransit";
        case IssueCategory::MisRotation: return "MisRotation";
        case IssueCategory::NavigationStall: return "NavigationStall";
        case IssueCategory::VacuousSubtreeSuccess: return "VacuousSubtreeSuccess";
        case IssueCategory::ShelfNotRelocated: return "ShelfNotRelocated";
        case IssueCategory::TimeOverrun: return "TimeOverrun";
        case IssueCategory::SetupAnomaly: return "SetupAnomaly";
    }
    return "SetupAnomaly";
}

const std::vector<IssueCategory>& all_issue_categories() {
    static const std::vector<IssueCategory> all = {
        IssueCategory::MisorientedPlacement, IssueCategory::BlockOutsideZones,
        IssueCategory::BlockIncorrectlyPlaced, IssueCategory::PickFailure,
        IssueCategory::DropInTransit,        IssueCategory::MisRotation,
        IssueCategory::NavigationStall,      IssueCategory::VacuousSubtreeSuccess,
        IssueCategory::ShelfNotRelocated,    IssueCategory::TimeOverrun,
        IssueCategory::SetupAnomaly,
    };
    return all;
}

std::optional<IssueCategory> issue_category_from_string(std::string_view text) {
    for (auto c : all_issue_categories()) {
        if (to_string(c) == text) return c;
    }
    return std::nullopt;
}

namespace {

IssueCategory category_of(FaultKind kind) {
    switch (kind) {
        case FaultKind::PickFailure: return IssueCategory::PickFailure;
        case FaultKind::DropInTransit: return IssueCategory::DropInTransit;
        case FaultKind::MisRotation: return IssueCategory::MisRotation;
        case FaultKind::PlaceOffsetPartial: return IssueCategory::BlockIncorrectlyPlaced;
        case FaultKind::PlaceOffsetOutside: return IssueCategory::BlockOutsideZones;
        case FaultKind::NavigationStall: return IssueCategory::NavigationStall;
    }
    return IssueCategory::SetupAnomaly;
}

bool overlaps_unload(const WorldState& w, const BlockState& b) {
    if (b.location.kind != BlockLocation::Kind::InZone) return false;
    if (b.location.placement == Placement::Adjacent) return false;
    const Zone* z = w.config.zone(b.location.zone);
    return z && z->kind == ZoneKind::Unload;
}

}  // namespace

std::vector<GroundTruthIssue> ground_truth_issues(const WorldState& w, const bt::Trace& trace, IssueScope scope,
                                                  std::size_t first_event) {
    std::vector<GroundTruthIssue> out;

    std::map<std::size_t, bt::NodeId> node_of_event;
    for (const auto& ev : trace) {
        if (ev.world_event) node_of_event[*ev.world_event] = ev.node_id;
    }
    auto node_for = [&](std::size_t event) -> std::optional<bt::NodeId> {
        auto it = node_of_event.find(event);
        if (it == node_of_event.end()) return std::nullopt;
        return it->second;
    };

    if (scope == IssueScope::Initial) {
        for (std::size_t i = 0; i < w.blocks.size(); ++i) {
            const auto& b = w.blocks[i];
            const auto& spec = w.config.blocks[i];
            if (b.location == BlockLocation::in_zone(spec.initial_zone)) continue;
            out.push_back({"setup:" + b.block_id, IssueCategory::SetupAnomaly, std::nullopt, w.clock,
                           "block " + b.block_id + " is not fully inside its starting zone (" + to_string(b.location) + ")",
                           b.block_id});
        }
        return out;
    }

    // Faults from the event log.
    std::set<std::string> blocks_with_fault;
    for (const auto& ev : w.event_log) {
        for (const auto& f : ev.faults) {
            if (!f.block_id.empty()) blocks_with_fault.insert(f.block_id);
        }
    }
    const std::size_t from = scope == IssueScope::Final ? 0 : first_event;
    for (std::size_t i = from; i < w.event_log.size(); ++i) {
        const auto& ev = w.event_log[i];
        for (const auto& f : ev.faults) {
            const auto cat = category_of(f.kind);
            std::string id = "ev" + std::to_string(i) + ":" + std::string(to_string(cat));
            if (!f.block_id.empty()) id += ":" + f.block_id;
            std::string what = ev.action + " at t=" + std::to_string(static_cast<int>(ev.sim_time)) + ": " +
                               std::string(to_string(f.kind));
            if (!f.block_id.empty()) what += " (" + f.block_id + ")";
            out.push_back({id, cat, node_for(i), ev.sim_time, what, f.block_id});
        }
    }

    // CursorSequence returning Success without entering any child.
    struct Frame {
        std::size_t entered_at;
        int children = 0;
    };
    std::vector<Frame> stack;
    for (const auto& ev : trace) {
        if (ev.event == bt::TraceEvent::Kind::Entered) {
            if (!stack.empty()) stack.back().children += 1;
            stack.push_back({ev.sequence_no, 0});
            continue;
        }
        if (stack.empty()) continue;
        const auto frame = stack.back();
        stack.pop_back();
        if (ev.label == "CursorSequence" && ev.status == bt::TickStatus::Success && frame.children == 0) {
            out.push_back({"vacuous:" + ev.node_id + "@" + std::to_string(frame.entered_at),
                           IssueCategory::VacuousSubtreeSuccess, ev.node_id, ev.sim_time,
                           "CursorSequence '" + ev.node_id + "' returned Success without running any child", {}});
        }
    }

    // Current state.
    std::map<std::string, std::size_t> last_deposit;
    for (const auto& ev : w.event_log) {
        if (ev.action != "PlaceBlocks" || !ev.success) continue;
        for (const auto& b : ev.blocks) last_deposit[b] = ev.index;
    }
    for (const auto& b : w.blocks) {
        if (overlaps_unload(w, b) && b.orientation == Orientation::OrangeUp) {
            std::optional<bt::NodeId> node;
            auto it = last_deposit.find(b.block_id);
            if (it != last_deposit.end()) node = node_for(it->second);
            out.push_back({"state:MisorientedPlacement:" + b.block_id, IssueCategory::MisorientedPlacement, node,
                           w.clock, "block " + b.block_id + " lies OrangeUp in " + b.location.zone, b.block_id});
        }
        if (b.location.kind == BlockLocation::Kind::OutsideAllZones && !blocks_with_fault.count(b.block_id)) {
            out.push_back({"state:BlockOutsideZones:" + b.block_id, IssueCategory::BlockOutsideZones, std::nullopt,
                           w.clock, "block " + b.block_id + " is outside all zones", b.block_id});
        }
    }
    if (scope != IssueScope::Final) return out;

    for (const auto& b : w.blocks) {
        const bool carried = b.location.kind == BlockLocation::Kind::Carried;
        bool in_load = false;
        if (b.location.kind == BlockLocation::Kind::InZone) {
            const Zone* z = w.config.zone(b.location.zone);
            in_load = z && z->kind == ZoneKind::Load;
        }
        if (carried || in_load) {
            out.push_back({"state:Undelivered:" + b.block_id, IssueCategory::BlockIncorrectlyPlaced, std::nullopt,
                           w.clock,
                           "block " + b.block_id + (carried ? " is still carried" : " was never delivered (" +
                                                                                        b.location.zone + ")"),
                           b.block_id});
        }
    }
    if (w.shelf_zone != w.config.shelf.target_zone) {
        std::optional<bt::NodeId> node;
        for (const auto& ev : w.event_log) {
            if (ev.action == "MoveShelf") node = node_for(ev.index);
        }
        out.push_back({"state:ShelfNotRelocated", IssueCategory::ShelfNotRelocated, node, w.clock,
                       "shelf is at " + w.shelf_zone + ", target " + w.config.shelf.target_zone, {}});
    }
    if (w.overtime()) {
        std::optional<bt::NodeId> node;
        for (const auto& ev : w.event_log) {
            if (ev.sim_time > w.config.time_limit) {
                node = node_for(ev.index);
                break;
            }
        }
        out.push_back({"state:TimeOverrun", IssueCategory::TimeOverrun, node, w.clock,
                       "clock " + std::to_string(static_cast<int>(w.clock)) + " s exceeds the limit of " +
                           std::to_string(static_cast<int>(w.config.time_limit)) + " s",
                       {}});
    }
    return out;
}

}  // namespace vrl::sim
