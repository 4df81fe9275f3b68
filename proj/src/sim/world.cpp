// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>
#include <sstream>

#include "vrl/sim/world.hpp"

namespace vrl::sim {

std::string_view to_string(ZoneKind kind) {
    switch (kind) {
        case ZoneKind::Load: return "Load";
        case ZoneKind::Unload: return "Unload";
        case ZoneKind::StartFinish: return "StartFinish";
        case ZoneKind::ShelfInitial: return "ShelfInitial";
        case ZoneKind::ShelfTarget: return "ShelfTarget";
    }
    return "Load";
}

std::string_view to_string(Orientation o) { return o == Orientation::BlueUp ? "BlueUp" : "OrangeUp"; }

std::string_view to_string(Placement p) {
    switch (p) {
        case Placement::FullyInside: return "FullyInside";
        case Placement::PartiallyInside: return "PartiallyInside";
        case Placement::Adjacent: return "Adjacent";
    }
    return "FullyInside";
}

std::optional<ZoneKind> zone_kind_from_string(std::string_view text) {
    for (auto k : {ZoneKind::Load, ZoneKind::Unload, ZoneKind::StartFinish, ZoneKind::ShelfInitial,
                   ZoneKind::ShelfTarget}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::optional<Orientation> orientation_from_string(std::string_view text) {
    if (text == "BlueUp") return Orientation::BlueUp;
    if (text == "OrangeUp") return Orientation::OrangeUp;
    return std::nullopt;
}

std::optional<Placement> placement_from_string(std::string_view text) {
    for (auto p : {Placement::FullyInside, Placement::PartiallyInside, Placement::Adjacent}) {
        if (to_string(p) == text) return p;
    }
    return std::nullopt;
}

std::string to_string(const BlockLocation& loc) {
    switch (loc.kind) {
        case BlockLocation::Kind::InZone: return loc.zone + "/" + std::string(to_string(loc.placement));
        case BlockLocation::Kind::Carried: return "Carried";
        case BlockLocation::Kind::OutsideAllZones: return "OutsideAllZones";
    }
    return "?";
}

std::string_view to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::PickFailure: return "PickFailure";
        case FaultKind::DropInTransit: return "DropInTransit";
        case FaultKind::MisRotation: return "MisRotation";
        case FaultKind::PlaceOffsetPartial: return "PlaceOffsetPartial";
        case FaultKind::PlaceOffsetOutside: return "PlaceOffsetOutside";
        case FaultKind::NavigationStall: return "NavigationStall";
    }
    return "PickFailure";
}

const Zone* FieldConfig::zone(std::string_view id) const {
    for (const auto& z : zones) {
        if (z.zone_id == id) return &z;
    }
    return nullptr;
}

const Zone& FieldConfig::start_zone() const {
    for (const auto& z : zones) {
        if (z.kind == ZoneKind::StartFinish) return z;
    }
    throw SimError(SimError::Code::InvalidConfig, "no StartFinish zone");
}

std::vector<std::string> FieldConfig::zones_of(ZoneKind kind) const {
    std::vector<std::string> out;
    for (const auto& z : zones) {
        if (z.kind == kind) out.push_back(z.zone_id);
    }
    return out;
}

void check_config(const FieldConfig& config) {
    auto bad = [](const std::string& why) { throw SimError(SimError::Code::InvalidConfig, why); };
    std::set<std::string> ids;
    for (const auto& z : config.zones) {
        if (z.zone_id.empty()) bad("zone with empty id");
        if (!ids.insert(z.zone_id).second) bad("duplicate zone id '" + z.zone_id + "'");
        if (z.extent.w <= 0 || z.extent.h <= 0) bad("zone '" + z.zone_id + "' has an empty extent");
    }
    for (std::size_t i = 0; i < config.zones.size(); ++i) {
        for (std::size_t j = i + 1; j < config.zones.size(); ++j) {
            if (config.zones[i].extent.overlaps(config.zones[j].extent)) {
                bad("zones '" + config.zones[i].zone_id + "' and '" + config.zones[j].zone_id + "' overlap");
            }
        }
    }
    if (config.zones_of(ZoneKind::StartFinish).size() != 1) bad("expected exactly one StartFinish zone");
    if (config.zones_of(ZoneKind::Load).empty()) bad("no Load zone");
    if (config.zones_of(ZoneKind::Unload).empty()) bad("no Unload zone");
    if (!config.zone(config.shelf.initial_zone)) bad("unknown shelf initial zone '" + config.shelf.initial_zone + "'");
    if (!config.zone(config.shelf.target_zone)) bad("unknown shelf target zone '" + config.shelf.target_zone + "'");
    if (config.shelf.initial_zone == config.shelf.target_zone) bad("shelf initial and target zone are the same");
    std::set<std::string> block_ids;
    for (const auto& b : config.blocks) {
        if (b.block_id.empty()) bad("block with empty id");
        if (!block_ids.insert(b.block_id).second) bad("duplicate block id '" + b.block_id + "'");
        if (!config.zone(b.initial_zone)) bad("block '" + b.block_id + "' starts in unknown zone '" + b.initial_zone + "'");
    }
    if (!(config.time_limit > 0)) bad("time_limit must be positive");
}

FaultModel FaultModel::none() {
    FaultModel f;
    f.p_pick_fail = f.p_drop_in_transit = f.p_misrotate = f.p_place_offset = f.p_nav_stall = 0.0;
    return f;
}

double FaultModel::duration(const std::string& action) const {
    auto it = durations.find(action);
    if (it == durations.end()) throw SimError(SimError::Code::UnknownAction, "no duration for '" + action + "'");
    return it->second;
}

void FaultModel::check() const {
    for (double p : {p_pick_fail, p_drop_in_transit, p_misrotate, p_place_offset, p_offset_partial, p_nav_stall}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw SimError(SimError::Code::InvalidConfig, "fault probability outside [0,1]");
        }
    }
    if (nav_stall_extra < 0) throw SimError(SimError::Code::InvalidConfig, "negative nav_stall_extra");
    for (const auto& kind : action_kinds()) {
        auto it = durations.find(kind);
        if (it == durations.end() || !(it->second > 0)) {
            throw SimError(SimError::Code::InvalidConfig, "duration of " + kind + " must be positive");
        }
    }
}

BlockState& WorldState::block(std::string_view id) {
    for (auto& b : blocks) {
        if (b.block_id == id) return b;
    }
    throw SimError(SimError::Code::PreconditionViolation, "no block '" + std::string(id) + "'");
}

const BlockState& WorldState::block(std::string_view id) const {
    return const_cast<WorldState*>(this)->block(id);
}

std::vector<std::string> WorldState::blocks_in(std::string_view zone) const {
    std::vector<std::string> out;
    for (const auto& b : blocks) {
        if (b.location.kind == BlockLocation::Kind::InZone && b.location.zone == zone) out.push_back(b.block_id);
    }
    return out;
}

WorldState init_world(const FieldConfig& config, std::uint64_t seed) {
    check_config(config);
    WorldState w;
    w.config = config;
    for (const auto& b : config.blocks) {
        w.blocks.push_back({b.block_id, BlockLocation::in_zone(b.initial_zone), b.orientation});
    }
    w.robot_zone = config.start_zone().zone_id;
    w.shelf_zone = config.shelf.initial_zone;
    w.rng = Rng::derive(seed, Stream::World);
    return w;
}

const std::vector<std::string>& action_kinds() {
    static const std::vector<std::string> kinds = {"NavigateTo", "PickBlocks",  "RotateBlocks",
                                                   "PlaceBlocks", "MoveShelf", "ReturnToStart"};
    return kinds;
}

const std::vector<std::string>& condition_kinds() {
    static const std::vector<std::string> kinds = {"IsCarrying", "AtZone", "ZoneHasBlocks", "ShelfAtTarget",
                                                   "TimeRemaining"};
    return kinds;
}

namespace {

[[noreturn]] void precondition(const std::string& why) {
    throw SimError(SimError::Code::PreconditionViolation, why);
}

const std::string& param(const bt::Params& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) precondition("missing parameter '" + key + "'");
    return it->second;
}

int int_param(const bt::Params& params, const std::string& key) {
    const auto& text = param(params, key);
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::logic_error&) {
        precondition("parameter '" + key + "' is not an integer: " + text);
    }
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

void require_zone_kind(const WorldState& w, ZoneKind kind, const std::string& action) {
    const Zone* z = w.config.zone(w.robot_zone);
    if (!z || z->kind != kind) {
        throw SimError(SimError::Code::NotInRequiredZone,
                       action + " needs the robot in a " + std::string(to_string(kind)) + " zone, robot is at '" +
                           w.robot_zone + "'");
    }
}

// Travel shared by NavigateTo and ReturnToStart: stall draw, then drop draw.
double travel(WorldState& w, const std::string& action, const std::string& dest, const FaultModel& f,
              WorldEvent& ev) {
    double d = f.duration(action);
    if (w.robot_zone == dest) return 0.0;
    if (w.rng.bernoulli(f.p_nav_stall)) {
        d += f.nav_stall_extra;
        ev.faults.push_back({FaultKind::NavigationStall, {}});
    }
    const bool drop = w.rng.bernoulli(f.p_drop_in_transit);
    if (drop && !w.carried.empty()) {
        const auto i = w.rng.below(w.carried.size());
        const auto id = w.carried[i];
        w.carried.erase(w.carried.begin() + static_cast<std::ptrdiff_t>(i));
        w.block(id).location = BlockLocation::outside();
        ev.faults.push_back({FaultKind::DropInTransit, id});
        ev.blocks.push_back(id);
    }
    w.robot_zone = dest;
    return d;
}

}  // namespace

ActionOutcome execute_action(WorldState& w, const std::string& kind, const bt::Params& params,
                             const FaultModel& f) {
    WorldEvent ev;
    ev.action = kind;
    ev.params = params;
    ev.start_time = w.clock;
    double d = 0.0;
    bool ok = true;

    if (kind == "NavigateTo") {
        const auto& dest = param(params, "zone");
        if (!w.config.zone(dest)) precondition("unknown zone '" + dest + "'");
        d = travel(w, kind, dest, f, ev);
    } else if (kind == "ReturnToStart") {
        d = travel(w, kind, w.config.start_zone().zone_id, f, ev);
    } else if (kind == "PickBlocks") {
        const int count = int_param(params, "count");
        if (count < 1) precondition("PickBlocks count must be at least 1");
        if (w.carried.size() + static_cast<std::size_t>(count) > kCarryCapacity) {
            precondition("PickBlocks count=" + std::to_string(count) + " with " + std::to_string(w.carried.size()) +
                         " carried exceeds capacity " + std::to_string(kCarryCapacity));
        }
        require_zone_kind(w, ZoneKind::Load, kind);
        auto available = w.blocks_in(w.robot_zone);
        const auto n = std::min(available.size(), static_cast<std::size_t>(count));
        if (n == 0) {
            ok = false;
            d = f.duration(kind);
            ev.note = "zone is empty";
        } else if (w.rng.bernoulli(f.p_pick_fail)) {
            ok = false;
            d = f.duration(kind) * static_cast<double>(n);
            ev.faults.push_back({FaultKind::PickFailure, {}});
            ev.note = "grasp failed";
        } else {
            d = f.duration(kind) * static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                w.block(available[i]).location = BlockLocation::carried();
                w.carried.push_back(available[i]);
                ev.blocks.push_back(available[i]);
            }
        }
    } else if (kind == "RotateBlocks") {
        const auto& mask = param(params, "mask");
        if (mask.size() != kCarryCapacity || mask.find_first_not_of("01") != std::string::npos) {
            precondition("RotateBlocks mask must be 4 binary digits, got '" + mask + "'");
        }
        const std::size_t n = w.carried.size();
        unsigned intended = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i] == '1') intended |= 1u << i;
        }
        unsigned applied = intended;
        if (n > 0 && w.rng.bernoulli(f.p_misrotate)) {
            // any subset of the carried slots other than the intended one
            const unsigned subsets = 1u << n;
            applied = static_cast<unsigned>(w.rng.below(subsets - 1));
            if (applied >= intended) applied += 1;
            ev.faults.push_back({FaultKind::MisRotation, {}});
        }
        int rotated = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (intended & (1u << i)) ++rotated;
            if (applied & (1u << i)) {
                auto& b = w.block(w.carried[i]);
                b.orientation = flipped(b.orientation);
                ev.blocks.push_back(b.block_id);
            }
        }
        d = f.duration(kind) * rotated;
    } else if (kind == "PlaceBlocks") {
        require_zone_kind(w, ZoneKind::Unload, kind);
        if (w.carried.empty()) {
            ok = false;
            d = f.duration(kind);
            ev.note = "nothing carried";
        } else {
            d = f.duration(kind) * static_cast<double>(w.carried.size());
            for (const auto& id : w.carried) {
                auto& b = w.block(id);
                if (w.rng.bernoulli(f.p_place_offset)) {
                    if (w.rng.bernoulli(f.p_offset_partial)) {
                        b.location = BlockLocation::in_zone(w.robot_zone, Placement::PartiallyInside);
                        ev.faults.push_back({FaultKind::PlaceOffsetPartial, id});
                    } else {
                        b.location = BlockLocation::outside();
                        ev.faults.push_back({FaultKind::PlaceOffsetOutside, id});
                    }
                } else {
                    b.location = BlockLocation::in_zone(w.robot_zone);
                }
                ev.blocks.push_back(id);
            }
            w.carried.clear();
        }
    } else if (kind == "MoveShelf") {
        if (w.robot_zone != w.shelf_zone) {
            throw SimError(SimError::Code::NotInRequiredZone,
                           "MoveShelf needs the robot at the shelf zone '" + w.shelf_zone + "'");
        }
        d = f.duration(kind);
        const auto& target = w.config.shelf.target_zone;
        if (w.shelf_zone == target) {
            ev.note = "shelf already at target";
        } else if (!w.blocks_in(target).empty()) {
            ok = false;
            ev.note = "target zone is blocked";
        } else {
            w.shelf_zone = target;
            w.robot_zone = target;
        }
    } else {
        throw SimError(SimError::Code::UnknownAction, "unknown action '" + kind + "'");
    }

    w.clock += d;
    ev.index = w.event_log.size();
    ev.success = ok;
    ev.duration = d;
    ev.sim_time = w.clock;
    ev.robot_zone = w.robot_zone;
    if (ev.note.empty() && !ev.blocks.empty()) ev.note = "blocks=" + join(ev.blocks);

    ActionOutcome out;
    out.status = ok ? bt::TickStatus::Success : bt::TickStatus::Failure;
    out.duration = d;
    if (!ev.faults.empty()) out.injected_fault = ev.faults.front().kind;
    out.event_index = ev.index;
    w.event_log.push_back(std::move(ev));
    return out;
}

bool check_condition(const WorldState& w, const std::string& kind, const bt::Params& params) {
    if (kind == "IsCarrying") {
        return static_cast<int>(w.carried.size()) >= int_param(params, "min");
    }
    if (kind == "AtZone") return w.robot_zone == param(params, "zone");
    if (kind == "ZoneHasBlocks") return !w.blocks_in(param(params, "zone")).empty();
    if (kind == "ShelfAtTarget") return w.shelf_zone == w.config.shelf.target_zone;
    if (kind == "TimeRemaining") {
        const auto& text = param(params, "seconds");
        double seconds = 0;
        try {
            seconds = std::stod(text);
        } catch (const std::logic_error&) {
            precondition("parameter 'seconds' is not a number: " + text);
        }
        return w.config.time_limit - w.clock >= seconds;
    }
    throw SimError(SimError::Code::UnknownAction, "unknown condition '" + kind + "'");
}

}  // namespace vrl::sim
