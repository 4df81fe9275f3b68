// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "vrl/sim/world.hpp"

namespace vrl::sim {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Initial: return "Initial";
        case Mode::Intermediate: return "Intermediate";
        case Mode::Final: return "Final";
    }
    return "Initial";
}

std::optional<Mode> mode_from_string(std::string_view text) {
    for (auto m : {Mode::Initial, Mode::Intermediate, Mode::Final}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

Observation observe(const WorldState& world, const PerceptionProfile& profile, Mode mode, Rng& perception) {
    Observation obs;
    obs.mode = mode;
    obs.shelf_zone = world.shelf_zone;
    obs.robot_zone = world.robot_zone;
    obs.clock = world.clock;
    obs.time_limit = world.config.time_limit;

    // One miscount draw per zone and one misread draw per block, always, so
    // the draw count does not depend on the state.
    std::set<std::string> hidden;
    for (const auto& z : world.config.zones) {
        if (perception.bernoulli(profile.p_zone_miscount) && !world.blocks_in(z.zone_id).empty()) {
            hidden.insert(z.zone_id);
        }
    }
    for (const auto& b : world.blocks) {
        const bool misread = perception.bernoulli(profile.p_color_misread);
        const bool in_hidden = b.location.kind == BlockLocation::Kind::InZone && hidden.count(b.location.zone);
        if (in_hidden) continue;
        BlockState seen = b;
        if (misread) seen.orientation = flipped(seen.orientation);
        obs.blocks.push_back(std::move(seen));
    }
    for (const auto& z : world.config.zones) {
        ZoneView v{z.zone_id, z.kind, 0, 0};
        for (const auto& b : obs.blocks) {
            if (b.location.kind != BlockLocation::Kind::InZone || b.location.zone != z.zone_id) continue;
            (b.orientation == Orientation::BlueUp ? v.blue_up : v.orange_up) += 1;
        }
        obs.zones.push_back(v);
    }
    if (profile.block_info) obs.block_info = world.blocks;
    return obs;
}

}  // namespace vrl::sim
