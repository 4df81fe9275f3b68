// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "vrl/sim/io.hpp"

using nlohmann::json;

namespace vrl {

void to_json(json& j, const Rng& r) { j = json{{"seed", r.seed()}, {"stream", r.stream()}, {"counter", r.counter()}}; }

void from_json(const json& j, Rng& r) {
    r = Rng(j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>(),
            j.at("counter").get<std::uint64_t>());
}

namespace sim {

namespace {

template <typename E, typename F>
E enum_from(const json& j, F parse, const char* what) {
    const auto text = j.get<std::string>();
    auto v = parse(text);
    if (!v) throw SimError(SimError::Code::InvalidConfig, std::string("unknown ") + what + " '" + text + "'");
    return *v;
}

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(json& j, ZoneKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, ZoneKind& v) { v = enum_from<ZoneKind>(j, zone_kind_from_string, "zone kind"); }
void to_json(json& j, Orientation v) { j = std::string(to_string(v)); }
void from_json(const json& j, Orientation& v) {
    v = enum_from<Orientation>(j, orientation_from_string, "orientation");
}
void to_json(json& j, Placement v) { j = std::string(to_string(v)); }
void from_json(const json& j, Placement& v) { v = enum_from<Placement>(j, placement_from_string, "placement"); }
void to_json(json& j, Mode v) { j = std::string(to_string(v)); }
void from_json(const json& j, Mode& v) { v = enum_from<Mode>(j, mode_from_string, "mode"); }
void to_json(json& j, IssueCategory v) { j = std::string(to_string(v)); }
void from_json(const json& j, IssueCategory& v) {
    v = enum_from<IssueCategory>(j, issue_category_from_string, "issue category");
}
void to_json(json& j, FaultKind v) { j = std::string(to_string(v)); }
void from_json(const json& j, FaultKind& v) {
    v = enum_from<FaultKind>(
        j,
        [](std::string_view t) -> std::optional<FaultKind> {
            for (auto k : {FaultKind::PickFailure, FaultKind::DropInTransit, FaultKind::MisRotation,
                           FaultKind::PlaceOffsetPartial, FaultKind::PlaceOffsetOutside, FaultKind::NavigationStall}) {
                if (to_string(k) == t) return k;
            }
            return std::nullopt;
        },
        "fault kind");
}

void to_json(json& j, const Rect& v) { j = json{{"x", v.x}, {"y", v.y}, {"w", v.w}, {"h", v.h}}; }
void from_json(const json& j, Rect& v) {
    j.at("x").get_to(v.x);
    j.at("y").get_to(v.y);
    j.at("w").get_to(v.w);
    j.at("h").get_to(v.h);
}

void to_json(json& j, const Zone& v) { j = json{{"zone_id", v.zone_id}, {"kind", v.kind}, {"extent", v.extent}}; }
void from_json(const json& j, Zone& v) {
    j.at("zone_id").get_to(v.zone_id);
    j.at("kind").get_to(v.kind);
    j.at("extent").get_to(v.extent);
}

void to_json(json& j, const BlockSpec& v) {
    j = json{{"block_id", v.block_id}, {"initial_zone", v.initial_zone}, {"orientation", v.orientation}};
}
void from_json(const json& j, BlockSpec& v) {
    j.at("block_id").get_to(v.block_id);
    j.at("initial_zone").get_to(v.initial_zone);
    j.at("orientation").get_to(v.orientation);
}

void to_json(json& j, const FieldConfig& v) {
    j = json{{"zones", v.zones},
             {"blocks", v.blocks},
             {"shelf", {{"initial_zone", v.shelf.initial_zone}, {"target_zone", v.shelf.target_zone}}},
             {"time_limit", v.time_limit},
             {"field_seed_label", v.field_seed_label}};
}
void from_json(const json& j, FieldConfig& v) {
    j.at("zones").get_to(v.zones);
    j.at("blocks").get_to(v.blocks);
    j.at("shelf").at("initial_zone").get_to(v.shelf.initial_zone);
    j.at("shelf").at("target_zone").get_to(v.shelf.target_zone);
    get_opt(j, "time_limit", v.time_limit);
    get_opt(j, "field_seed_label", v.field_seed_label);
}

void to_json(json& j, const FaultModel& v) {
    j = json{{"p_pick_fail", v.p_pick_fail},         {"p_drop_in_transit", v.p_drop_in_transit},
             {"p_misrotate", v.p_misrotate},         {"p_place_offset", v.p_place_offset},
             {"p_offset_partial", v.p_offset_partial}, {"p_nav_stall", v.p_nav_stall},
             {"nav_stall_extra", v.nav_stall_extra}, {"durations", v.durations}};
}
void from_json(const json& j, FaultModel& v) {
    get_opt(j, "p_pick_fail", v.p_pick_fail);
    get_opt(j, "p_drop_in_transit", v.p_drop_in_transit);
    get_opt(j, "p_misrotate", v.p_misrotate);
    get_opt(j, "p_place_offset", v.p_place_offset);
    get_opt(j, "p_offset_partial", v.p_offset_partial);
    get_opt(j, "p_nav_stall", v.p_nav_stall);
    get_opt(j, "nav_stall_extra", v.nav_stall_extra);
    if (auto it = j.find("durations"); it != j.end()) {
        for (const auto& [k, d] : it->items()) v.durations[k] = d.get<double>();
    }
}

void to_json(json& j, const PerceptionProfile& v) {
    j = json{{"p_color_misread", v.p_color_misread}, {"p_zone_miscount", v.p_zone_miscount},
             {"block_info", v.block_info}};
}
void from_json(const json& j, PerceptionProfile& v) {
    get_opt(j, "p_color_misread", v.p_color_misread);
    get_opt(j, "p_zone_miscount", v.p_zone_miscount);
    get_opt(j, "block_info", v.block_info);
}

void to_json(json& j, const BlockLocation& v) {
    switch (v.kind) {
        case BlockLocation::Kind::InZone: j = json{{"kind", "InZone"}, {"zone", v.zone}, {"placement", v.placement}}; break;
        case BlockLocation::Kind::Carried: j = json{{"kind", "Carried"}}; break;
        case BlockLocation::Kind::OutsideAllZones: j = json{{"kind", "OutsideAllZones"}}; break;
    }
}
void from_json(const json& j, BlockLocation& v) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "InZone") {
        v = BlockLocation::in_zone(j.at("zone").get<std::string>(), j.at("placement").get<Placement>());
    } else if (kind == "Carried") {
        v = BlockLocation::carried();
    } else if (kind == "OutsideAllZones") {
        v = BlockLocation::outside();
    } else {
        throw SimError(SimError::Code::InvalidConfig, "unknown block location '" + kind + "'");
    }
}

void to_json(json& j, const BlockState& v) {
    j = json{{"block_id", v.block_id}, {"location", v.location}, {"orientation", v.orientation}};
}
void from_json(const json& j, BlockState& v) {
    j.at("block_id").get_to(v.block_id);
    j.at("location").get_to(v.location);
    j.at("orientation").get_to(v.orientation);
}

void to_json(json& j, const BlockFault& v) { j = json{{"kind", v.kind}, {"block_id", v.block_id}}; }
void from_json(const json& j, BlockFault& v) {
    j.at("kind").get_to(v.kind);
    j.at("block_id").get_to(v.block_id);
}

void to_json(json& j, const WorldEvent& v) {
    j = json{{"index", v.index},         {"action", v.action},   {"params", v.params},
             {"success", v.success},     {"start_time", v.start_time}, {"sim_time", v.sim_time},
             {"duration", v.duration},   {"blocks", v.blocks},   {"faults", v.faults},
             {"robot_zone", v.robot_zone}, {"note", v.note}};
}
void from_json(const json& j, WorldEvent& v) {
    j.at("index").get_to(v.index);
    j.at("action").get_to(v.action);
    j.at("params").get_to(v.params);
    j.at("success").get_to(v.success);
    j.at("start_time").get_to(v.start_time);
    j.at("sim_time").get_to(v.sim_time);
    j.at("duration").get_to(v.duration);
    j.at("blocks").get_to(v.blocks);
    j.at("faults").get_to(v.faults);
    j.at("robot_zone").get_to(v.robot_zone);
    j.at("note").get_to(v.note);
}

void to_json(json& j, const WorldState& v) {
    j = json{{"config", v.config},         {"blocks", v.blocks},   {"robot_zone", v.robot_zone},
             {"carried", v.carried},       {"shelf_zone", v.shelf_zone}, {"clock", v.clock},
             {"rng", v.rng},               {"event_log", v.event_log}};
}
void from_json(const json& j, WorldState& v) {
    j.at("config").get_to(v.config);
    j.at("blocks").get_to(v.blocks);
    j.at("robot_zone").get_to(v.robot_zone);
    j.at("carried").get_to(v.carried);
    j.at("shelf_zone").get_to(v.shelf_zone);
    j.at("clock").get_to(v.clock);
    j.at("rng").get_to(v.rng);
    j.at("event_log").get_to(v.event_log);
}

void to_json(json& j, const ZoneView& v) {
    j = json{{"zone_id", v.zone_id}, {"kind", v.kind}, {"blue_up", v.blue_up}, {"orange_up", v.orange_up}};
}
void from_json(const json& j, ZoneView& v) {
    j.at("zone_id").get_to(v.zone_id);
    j.at("kind").get_to(v.kind);
    j.at("blue_up").get_to(v.blue_up);
    j.at("orange_up").get_to(v.orange_up);
}

void to_json(json& j, const Observation& v) {
    j = json{{"mode", v.mode},           {"zones", v.zones},        {"blocks", v.blocks},
             {"shelf_zone", v.shelf_zone}, {"robot_zone", v.robot_zone}, {"clock", v.clock},
             {"time_limit", v.time_limit}};
    j["block_info"] = v.block_info ? json(*v.block_info) : json(nullptr);
}
void from_json(const json& j, Observation& v) {
    j.at("mode").get_to(v.mode);
    j.at("zones").get_to(v.zones);
    j.at("blocks").get_to(v.blocks);
    j.at("shelf_zone").get_to(v.shelf_zone);
    j.at("robot_zone").get_to(v.robot_zone);
    j.at("clock").get_to(v.clock);
    get_opt(j, "time_limit", v.time_limit);
    v.block_info.reset();
    if (auto it = j.find("block_info"); it != j.end() && !it->is_null()) {
        v.block_info = it->get<std::vector<BlockState>>();
    }
}

void to_json(json& j, const GroundTruthIssue& v) {
    j = json{{"issue_id", v.issue_id}, {"category", v.category}, {"sim_time", v.sim_time},
             {"description", v.description}, {"block_id", v.block_id}};
    j["node"] = v.node ? json(*v.node) : json(nullptr);
}
void from_json(const json& j, GroundTruthIssue& v) {
    j.at("issue_id").get_to(v.issue_id);
    j.at("category").get_to(v.category);
    j.at("sim_time").get_to(v.sim_time);
    j.at("description").get_to(v.description);
    get_opt(j, "block_id", v.block_id);
    v.node.reset();
    if (auto it = j.find("node"); it != j.end() && !it->is_null()) v.node = it->get<std::string>();
}

FieldConfig load_field_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SimError(SimError::Code::InvalidConfig, "cannot open field config " + path.string());
    FieldConfig config;
    try {
        json::parse(in).get_to(config);
    } catch (const json::exception& e) {
        throw SimError(SimError::Code::InvalidConfig, path.string() + ": " + e.what());
    }
    check_config(config);
    return config;
}

std::string canonical(const WorldState& world) { return json(world).dump(); }

}  // namespace sim
}  // namespace vrl
