// SPDX-License-Identifier: Apache-2.0
#include "vrl/bt/trace_json.hpp"

using nlohmann::json;

namespace vrl::bt {

void to_json(json& j, TickStatus v) { j = std::string(to_string(v)); }

void from_json(const json& j, TickStatus& v) {
    v = tick_status_from_string(j.get<std::string>());
}

void to_json(json& j, const TraceEvent& v) {
    j = json{{"seq", v.sequence_no},
             {"node", v.node_id},
             {"event", v.event == TraceEvent::Kind::Entered ? "Entered" : "Returned"},
             {"t", v.sim_time},
             {"label", v.label}};
    if (v.event == TraceEvent::Kind::Returned) j["status"] = v.status;
    if (!v.detail.empty()) j["detail"] = v.detail;
    if (v.world_event) j["world_event"] = *v.world_event;
}

void from_json(const json& j, TraceEvent& v) {
    v = TraceEvent{};
    j.at("seq").get_to(v.sequence_no);
    j.at("node").get_to(v.node_id);
    const auto kind = j.at("event").get<std::string>();
    if (kind != "Entered" && kind != "Returned") {
        throw json::other_error::create(501, "unknown trace event kind '" + kind + "'", &j);
    }
    v.event = kind == "Entered" ? TraceEvent::Kind::Entered : TraceEvent::Kind::Returned;
    j.at("t").get_to(v.sim_time);
    j.at("label").get_to(v.label);
    if (auto it = j.find("status"); it != j.end()) it->get_to(v.status);
    if (auto it = j.find("detail"); it != j.end()) it->get_to(v.detail);
    if (auto it = j.find("world_event"); it != j.end()) v.world_event = it->get<std::size_t>();
}

}  // namespace vrl::bt
