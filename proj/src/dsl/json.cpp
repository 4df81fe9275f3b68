// SPDX-License-Identifier: Apache-2.0
#include "vrl/dsl/diff_json.hpp"

using nlohmann::json;

namespace vrl::dsl {

namespace {

json node_json(const bt::BTNode& n) {
    json j{{"id", n.id}, {"kind", std::string(bt::to_string(n.kind))}};
    if (!n.leaf_kind.empty()) j["leaf_kind"] = n.leaf_kind;
    if (!n.params.empty()) j["params"] = n.params;
    return j;
}

bt::BTNode node_from(const json& j) {
    bt::BTNode n;
    j.at("id").get_to(n.id);
    const auto kind = j.at("kind").get<std::string>();
    auto k = bt::node_kind_from_string(kind);
    if (!k) throw std::invalid_argument("unknown node kind '" + kind + "'");
    n.kind = *k;
    if (auto it = j.find("leaf_kind"); it != j.end()) it->get_to(n.leaf_kind);
    if (auto it = j.find("params"); it != j.end()) it->get_to(n.params);
    return n;
}

}  // namespace

void to_json(json& j, const TreeEdit& v) {
    j = json{{"op", std::string(to_string(v.op))}, {"text", v.describe()}};
    switch (v.op) {
        case EditOp::InsertNode:
            j["node"] = node_json(*v.node);
            j["parent"] = v.parent;
            j["index"] = v.index;
            break;
        case EditOp::DeleteNode: j["target"] = v.target; break;
        case EditOp::ReplaceNode:
            j["target"] = v.target;
            j["node"] = node_json(*v.node);
            break;
        case EditOp::ReparentNode:
            j["target"] = v.target;
            j["parent"] = v.parent;
            j["index"] = v.index;
            break;
        case EditOp::ChangeParam:
            j["target"] = v.target;
            j["key"] = v.key;
            j["value"] = v.value ? json(*v.value) : json(nullptr);
            break;
    }
}

void from_json(const json& j, TreeEdit& v) {
    v = TreeEdit{};
    const auto op = j.at("op").get<std::string>();
    auto parsed = edit_op_from_string(op);
    if (!parsed) throw std::invalid_argument("unknown edit op '" + op + "'");
    v.op = *parsed;
    if (auto it = j.find("target"); it != j.end()) it->get_to(v.target);
    if (auto it = j.find("node"); it != j.end()) v.node = node_from(*it);
    if (auto it = j.find("parent"); it != j.end()) it->get_to(v.parent);
    if (auto it = j.find("index"); it != j.end()) it->get_to(v.index);
    if (auto it = j.find("key"); it != j.end()) it->get_to(v.key);
    if (auto it = j.find("value"); it != j.end() && !it->is_null()) v.value = it->get<std::string>();
}

void to_json(json& j, const TreeDiff& v) { j = v.edits; }
void from_json(const json& j, TreeDiff& v) { j.get_to(v.edits); }

}  // namespace vrl::dsl
