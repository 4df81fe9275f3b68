// SPDX-License-Identifier: Apache-2.0
#include "vrl/bt/tree.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>

namespace vrl::bt {

std::string_view to_string(TickStatus status) {
    switch (status) {
        case TickStatus::Success: return "Success";
        case TickStatus::Failure: return "Failure";
        case TickStatus::Running: return "Running";
    }
    return "Failure";
}

TickStatus tick_status_from_string(std::string_view text) {
    if (text == "Success") return TickStatus::Success;
    if (text == "Running") return TickStatus::Running;
    if (text == "Failure") return TickStatus::Failure;
    throw std::invalid_argument("unknown tick status: " + std::string(text));
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Sequence: return "Sequence";
        case NodeKind::Fallback: return "Fallback";
        case NodeKind::CursorSequence: return "CursorSequence";
        case NodeKind::RetryUntilSuccessful: return "RetryUntilSuccessful";
        case NodeKind::Action: return "Action";
        case NodeKind::Condition: return "Condition";
    }
    return "Sequence";
}

std::optional<NodeKind> node_kind_from_string(std::string_view text) {
    for (auto kind : {NodeKind::Sequence, NodeKind::Fallback, NodeKind::CursorSequence,
                      NodeKind::RetryUntilSuccessful, NodeKind::Action, NodeKind::Condition}) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

int BTNode::max_attempts() const {
    auto it = params.find("max_attempts");
    if (it == params.end()) return 1;
    int value = 0;
    const auto& text = it->second;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1) return 1;
    return value;
}

const BTNode& BehaviorTree::at(const NodeId& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw BtError(BtError::Code::UnknownNode, "no node with id '" + id + "'");
    return it->second;
}

BTNode& BehaviorTree::at(const NodeId& id) {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw BtError(BtError::Code::UnknownNode, "no node with id '" + id + "'");
    return it->second;
}

std::optional<NodeId> BehaviorTree::parent_of(const NodeId& id) const {
    for (const auto& [key, node] : nodes) {
        if (std::find(node.children.begin(), node.children.end(), id) != node.children.end()) {
            return key;
        }
    }
    return std::nullopt;
}

std::vector<NodeId> BehaviorTree::preorder() const {
    std::vector<NodeId> out;
    if (!contains(root)) return out;
    std::set<NodeId> seen;
    std::vector<NodeId> stack{root};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) continue;
        out.push_back(id);
        auto it = nodes.find(id);
        if (it == nodes.end()) continue;
        const auto& children = it->second.children;
        for (auto c = children.rbegin(); c != children.rend(); ++c) {
            if (contains(*c)) stack.push_back(*c);
        }
    }
    return out;
}

namespace {

bool same_content(const BTNode& a, const BTNode& b) {
    return a.kind == b.kind && a.leaf_kind == b.leaf_kind && a.params == b.params &&
           a.children.size() == b.children.size();
}

bool equal_from(const BehaviorTree& a, const NodeId& ia, const BehaviorTree& b, const NodeId& ib,
                bool compare_ids, int depth) {
    if (depth > 10000) return false;
    auto na = a.nodes.find(ia);
    auto nb = b.nodes.find(ib);
    if (na == a.nodes.end() || nb == b.nodes.end()) return false;
    if (compare_ids && ia != ib) return false;
    if (!same_content(na->second, nb->second)) return false;
    for (std::size_t i = 0; i < na->second.children.size(); ++i) {
        if (!equal_from(a, na->second.children[i], b, nb->second.children[i], compare_ids, depth + 1)) {
            return false;
        }
    }
    return true;
}

}  // namespace

bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    return equal_from(a, a.root, b, b.root, true, 0);
}

bool shape_equal(const BehaviorTree& a, const BehaviorTree& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    return equal_from(a, a.root, b, b.root, false, 0);
}

std::string node_label(const BTNode& node) {
    if (node.kind == NodeKind::Action) return "Action:" + node.leaf_kind;
    if (node.kind == NodeKind::Condition) return "Condition:" + node.leaf_kind;
    return std::string(to_string(node.kind));
}

}  // namespace vrl::bt
