// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vrl/dsl/dsl.hpp"

namespace vrl::dsl {

std::string_view to_string(EditOp op) {
    switch (op) {
        case EditOp::InsertNode: return "InsertNode";
        case EditOp::DeleteNode: return "DeleteNode";
        case EditOp::ReplaceNode: return "ReplaceNode";
        case EditOp::ReparentNode: return "ReparentNode";
        case EditOp::ChangeParam: return "ChangeParam";
    }
    return "InsertNode";
}

std::optional<EditOp> edit_op_from_string(std::string_view text) {
    for (auto op : {EditOp::InsertNode, EditOp::DeleteNode, EditOp::ReplaceNode, EditOp::ReparentNode,
                    EditOp::ChangeParam}) {
        if (to_string(op) == text) return op;
    }
    return std::nullopt;
}

std::string TreeEdit::describe() const {
    std::ostringstream os;
    auto node_text = [this]() {
        if (!node) return std::string("?");
        return bt::node_label(*node) + " '" + node->id + "'";
    };
    switch (op) {
        case EditOp::InsertNode:
            os << "insert " << node_text();
            if (parent.empty()) {
                os << " as root";
            } else {
                os << " under '" << parent << "' at " << index;
            }
            break;
        case EditOp::DeleteNode: os << "delete subtree '" << target << "'"; break;
        case EditOp::ReplaceNode: os << "replace '" << target << "' with " << node_text(); break;
        case EditOp::ReparentNode:
            os << "move '" << target << "'";
            if (parent.empty()) {
                os << " to root";
            } else {
                os << " under '" << parent << "' at " << index;
            }
            break;
        case EditOp::ChangeParam:
            os << "set " << target << "." << key << (value ? " = " + *value : std::string(" (removed)"));
            break;
    }
    return os.str();
}

std::size_t TreeDiff::count(EditOp op) const {
    return static_cast<std::size_t>(
        std::count_if(edits.begin(), edits.end(), [op](const TreeEdit& e) { return e.op == op; }));
}

namespace {

[[noreturn]] void apply_fail(const std::string& message) {
    throw DslError(DslError::Code::ApplyFailed, message);
}

void detach(bt::BehaviorTree& tree, const bt::NodeId& id) {
    for (auto& [key, node] : tree.nodes) {
        auto& ch = node.children;
        ch.erase(std::remove(ch.begin(), ch.end(), id), ch.end());
    }
}

void attach(bt::BehaviorTree& tree, const bt::NodeId& id, const bt::NodeId& parent, std::size_t index) {
    if (parent.empty()) {
        tree.root = id;
        return;
    }
    auto it = tree.nodes.find(parent);
    if (it == tree.nodes.end()) apply_fail("parent '" + parent + "' does not exist");
    auto& ch = it->second.children;
    index = std::min(index, ch.size());
    ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(index), id);
}

bool is_descendant(const bt::BehaviorTree& tree, const bt::NodeId& ancestor, const bt::NodeId& node) {
    std::vector<bt::NodeId> stack{ancestor};
    std::set<bt::NodeId> seen;
    while (!stack.empty()) {
        auto id = stack.back();
        stack.pop_back();
        if (id == node) return true;
        if (!seen.insert(id).second) continue;
        auto it = tree.nodes.find(id);
        if (it == tree.nodes.end()) continue;
        for (const auto& c : it->second.children) stack.push_back(c);
    }
    return false;
}

}  // namespace

void apply_edit(bt::BehaviorTree& tree, const TreeEdit& e) {
    switch (e.op) {
        case EditOp::InsertNode: {
            if (!e.node) apply_fail("InsertNode without node payload");
            if (tree.contains(e.node->id)) apply_fail("InsertNode: '" + e.node->id + "' already exists");
            bt::BTNode n = *e.node;
            n.children.clear();
            n.state = {};
            const auto id = n.id;
            tree.nodes.emplace(id, std::move(n));
            attach(tree, id, e.parent, e.index);
            break;
        }
        case EditOp::DeleteNode: {
            if (!tree.contains(e.target)) apply_fail("DeleteNode: '" + e.target + "' does not exist");
            detach(tree, e.target);
            std::vector<bt::NodeId> stack{e.target};
            while (!stack.empty()) {
                auto id = stack.back();
                stack.pop_back();
                auto it = tree.nodes.find(id);
                if (it == tree.nodes.end()) continue;
                for (const auto& c : it->second.children) stack.push_back(c);
                tree.nodes.erase(it);
            }
            if (tree.root == e.target) tree.root.clear();
            break;
        }
        case EditOp::ReplaceNode: {
            if (!e.node) apply_fail("ReplaceNode without node payload");
            auto it = tree.nodes.find(e.target);
            if (it == tree.nodes.end()) apply_fail("ReplaceNode: '" + e.target + "' does not exist");
            bt::BTNode n = std::move(it->second);
            tree.nodes.erase(it);
            const auto new_id = e.node->id;
            if (tree.contains(new_id)) apply_fail("ReplaceNode: id '" + new_id + "' already in use");
            n.id = new_id;
            n.kind = e.node->kind;
            n.leaf_kind = e.node->leaf_kind;
            n.params = e.node->params;
            n.state = {};
            tree.nodes.emplace(new_id, std::move(n));
            if (new_id != e.target) {
                for (auto& [key, node] : tree.nodes) {
                    std::replace(node.children.begin(), node.children.end(), e.target, new_id);
                }
                if (tree.root == e.target) tree.root = new_id;
            }
            break;
        }
        case EditOp::ReparentNode: {
            if (!tree.contains(e.target)) apply_fail("ReparentNode: '" + e.target + "' does not exist");
            if (!e.parent.empty() && is_descendant(tree, e.target, e.parent)) {
                apply_fail("ReparentNode: '" + e.parent + "' is inside '" + e.target + "'");
            }
            detach(tree, e.target);
            attach(tree, e.target, e.parent, e.index);
            break;
        }
        case EditOp::ChangeParam: {
            auto& node = tree.at(e.target);
            if (e.value) {
                node.params[e.key] = *e.value;
            } else {
                node.params.erase(e.key);
            }
            break;
        }
    }
}

bt::BehaviorTree apply(bt::BehaviorTree tree, const TreeDiff& d) {
    for (const auto& e : d.edits) apply_edit(tree, e);
    return tree;
}

TreeDiff diff(const bt::BehaviorTree& old_tree, const bt::BehaviorTree& new_tree) {
    TreeDiff out;
    bt::BehaviorTree work = old_tree;
    auto emit = [&](TreeEdit e) {
        apply_edit(work, e);
        out.edits.push_back(std::move(e));
    };

    // new id -> old id
    std::map<bt::NodeId, bt::NodeId> match;
    std::set<bt::NodeId> matched_old;
    for (const auto& [id, node] : new_tree.nodes) {
        if (old_tree.contains(id)) {
            match[id] = id;
            matched_old.insert(id);
        }
    }
    // Fallback: same kind at the same position under matched parents.
    const auto new_order = new_tree.preorder();
    for (const auto& pid : new_order) {
        auto pm = match.find(pid);
        if (pm == match.end()) continue;
        const auto& np = new_tree.at(pid);
        const auto& op = old_tree.at(pm->second);
        for (std::size_t i = 0; i < np.children.size() && i < op.children.size(); ++i) {
            const auto& nc = np.children[i];
            const auto& oc = op.children[i];
            if (match.count(nc) || matched_old.count(oc) || new_tree.contains(oc)) continue;
            if (!old_tree.contains(oc) || !new_tree.contains(nc)) continue;
            const auto& a = old_tree.at(oc);
            const auto& b = new_tree.at(nc);
            if (a.kind == b.kind && a.leaf_kind == b.leaf_kind) {
                match[nc] = oc;
                matched_old.insert(oc);
            }
        }
    }

    std::function<bool(const bt::NodeId&)> has_matched = [&](const bt::NodeId& id) -> bool {
        if (matched_old.count(id)) return true;
        auto it = old_tree.nodes.find(id);
        if (it == old_tree.nodes.end()) return false;
        return std::any_of(it->second.children.begin(), it->second.children.end(), has_matched);
    };

    // 1. Drop unmatched old subtrees that hold nothing we keep.
    for (const auto& id : old_tree.preorder()) {
        if (!work.contains(id) || matched_old.count(id) || has_matched(id)) continue;
        TreeEdit e;
        e.op = EditOp::DeleteNode;
        e.target = id;
        emit(std::move(e));
    }

    // 2. Content changes on matched nodes.
    for (const auto& nid : new_order) {
        auto m = match.find(nid);
        if (m == match.end()) continue;
        const auto& b = new_tree.at(nid);
        const auto& a = work.at(m->second);
        if (m->second != nid || a.kind != b.kind || a.leaf_kind != b.leaf_kind) {
            TreeEdit e;
            e.op = EditOp::ReplaceNode;
            e.target = m->second;
            bt::BTNode payload = b;
            payload.children.clear();
            payload.params = a.params;  // params follow as ChangeParam edits
            payload.state = {};
            e.node = std::move(payload);
            emit(std::move(e));
        }
        const auto params = work.at(nid).params;
        for (const auto& [k, v] : b.params) {
            auto it = params.find(k);
            if (it != params.end() && it->second == v) continue;
            TreeEdit e;
            e.op = EditOp::ChangeParam;
            e.target = nid;
            e.key = k;
            e.value = v;
            emit(std::move(e));
        }
        for (const auto& [k, v] : params) {
            if (b.params.count(k)) continue;
            TreeEdit e;
            e.op = EditOp::ChangeParam;
            e.target = nid;
            e.key = k;
            emit(std::move(e));
        }
    }

    auto insert_edit = [&](const bt::NodeId& id, const bt::NodeId& parent, std::size_t index) {
        TreeEdit e;
        e.op = EditOp::InsertNode;
        e.target = id;
        bt::BTNode payload = new_tree.at(id);
        payload.children.clear();
        payload.state = {};
        e.node = std::move(payload);
        e.parent = parent;
        e.index = index;
        emit(std::move(e));
    };

    // 3. Root, then every child slot top-down.
    if (work.root != new_tree.root) {
        if (work.contains(new_tree.root)) {
            TreeEdit e;
            e.op = EditOp::ReparentNode;
            e.target = new_tree.root;
            emit(std::move(e));
        } else {
            insert_edit(new_tree.root, "", 0);
        }
    }
    for (const auto& pid : new_order) {
        const auto& np = new_tree.at(pid);
        for (std::size_t i = 0; i < np.children.size(); ++i) {
            const auto& c = np.children[i];
            if (!work.contains(c)) {
                insert_edit(c, pid, i);
                continue;
            }
            const auto& current = work.at(pid).children;
            if (i < current.size() && current[i] == c) continue;
            TreeEdit e;
            e.op = EditOp::ReparentNode;
            e.target = c;
            e.parent = pid;
            e.index = i;
            emit(std::move(e));
        }
    }

    // 4. Whatever is left over from the old tree.
    std::vector<bt::NodeId> leftovers;
    for (const auto& [id, node] : work.nodes) {
        if (!new_tree.contains(id)) leftovers.push_back(id);
    }
    for (const auto& id : leftovers) {
        if (!work.contains(id)) continue;
        auto parent = work.parent_of(id);
        if (parent && !new_tree.contains(*parent)) continue;  // removed with its ancestor
        TreeEdit e;
        e.op = EditOp::DeleteNode;
        e.target = id;
        emit(std::move(e));
    }
    // Detached chains whose top was itself a leftover child of a leftover.
    for (const auto& id : leftovers) {
        if (!work.contains(id)) continue;
        TreeEdit e;
        e.op = EditOp::DeleteNode;
        e.target = id;
        emit(std::move(e));
    }
    return out;
}

}  // namespace vrl::dsl
