// SPDX-License-Identifier: Apache-2.0
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vrl/dsl/dsl.hpp"

namespace vrl::dsl {

std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::UnknownNodeKind: return "UnknownNodeKind";
        case ViolationCode::BadArity: return "BadArity";
        case ViolationCode::BadParam: return "BadParam";
        case ViolationCode::OrphanNode: return "OrphanNode";
        case ViolationCode::CycleDetected: return "CycleDetected";
        case ViolationCode::UnresolvedChild: return "UnresolvedChild";
    }
    return "BadParam";
}

bool ValidationReport::has(ViolationCode code) const {
    for (const auto& v : violations) {
        if (v.code == code) return true;
    }
    return false;
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    for (const auto& v : violations) {
        os << to_string(v.code) << " at '" << v.location << "': " << v.message << '\n';
    }
    return os.str();
}

namespace {

void check_params(const bt::BTNode& node, const bt::LeafSpec* spec, std::vector<Violation>& out) {
    for (const auto& [key, value] : node.params) {
        const bt::ParamSchema* schema = spec ? spec->find(key) : nullptr;
        if (!schema) {
            out.push_back({node.id, ViolationCode::BadParam, "unexpected parameter '" + key + "'"});
            continue;
        }
        if (auto why = schema->check(value); !why.empty()) {
            out.push_back({node.id, ViolationCode::BadParam, key + ": " + why});
        }
    }
    if (!spec) return;
    for (const auto& schema : spec->params) {
        if (schema.required && node.params.count(schema.name) == 0) {
            out.push_back({node.id, ViolationCode::BadParam, "missing parameter '" + schema.name + "'"});
        }
    }
}

}  // namespace

ValidationReport validate(const bt::BehaviorTree& tree, const bt::NodeLibrary& library) {
    ValidationReport report;
    auto& out = report.violations;

    if (!tree.contains(tree.root)) {
        out.push_back({tree.root, ViolationCode::UnresolvedChild, "root is not in the node table"});
    }

    std::map<bt::NodeId, int> parent_count;
    for (const auto& [key, node] : tree.nodes) {
        if (key != node.id) {
            out.push_back({key, ViolationCode::UnresolvedChild,
                           "node table key differs from node id '" + node.id + "'"});
        }
        for (const auto& child : node.children) {
            if (!tree.contains(child)) {
                out.push_back({key, ViolationCode::UnresolvedChild, "child '" + child + "' does not resolve"});
            } else {
                parent_count[child] += 1;
            }
        }

        const auto n = node.children.size();
        switch (node.kind) {
            case bt::NodeKind::Action:
            case bt::NodeKind::Condition: {
                const bool action = node.kind == bt::NodeKind::Action;
                const bt::LeafSpec* spec = action ? library.action(node.leaf_kind) : library.condition(node.leaf_kind);
                if (!spec) {
                    out.push_back({key, ViolationCode::UnknownNodeKind,
                                   std::string(action ? "action" : "condition") + " '" + node.leaf_kind +
                                       "' is not in the node library"});
                } else {
                    check_params(node, spec, out);
                }
                if (n != 0) {
                    out.push_back({key, ViolationCode::BadArity, "leaf has " + std::to_string(n) + " children"});
                }
                break;
            }
            default: {
                if (library.composites.count(node.kind) == 0) {
                    out.push_back({key, ViolationCode::UnknownNodeKind,
                                   std::string(bt::to_string(node.kind)) + " is not allowed by the node library"});
                }
                auto spec_it = library.composite_params.find(node.kind);
                const bt::LeafSpec* spec = spec_it == library.composite_params.end() ? nullptr : &spec_it->second;
                check_params(node, spec, out);
                if (node.kind == bt::NodeKind::RetryUntilSuccessful) {
                    if (n != 1) {
                        out.push_back({key, ViolationCode::BadArity,
                                       "RetryUntilSuccessful needs exactly one child, has " + std::to_string(n)});
                    }
                } else if (n == 0) {
                    out.push_back({key, ViolationCode::BadArity, "composite has no children"});
                }
                break;
            }
        }
    }

    if (parent_count.count(tree.root) != 0) {
        out.push_back({tree.root, ViolationCode::CycleDetected, "root is referenced as a child"});
    }
    for (const auto& [id, count] : parent_count) {
        if (count > 1) {
            out.push_back({id, ViolationCode::CycleDetected,
                           "node is shared by " + std::to_string(count) + " parents (not a tree)"});
        }
    }

    // Reachability with an explicit on-stack set for cycle detection.
    std::set<bt::NodeId> reached;
    std::set<bt::NodeId> on_stack;
    std::set<bt::NodeId> reported_cycle;
    std::function<void(const bt::NodeId&)> visit = [&](const bt::NodeId& id) {
        auto it = tree.nodes.find(id);
        if (it == tree.nodes.end()) return;
        if (on_stack.count(id)) {
            if (reported_cycle.insert(id).second) {
                out.push_back({id, ViolationCode::CycleDetected, "cycle through '" + id + "'"});
            }
            return;
        }
        if (!reached.insert(id).second) return;
        on_stack.insert(id);
        for (const auto& c : it->second.children) visit(c);
        on_stack.erase(id);
    };
    if (tree.contains(tree.root)) visit(tree.root);

    for (const auto& [id, node] : tree.nodes) {
        if (!reached.count(id)) {
            out.push_back({id, ViolationCode::OrphanNode, "node is not reachable from the root"});
        }
    }
    return report;
}

}  // namespace vrl::dsl
