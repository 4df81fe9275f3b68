// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vrl::bt {

enum class TickStatus { Success, Failure, Running };

std::string_view to_string(TickStatus status);
TickStatus tick_status_from_string(std::string_view text);

using NodeId = std::string;

enum class NodeKind { Sequence, Fallback, CursorSequence, RetryUntilSuccessful, Action, Condition };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(std::string_view text);

inline bool is_leaf(NodeKind kind) { return kind == NodeKind::Action || kind == NodeKind::Condition; }
inline bool is_composite(NodeKind kind) {
    return kind == NodeKind::Sequence || kind == NodeKind::Fallback ||
           kind == NodeKind::CursorSequence;
}

// Parameters are kept as raw text; their types are checked against the
// NodeLibrary by the validator. std::map gives the canonical sorted order.
using Params = std::map<std::string, std::string>;

struct RuntimeState {
    std::size_t cursor = 0;    // CursorSequence
    int attempts = 0;          // RetryUntilSuccessful
    bool in_progress = false;  // RetryUntilSuccessful activation still open
    bool child_running = false;

    friend bool operator==(const RuntimeState&, const RuntimeState&) = default;
};

struct BTNode {
    NodeId id;
    NodeKind kind = NodeKind::Sequence;
    std::string leaf_kind;  // action_kind / condition_kind for leaves
    Params params;
    std::vector<NodeId> children;
    RuntimeState state;

    // Value of max_attempts for RetryUntilSuccessful (1 when absent or bad).
    int max_attempts() const;
};

struct BehaviorTree {
    NodeId root;
    std::map<NodeId, BTNode> nodes;
    std::string metadata;

    const BTNode& at(const NodeId& id) const;
    BTNode& at(const NodeId& id);
    bool contains(const NodeId& id) const { return nodes.count(id) != 0; }

    // Parent of `id`, or nullopt for the root / unknown ids. Linear scan.
    std::optional<NodeId> parent_of(const NodeId& id) const;

    // Node ids in depth-first pre-order from the root.
    std::vector<NodeId> preorder() const;
};

// Equality of shape, ids, kinds and params. Ignores runtime state and metadata.
bool structurally_equal(const BehaviorTree& a, const BehaviorTree& b);

// Equality of shape, kinds and params only, ignoring node ids.
bool shape_equal(const BehaviorTree& a, const BehaviorTree& b);

struct TraceEvent {
    enum class Kind { Entered, Returned };

    std::size_t sequence_no = 0;
    NodeId node_id;
    Kind event = Kind::Entered;
    TickStatus status = TickStatus::Success;  // meaningful for Returned only
    double sim_time = 0.0;
    std::string label;   // node kind, or "Action:<kind>" / "Condition:<kind>"
    std::string detail;  // leaf outcome summary
    std::optional<std::size_t> world_event;  // index into the simulator event log

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using Trace = std::vector<TraceEvent>;

std::string node_label(const BTNode& node);

class BtError : public std::runtime_error {
public:
    enum class Code { UnknownAction, CorruptTree, NotACheckpointNode, UnknownNode };

    BtError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

}  // namespace vrl::bt
