// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vrl/bt/tree.hpp"

namespace vrl::bt {

struct LeafOutcome {
    TickStatus status = TickStatus::Success;
    std::string detail;
    std::optional<std::size_t> world_event;
};

// Leaf effects are delegated to an executor; the engine only walks the tree.
class ActionExecutor {
public:
    virtual ~ActionExecutor() = default;

    virtual bool supports_action(std::string_view kind) const = 0;
    virtual bool supports_condition(std::string_view kind) const = 0;

    virtual LeafOutcome run_action(const BTNode& node) = 0;
    virtual LeafOutcome check_condition(const BTNode& node) = 0;

    virtual double now() const = 0;

    // Called between re-ticks of a Running subtree.
    virtual void advance() {}
};

struct TickResult {
    TickStatus status = TickStatus::Success;
    Trace trace;
};

// Ticks the tree once from the root. Trace sequence numbers start at
// `first_sequence_no`.
TickResult tick(BehaviorTree& tree, ActionExecutor& executor, std::size_t first_sequence_no = 0);

// Ticks the subtree rooted at `node` once.
TickResult tick_node(BehaviorTree& tree, const NodeId& node, ActionExecutor& executor,
                     std::size_t first_sequence_no = 0);

// Clears all runtime state in place (cursors, attempt counters).
void reset(BehaviorTree& tree);

// Clears runtime state of the subtree rooted at `node`.
void reset_subtree(BehaviorTree& tree, const NodeId& node);

// Returns a reset copy.
BehaviorTree reset_copy(BehaviorTree tree);

// Ticks one direct child of the root until it is terminal. Running is
// re-ticked after executor.advance(); at most `max_reticks` re-ticks.
TickResult execute_subtree(BehaviorTree& tree, const NodeId& subtree_root, ActionExecutor& executor,
                           std::size_t first_sequence_no = 0, int max_reticks = 10000);

}  // namespace vrl::bt
