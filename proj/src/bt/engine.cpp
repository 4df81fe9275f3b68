// SPDX-License-Identifier: Apache-2.0
#include "vrl/bt/engine.hpp"

#include <algorithm>

namespace vrl::bt {

namespace {

constexpr int kMaxDepth = 512;

class Ticker {
public:
    Ticker(BehaviorTree& tree, ActionExecutor& executor, std::size_t first_sequence_no)
        : tree_(tree), executor_(executor), next_seq_(first_sequence_no) {}

    TickStatus run(const NodeId& id, int depth) {
        if (depth > kMaxDepth) {
            throw BtError(BtError::Code::CorruptTree, "tree depth exceeded at '" + id + "' (cycle?)");
        }
        auto it = tree_.nodes.find(id);
        if (it == tree_.nodes.end()) {
            throw BtError(BtError::Code::CorruptTree, "dangling child reference '" + id + "'");
        }
        BTNode& node = it->second;
        check_arity(node);

        emit(node, TraceEvent::Kind::Entered, TickStatus::Success, {});
        LeafOutcome leaf;
        TickStatus status = TickStatus::Failure;
        switch (node.kind) {
            case NodeKind::Sequence: status = sequence(node, depth); break;
            case NodeKind::Fallback: status = fallback(node, depth); break;
            case NodeKind::CursorSequence: status = cursor_sequence(node, depth); break;
            case NodeKind::RetryUntilSuccessful: status = retry(node, depth); break;
            case NodeKind::Action:
                if (!executor_.supports_action(node.leaf_kind)) {
                    throw BtError(BtError::Code::UnknownAction,
                                  "executor does not support action '" + node.leaf_kind + "'");
                }
                leaf = executor_.run_action(node);
                status = leaf.status;
                break;
            case NodeKind::Condition:
                if (!executor_.supports_condition(node.leaf_kind)) {
                    throw BtError(BtError::Code::UnknownAction,
                                  "executor does not support condition '" + node.leaf_kind + "'");
                }
                leaf = executor_.check_condition(node);
                status = leaf.status;
                break;
        }
        emit(node, TraceEvent::Kind::Returned, status, leaf);
        return status;
    }

    Trace take_trace() { return std::move(trace_); }

private:
    void check_arity(const BTNode& node) const {
        const auto n = node.children.size();
        const bool ok = is_leaf(node.kind) ? n == 0
                        : node.kind == NodeKind::RetryUntilSuccessful ? n == 1
                                                                      : n >= 1;
        if (!ok) {
            throw BtError(BtError::Code::CorruptTree,
                          "node '" + node.id + "' has invalid child count " + std::to_string(n));
        }
    }

    void emit(const BTNode& node, TraceEvent::Kind kind, TickStatus status, const LeafOutcome& leaf) {
        TraceEvent ev;
        ev.sequence_no = next_seq_++;
        ev.node_id = node.id;
        ev.event = kind;
        ev.status = status;
        ev.sim_time = executor_.now();
        ev.label = node_label(node);
        if (kind == TraceEvent::Kind::Returned) {
            ev.detail = leaf.detail;
            ev.world_event = leaf.world_event;
        }
        trace_.push_back(std::move(ev));
    }

    // Memoryless: restarts from the first child on every tick. A completed
    // CursorSequence child is reset before it is entered again.
    TickStatus sequence(BTNode& node, int depth) {
        const auto children = node.children;
        for (const auto& child : children) {
            auto found = tree_.nodes.find(child);
            if (found == tree_.nodes.end()) {
                throw BtError(BtError::Code::CorruptTree, "dangling child reference '" + child + "'");
            }
            auto& c = found->second;
            if (c.kind == NodeKind::CursorSequence && c.state.cursor >= c.children.size()) {
                reset_subtree(tree_, child);
            }
            const auto status = run(child, depth + 1);
            if (status != TickStatus::Success) return status;
        }
        return TickStatus::Success;
    }

    TickStatus fallback(BTNode& node, int depth) {
        const auto children = node.children;
        for (const auto& child : children) {
            const auto status = run(child, depth + 1);
            if (status != TickStatus::Failure) return status;
        }
        return TickStatus::Failure;
    }

    // Resumes at the stored cursor. The cursor only moves forward; it is
    // cleared by reset (or by an enclosing Sequence once completed).
    TickStatus cursor_sequence(BTNode& node, int depth) {
        const NodeId id = node.id;
        while (true) {
            auto& self = tree_.at(id);
            if (self.state.cursor >= self.children.size()) {
                self.state.cursor = self.children.size();
                return TickStatus::Success;
            }
            const NodeId child = self.children[self.state.cursor];
            const auto status = run(child, depth + 1);
            if (status != TickStatus::Success) return status;
            tree_.at(id).state.cursor += 1;
        }
    }

    TickStatus retry(BTNode& node, int depth) {
        const NodeId id = node.id;
        const int max_attempts = node.max_attempts();
        if (!node.state.in_progress) {
            node.state.attempts = 0;
            node.state.in_progress = true;
        }
        while (true) {
            {
                auto& self = tree_.at(id);
                if (!self.state.child_running) self.state.attempts += 1;
            }
            const auto status = run(tree_.at(id).children.front(), depth + 1);
            auto& self = tree_.at(id);
            if (status == TickStatus::Running) {
                self.state.child_running = true;
                return TickStatus::Running;
            }
            self.state.child_running = false;
            if (status == TickStatus::Success) {
                self.state.in_progress = false;
                return TickStatus::Success;
            }
            if (self.state.attempts >= max_attempts) {
                self.state.in_progress = false;
                return TickStatus::Failure;
            }
        }
    }

    BehaviorTree& tree_;
    ActionExecutor& executor_;
    std::size_t next_seq_;
    Trace trace_;
};

}  // namespace

TickResult tick_node(BehaviorTree& tree, const NodeId& node, ActionExecutor& executor,
                     std::size_t first_sequence_no) {
    Ticker ticker(tree, executor, first_sequence_no);
    TickResult result;
    result.status = ticker.run(node, 0);
    result.trace = ticker.take_trace();
    return result;
}

TickResult tick(BehaviorTree& tree, ActionExecutor& executor, std::size_t first_sequence_no) {
    if (!tree.contains(tree.root)) {
        throw BtError(BtError::Code::CorruptTree, "root '" + tree.root + "' is not in the node table");
    }
    return tick_node(tree, tree.root, executor, first_sequence_no);
}

void reset_subtree(BehaviorTree& tree, const NodeId& node) {
    std::vector<NodeId> stack{node};
    std::size_t guard = 0;
    while (!stack.empty() && guard++ <= tree.nodes.size()) {
        auto it = tree.nodes.find(stack.back());
        stack.pop_back();
        if (it == tree.nodes.end()) continue;
        it->second.state = RuntimeState{};
        for (const auto& c : it->second.children) stack.push_back(c);
    }
}

void reset(BehaviorTree& tree) {
    for (auto& [id, node] : tree.nodes) node.state = RuntimeState{};
}

BehaviorTree reset_copy(BehaviorTree tree) {
    reset(tree);
    return tree;
}

TickResult execute_subtree(BehaviorTree& tree, const NodeId& subtree_root, ActionExecutor& executor,
                           std::size_t first_sequence_no, int max_reticks) {
    const auto& root = tree.at(tree.root);
    if (std::find(root.children.begin(), root.children.end(), subtree_root) == root.children.end()) {
        throw BtError(BtError::Code::NotACheckpointNode,
                      "'" + subtree_root + "' is not a direct child of the root");
    }
    TickResult total;
    std::size_t seq = first_sequence_no;
    for (int i = 0;; ++i) {
        auto step = tick_node(tree, subtree_root, executor, seq);
        seq += step.trace.size();
        total.trace.insert(total.trace.end(), std::make_move_iterator(step.trace.begin()),
                           std::make_move_iterator(step.trace.end()));
        total.status = step.status;
        if (step.status != TickStatus::Running) break;
        if (i >= max_reticks) {
            throw BtError(BtError::Code::CorruptTree,
                          "subtree '" + subtree_root + "' still Running after re-tick limit");
        }
        executor.advance();
    }
    return total;
}

}  // namespace vrl::bt
