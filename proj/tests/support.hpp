// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit and acceptance suites: scripted executors,
// random tree generators and trace checkers.
#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vrl/bt/engine.hpp"
#include "vrl/bt/library.hpp"
#include "vrl/rng.hpp"

namespace vrl::testing {

// Leaves answer from per-node scripts; the last scripted status repeats.
class ScriptedExecutor : public bt::ActionExecutor {
public:
    std::map<bt::NodeId, std::deque<bt::TickStatus>> scripts;
    bt::TickStatus fallback = bt::TickStatus::Success;
    std::map<bt::NodeId, int> calls;
    double clock = 0.0;

    bool supports_action(std::string_view kind) const override { return kind != "FlyTo"; }
    bool supports_condition(std::string_view) const override { return true; }

    bt::LeafOutcome run_action(const bt::BTNode& node) override { return answer(node); }
    bt::LeafOutcome check_condition(const bt::BTNode& node) override { return answer(node); }
    double now() const override { return clock; }
    void advance() override { clock += 0.5; }

private:
    bt::LeafOutcome answer(const bt::BTNode& node) {
        calls[node.id] += 1;
        clock += 1.0;
        auto it = scripts.find(node.id);
        if (it == scripts.end() || it->second.empty()) return {fallback, {}, {}};
        auto status = it->second.front();
        if (it->second.size() > 1) it->second.pop_front();
        return {status, {}, {}};
    }
};

// Leaves answer pseudo-randomly but deterministically from (seed, node, call).
class RandomLeafExecutor : public bt::ActionExecutor {
public:
    RandomLeafExecutor(std::uint64_t seed, double p_success, double p_running)
        : seed_(seed), p_success_(p_success), p_running_(p_running) {}

    bool supports_action(std::string_view) const override { return true; }
    bool supports_condition(std::string_view) const override { return true; }
    bt::LeafOutcome run_action(const bt::BTNode& node) override { return answer(node); }
    bt::LeafOutcome check_condition(const bt::BTNode& node) override { return answer(node); }
    double now() const override { return clock_; }
    void advance() override { clock_ += 0.25; }

private:
    bt::LeafOutcome answer(const bt::BTNode& node) {
        const auto n = calls_[node.id]++;
        std::uint64_t h = seed_;
        for (char c : node.id) h = Rng::mix(h ^ static_cast<unsigned char>(c));
        Rng rng(h, 7, n);
        const double u = rng.uniform01();
        clock_ += 1.0;
        if (u < p_running_) return {bt::TickStatus::Running, {}, {}};
        if (u < p_running_ + p_success_) return {bt::TickStatus::Success, {}, {}};
        return {bt::TickStatus::Failure, {}, {}};
    }

    std::uint64_t seed_;
    double p_success_;
    double p_running_;
    double clock_ = 0.0;
    std::map<bt::NodeId, std::uint64_t> calls_;
};

struct TreeGenOptions {
    int max_depth = 4;
    int max_children = 4;
    double leaf_probability = 0.35;
    double name_probability = 0.3;
    bool allow_fallback = true;
    bool allow_conditions = true;
};

// Random valid tree over the default library.
inline bt::BehaviorTree random_tree(Rng& rng, const TreeGenOptions& opt = {}) {
    bt::BehaviorTree tree;
    int counter = 0;
    const std::vector<std::string> zones = {"L1", "L2", "U1", "U2", "S", "SH0", "SH1"};

    auto make_leaf = [&](bt::BTNode& n) {
        const bool condition = opt.allow_conditions && rng.bernoulli(0.2);
        if (condition) {
            n.kind = bt::NodeKind::Condition;
            switch (rng.below(3)) {
                case 0: n.leaf_kind = "IsCarrying"; n.params["min"] = std::to_string(1 + rng.below(4)); break;
                case 1: n.leaf_kind = "AtZone"; n.params["zone"] = zones[rng.below(zones.size())]; break;
                default: n.leaf_kind = "ShelfAtTarget"; break;
            }
            return;
        }
        n.kind = bt::NodeKind::Action;
        switch (rng.below(6)) {
            case 0: n.leaf_kind = "NavigateTo"; n.params["zone"] = zones[rng.below(zones.size())]; break;
            case 1: n.leaf_kind = "PickBlocks"; n.params["count"] = std::to_string(1 + rng.below(4)); break;
            case 2: {
                n.leaf_kind = "RotateBlocks";
                std::string mask;
                for (int i = 0; i < 4; ++i) mask += rng.bernoulli(0.5) ? '1' : '0';
                n.params["mask"] = mask;
                break;
            }
            case 3: n.leaf_kind = "PlaceBlocks"; break;
            case 4: n.leaf_kind = "MoveShelf"; break;
            default: n.leaf_kind = "ReturnToStart"; break;
        }
    };

    std::function<bt::NodeId(int, const std::string&)> gen = [&](int depth, const std::string& path) {
        bt::BTNode n;
        const bool named = rng.bernoulli(opt.name_probability);
        n.id = named ? "n" + std::to_string(counter++) : path;
        if (depth >= opt.max_depth || (depth > 0 && rng.bernoulli(opt.leaf_probability))) {
            make_leaf(n);
        } else {
            const auto pick = rng.below(opt.allow_fallback ? 4 : 3);
            if (pick == 0) {
                n.kind = bt::NodeKind::Sequence;
            } else if (pick == 1) {
                n.kind = bt::NodeKind::CursorSequence;
            } else if (pick == 2) {
                n.kind = bt::NodeKind::RetryUntilSuccessful;
                n.params["max_attempts"] = std::to_string(1 + rng.below(4));
            } else {
                n.kind = bt::NodeKind::Fallback;
            }
            const int count = n.kind == bt::NodeKind::RetryUntilSuccessful
                                  ? 1
                                  : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_children)));
            for (int i = 0; i < count; ++i) {
                n.children.push_back(gen(depth + 1, path + "." + std::to_string(i)));
            }
        }
        const auto id = n.id;
        tree.nodes.emplace(id, std::move(n));
        return id;
    };
    tree.root = gen(0, "$");
    return tree;
}

struct TraceCheck {
    bool ok = true;
    std::string error;
};

// Balanced Entered/Returned nesting that follows parent/child edges, plus the
// short-circuit rule of every composite activation.
inline TraceCheck check_trace(const bt::BehaviorTree& tree, const bt::Trace& trace,
                              bool check_retry_bound = true) {
    struct Frame {
        bt::NodeId id;
        std::vector<bt::TickStatus> child_results;
    };
    std::vector<Frame> stack;
    std::size_t last_seq = 0;
    bool first = true;
    auto fail = [](std::string why) { return TraceCheck{false, std::move(why)}; };

    for (const auto& ev : trace) {
        if (!first && ev.sequence_no <= last_seq) return fail("sequence numbers not increasing");
        first = false;
        last_seq = ev.sequence_no;
        if (ev.event == bt::TraceEvent::Kind::Entered) {
            if (!stack.empty()) {
                const auto& parent = tree.at(stack.back().id);
                if (std::find(parent.children.begin(), parent.children.end(), ev.node_id) == parent.children.end()) {
                    return fail("'" + ev.node_id + "' entered under non-parent '" + stack.back().id + "'");
                }
                const auto& results = stack.back().child_results;
                if (!results.empty()) {
                    const auto prev = results.back();
                    switch (parent.kind) {
                        case bt::NodeKind::Sequence:
                        case bt::NodeKind::CursorSequence:
                            if (prev != bt::TickStatus::Success) return fail("sequence did not short-circuit");
                            break;
                        case bt::NodeKind::Fallback:
                            if (prev != bt::TickStatus::Failure) return fail("fallback did not short-circuit");
                            break;
                        case bt::NodeKind::RetryUntilSuccessful:
                            if (prev != bt::TickStatus::Failure) return fail("retry re-entered after non-failure");
                            if (check_retry_bound &&
                                static_cast<int>(results.size()) >= parent.max_attempts()) {
                                return fail("retry exceeded max_attempts");
                            }
                            break;
                        default: return fail("leaf has entered children");
                    }
                }
            }
            stack.push_back({ev.node_id, {}});
        } else {
            if (stack.empty() || stack.back().id != ev.node_id) return fail("unbalanced Returned for " + ev.node_id);
            stack.pop_back();
            if (!stack.empty()) stack.back().child_results.push_back(ev.status);
        }
    }
    if (!stack.empty()) return fail("unterminated Entered events");
    return {};
}

}  // namespace vrl::testing
