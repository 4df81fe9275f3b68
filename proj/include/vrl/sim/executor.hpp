// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vrl/bt/engine.hpp"
#include "vrl/sim/world.hpp"

namespace vrl::sim {

// Runs BT leaves against a WorldState. Simulator errors become leaf
// Failures; the message is kept in the trace detail.
class WorldExecutor : public bt::ActionExecutor {
public:
    WorldExecutor(WorldState& world, FaultModel faults) : world_(world), faults_(std::move(faults)) {}

    bool supports_action(std::string_view kind) const override;
    bool supports_condition(std::string_view kind) const override;
    bt::LeafOutcome run_action(const bt::BTNode& node) override;
    bt::LeafOutcome check_condition(const bt::BTNode& node) override;
    double now() const override { return world_.clock; }

    std::size_t error_count() const { return errors_; }

private:
    WorldState& world_;
    FaultModel faults_;
    std::size_t errors_ = 0;
};

}  // namespace vrl::sim
