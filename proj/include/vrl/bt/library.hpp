// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vrl/bt/tree.hpp"

namespace vrl::bt {

struct ParamSchema {
    enum class Type { Int, Real, Bits, Identifier };

    std::string name;
    Type type = Type::Int;
    double min = 0;    // Int/Real range (inclusive)
    double max = 0;
    int bits = 0;      // exact length for Bits
    bool required = true;
    std::string description;

    // Empty when `value` satisfies this schema, otherwise a reason.
    std::string check(const std::string& value) const;
};

struct LeafSpec {
    std::string kind;
    std::string description;
    std::vector<ParamSchema> params;

    const ParamSchema* find(const std::string& name) const;
};

struct NodeLibrary {
    std::map<std::string, LeafSpec> actions;
    std::map<std::string, LeafSpec> conditions;
    std::set<NodeKind> composites;          // allowed composite/decorator kinds
    std::map<NodeKind, LeafSpec> composite_params;  // e.g. RetryUntilSuccessful.max_attempts
    std::string authoring_rules;

    const LeafSpec* action(const std::string& kind) const;
    const LeafSpec* condition(const std::string& kind) const;

    // Human-readable description of every node, used in actor prompts.
    std::string describe() const;
};

// The warehouse robot's node vocabulary.
NodeLibrary default_library();

}  // namespace vrl::bt
