// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vrl/bt/library.hpp"
#include "vrl/bt/tree.hpp"

namespace vrl::dsl {

class DslError : public std::runtime_error {
public:
    enum class Code { SyntaxError, DuplicateNodeName, ApplyFailed };

    DslError(Code code, const std::string& message, std::size_t line = 0, std::size_t column = 0);

    Code code() const { return code_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    Code code_;
    std::size_t line_;
    std::size_t column_;
};

// Parses `.bt` text. Unnamed nodes get path-derived ids: the root is "$",
// its i-th child "$.i", and so on.
bt::BehaviorTree parse(std::string_view source);

// Canonical text: one node per line, two-space indent, sorted params.
// Names are written only where the id differs from the path-derived id.
std::string serialize(const bt::BehaviorTree& tree);

std::string path_id(const std::vector<std::size_t>& path);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode { UnknownNodeKind, BadArity, BadParam, OrphanNode, CycleDetected, UnresolvedChild };

std::string_view to_string(ViolationCode code);

struct Violation {
    bt::NodeId location;
    ViolationCode code = ViolationCode::BadParam;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationCode code) const;
    std::string to_text() const;
};

ValidationReport validate(const bt::BehaviorTree& tree, const bt::NodeLibrary& library);

// ---------------------------------------------------------------------------
// Structural diff

enum class EditOp { InsertNode, DeleteNode, ReplaceNode, ReparentNode, ChangeParam };

std::string_view to_string(EditOp op);
std::optional<EditOp> edit_op_from_string(std::string_view text);

struct TreeEdit {
    EditOp op = EditOp::InsertNode;
    bt::NodeId target;
    // InsertNode / ReplaceNode: id, kind, leaf kind and params (children unused).
    std::optional<bt::BTNode> node;
    // InsertNode / ReparentNode: destination; an empty parent makes the node the root.
    bt::NodeId parent;
    std::size_t index = 0;
    // ChangeParam: key and new value (nullopt erases the key).
    std::string key;
    std::optional<std::string> value;

    std::string describe() const;
};

struct TreeDiff {
    std::vector<TreeEdit> edits;

    bool empty() const { return edits.empty(); }
    std::size_t count(EditOp op) const;
};

TreeDiff diff(const bt::BehaviorTree& old_tree, const bt::BehaviorTree& new_tree);

void apply_edit(bt::BehaviorTree& tree, const TreeEdit& edit);
bt::BehaviorTree apply(bt::BehaviorTree tree, const TreeDiff& diff);

}  // namespace vrl::dsl
