// SPDX-License-Identifier: Apache-2.0
#include "vrl/bt/library.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

namespace vrl::bt {

namespace {

bool parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

ParamSchema int_param(std::string name, int lo, int hi, std::string description) {
    ParamSchema p;
    p.name = std::move(name);
    p.type = ParamSchema::Type::Int;
    p.min = lo;
    p.max = hi;
    p.description = std::move(description);
    return p;
}

ParamSchema zone_param(std::string description) {
    ParamSchema p;
    p.name = "zone";
    p.type = ParamSchema::Type::Identifier;
    p.description = std::move(description);
    return p;
}

}  // namespace

std::string ParamSchema::check(const std::string& value) const {
    switch (type) {
        case Type::Int: {
            long long v = 0;
            if (!parse_int(value, v)) return "'" + value + "' is not an integer";
            if (v < min || v > max) {
                return "value " + value + " outside [" + format_number(min) + ", " + format_number(max) + "]";
            }
            return {};
        }
        case Type::Real: {
            double v = 0;
            if (!parse_real(value, v)) return "'" + value + "' is not a number";
            if (v < min || v > max) {
                return "value " + value + " outside [" + format_number(min) + ", " + format_number(max) + "]";
            }
            return {};
        }
        case Type::Bits: {
            if (static_cast<int>(value.size()) != bits) {
                return "expected a " + std::to_string(bits) + "-bit string, got '" + value + "'";
            }
            for (char c : value) {
                if (c != '0' && c != '1') return "'" + value + "' is not a bit string";
            }
            return {};
        }
        case Type::Identifier: {
            if (value.empty()) return "empty identifier";
            for (char c : value) {
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
                    return "'" + value + "' is not an identifier";
                }
            }
            return {};
        }
    }
    return "unknown parameter type";
}

const ParamSchema* LeafSpec::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

const LeafSpec* NodeLibrary::action(const std::string& kind) const {
    auto it = actions.find(kind);
    return it == actions.end() ? nullptr : &it->second;
}

const LeafSpec* NodeLibrary::condition(const std::string& kind) const {
    auto it = conditions.find(kind);
    return it == conditions.end() ? nullptr : &it->second;
}

std::string NodeLibrary::describe() const {
    std::ostringstream os;
    auto emit = [&os](const char* prefix, const LeafSpec& spec) {
        os << prefix << ' ' << spec.kind;
        for (const auto& p : spec.params) os << ' ' << p.name << "=<" << p.description << '>';
        os << " : " << spec.description << '\n';
    };
    os << "Composites:";
    for (auto k : composites) os << ' ' << to_string(k);
    os << '\n';
    for (const auto& [k, spec] : composite_params) emit(std::string(to_string(k)).c_str(), spec);
    for (const auto& [k, spec] : actions) emit("Action", spec);
    for (const auto& [k, spec] : conditions) emit("Condition", spec);
    return os.str();
}

NodeLibrary default_library() {
    NodeLibrary lib;
    lib.composites = {NodeKind::Sequence, NodeKind::Fallback, NodeKind::CursorSequence,
                      NodeKind::RetryUntilSuccessful};
    lib.composite_params[NodeKind::RetryUntilSuccessful] =
        LeafSpec{"RetryUntilSuccessful", "re-tick the single child until it succeeds",
                 {int_param("max_attempts", 1, 10, "total attempts, 1..10")}};

    ParamSchema mask;
    mask.name = "mask";
    mask.type = ParamSchema::Type::Bits;
    mask.bits = 4;
    mask.description = "4-bit string, bit i flips carried slot i";

    auto add_action = [&lib](LeafSpec spec) { lib.actions.emplace(spec.kind, std::move(spec)); };
    add_action({"NavigateTo", "drive to a zone", {zone_param("target zone id")}});
    add_action({"PickBlocks", "lift up to count blocks from the current load zone",
                {int_param("count", 1, 4, "blocks to lift, 1..4")}});
    add_action({"RotateBlocks", "flip the carried blocks selected by mask", {mask}});
    add_action({"PlaceBlocks", "deposit all carried blocks in the current unload zone", {}});
    add_action({"MoveShelf", "push the shelf from its current zone to its target zone", {}});
    add_action({"ReturnToStart", "drive back to the start/finish area", {}});

    auto add_condition = [&lib](LeafSpec spec) { lib.conditions.emplace(spec.kind, std::move(spec)); };
    add_condition({"IsCarrying", "at least min blocks are carried",
                   {int_param("min", 1, 4, "minimum carried blocks")}});
    add_condition({"AtZone", "robot is in the zone", {zone_param("zone id")}});
    add_condition({"ZoneHasBlocks", "the zone contains at least one block", {zone_param("zone id")}});
    add_condition({"ShelfAtTarget", "the shelf is at its target zone", {}});
    ParamSchema secs;
    secs.name = "seconds";
    secs.type = ParamSchema::Type::Real;
    secs.min = 0;
    secs.max = 100000;
    secs.description = "seconds";
    add_condition({"TimeRemaining", "at least this much operating time is left", {secs}});

    lib.authoring_rules =
        "One node per line. Composites: Sequence, Fallback, CursorSequence (resumes at its last "
        "active child), RetryUntilSuccessful(max_attempts) with exactly one child. Leaves are "
        "(Action Kind key=value ...) or (Condition Kind key=value ...). Carry capacity is 4 blocks. "
        "Reuse existing node names when editing so diffs stay small.";
    return lib;
}

}  // namespace vrl::bt
