// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vrl/bt/tree.hpp"
#include "vrl/rng.hpp"

namespace vrl::sim {

class SimError : public std::runtime_error {
public:
    enum class Code { InvalidConfig, PreconditionViolation, NotInRequiredZone, UnknownAction };

    SimError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Block footprint in mm.
inline constexpr double kBlockLength = 150.0;
inline constexpr double kBlockWidth = 50.0;
inline constexpr double kBlockHeight = 30.0;
inline constexpr std::size_t kCarryCapacity = 4;

enum class ZoneKind { Load, Unload, StartFinish, ShelfInitial, ShelfTarget };
enum class Orientation { BlueUp, OrangeUp };
enum class Placement { FullyInside, PartiallyInside, Adjacent };

std::string_view to_string(ZoneKind kind);
std::string_view to_string(Orientation o);
std::string_view to_string(Placement p);
std::optional<ZoneKind> zone_kind_from_string(std::string_view text);
std::optional<Orientation> orientation_from_string(std::string_view text);
std::optional<Placement> placement_from_string(std::string_view text);

inline Orientation flipped(Orientation o) {
    return o == Orientation::BlueUp ? Orientation::OrangeUp : Orientation::BlueUp;
}

struct Rect {
    double x = 0.0;  // lower-left corner, mm
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool overlaps(const Rect& o) const { return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Zone {
    std::string zone_id;
    ZoneKind kind = ZoneKind::Load;
    Rect extent;
    friend bool operator==(const Zone&, const Zone&) = default;
};

struct BlockSpec {
    std::string block_id;
    std::string initial_zone;
    Orientation orientation = Orientation::BlueUp;
    friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct ShelfSpec {
    std::string initial_zone;
    std::string target_zone;
    friend bool operator==(const ShelfSpec&, const ShelfSpec&) = default;
};

struct FieldConfig {
    std::vector<Zone> zones;
    std::vector<BlockSpec> blocks;
    ShelfSpec shelf;
    double time_limit = 180.0;
    std::string field_seed_label;

    const Zone* zone(std::string_view id) const;
    const Zone& start_zone() const;
    std::vector<std::string> zones_of(ZoneKind kind) const;
    friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

// Throws SimError(InvalidConfig) describing the first problem found.
void check_config(const FieldConfig& config);

struct BlockLocation {
    enum class Kind { InZone, Carried, OutsideAllZones };
    Kind kind = Kind::InZone;
    std::string zone;                          // InZone only
    Placement placement = Placement::FullyInside;  // InZone only

    static BlockLocation in_zone(std::string zone, Placement p = Placement::FullyInside) {
        return {Kind::InZone, std::move(zone), p};
    }
    static BlockLocation carried() { return {Kind::Carried, {}, Placement::FullyInside}; }
    static BlockLocation outside() { return {Kind::OutsideAllZones, {}, Placement::FullyInside}; }
    friend bool operator==(const BlockLocation&, const BlockLocation&) = default;
};

std::string to_string(const BlockLocation& loc);

struct BlockState {
    std::string block_id;
    BlockLocation location;
    Orientation orientation = Orientation::BlueUp;
    friend bool operator==(const BlockState&, const BlockState&) = default;
};

enum class FaultKind { PickFailure, DropInTransit, MisRotation, PlaceOffsetPartial, PlaceOffsetOutside, NavigationStall };

std::string_view to_string(FaultKind kind);

struct BlockFault {
    FaultKind kind = FaultKind::PickFailure;
    std::string block_id;  // empty when the fault is not tied to one block
    friend bool operator==(const BlockFault&, const BlockFault&) = default;
};

struct WorldEvent {
    std::size_t index = 0;
    std::string action;
    bt::Params params;
    bool success = true;
    double start_time = 0.0;
    double sim_time = 0.0;  // clock after the action
    double duration = 0.0;
    std::vector<std::string> blocks;  // blocks lifted, rotated or deposited
    std::vector<BlockFault> faults;
    std::string robot_zone;  // after the action
    std::string note;
    friend bool operator==(const WorldEvent&, const WorldEvent&) = default;
};

struct FaultModel {
    double p_pick_fail = 0.05;
    double p_drop_in_transit = 0.03;
    double p_misrotate = 0.05;
    double p_place_offset = 0.10;
    double p_offset_partial = 0.7;  // share of offsets that stay partially inside
    double p_nav_stall = 0.10;
    double nav_stall_extra = 10.0;
    std::map<std::string, double> durations = {
        {"NavigateTo", 8.0}, {"PickBlocks", 3.0}, {"RotateBlocks", 2.0},
        {"PlaceBlocks", 3.0}, {"MoveShelf", 15.0}, {"ReturnToStart", 8.0},
    };

    static FaultModel none();
    double duration(const std::string& action) const;
    // Throws SimError(InvalidConfig).
    void check() const;
    friend bool operator==(const FaultModel&, const FaultModel&) = default;
};

struct WorldState {
    FieldConfig config;
    std::vector<BlockState> blocks;
    std::string robot_zone;  // actions are atomic, so the robot is never observed in transit
    std::vector<std::string> carried;
    std::string shelf_zone;
    double clock = 0.0;
    Rng rng;
    std::vector<WorldEvent> event_log;

    BlockState& block(std::string_view id);
    const BlockState& block(std::string_view id) const;
    std::vector<std::string> blocks_in(std::string_view zone) const;
    bool overtime() const { return clock > config.time_limit; }
    friend bool operator==(const WorldState&, const WorldState&) = default;
};

WorldState init_world(const FieldConfig& config, std::uint64_t seed);

struct ActionOutcome {
    bt::TickStatus status = bt::TickStatus::Success;
    double duration = 0.0;
    std::optional<FaultKind> injected_fault;
    std::size_t event_index = 0;
};

const std::vector<std::string>& action_kinds();

// Throws SimError on precondition problems; the world is unchanged then.
ActionOutcome execute_action(WorldState& world, const std::string& action_kind, const bt::Params& params,
                             const FaultModel& faults);

// Conditions are instantaneous and never touch the clock or the RNG.
const std::vector<std::string>& condition_kinds();
bool check_condition(const WorldState& world, const std::string& condition_kind, const bt::Params& params);

// ---------------------------------------------------------------------------
// Observation

enum class Mode { Initial, Intermediate, Final };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view text);

struct PerceptionProfile {
    double p_color_misread = 0.0;
    double p_zone_miscount = 0.0;  // an occupied zone is perceived as empty
    bool block_info = false;
    friend bool operator==(const PerceptionProfile&, const PerceptionProfile&) = default;
};

struct ZoneView {
    std::string zone_id;
    ZoneKind kind = ZoneKind::Load;
    int blue_up = 0;
    int orange_up = 0;
    friend bool operator==(const ZoneView&, const ZoneView&) = default;
};

struct Observation {
    Mode mode = Mode::Initial;
    std::vector<ZoneView> zones;
    std::vector<BlockState> blocks;  // as perceived; blocks of miscounted zones are missing
    std::string shelf_zone;
    std::string robot_zone;
    double clock = 0.0;
    double time_limit = 0.0;
    std::optional<std::vector<BlockState>> block_info;
    friend bool operator==(const Observation&, const Observation&) = default;
};

// Corruption draws come from `perception`, a stream separate from the world's.
Observation observe(const WorldState& world, const PerceptionProfile& profile, Mode mode, Rng& perception);

// ---------------------------------------------------------------------------
// Ground truth

enum class IssueCategory {
    MisorientedPlacement,
    BlockOutsideZones,
    BlockIncorrectlyPlaced,
    PickFailure,
    DropInTransit,
    MisRotation,
    NavigationStall,
    VacuousSubtreeSuccess,
    ShelfNotRelocated,
    TimeOverrun,
    SetupAnomaly,
};

std::string_view to_string(IssueCategory c);
std::optional<IssueCategory> issue_category_from_string(std::string_view text);
const std::vector<IssueCategory>& all_issue_categories();

struct GroundTruthIssue {
    std::string issue_id;
    IssueCategory category = IssueCategory::SetupAnomaly;
    std::optional<bt::NodeId> node;
    double sim_time = 0.0;
    std::string description;
    std::string block_id;  // empty when not tied to a block
    friend bool operator==(const GroundTruthIssue&, const GroundTruthIssue&) = default;
};

enum class IssueScope { Initial, Checkpoint, Final };

// Initial: setup anomalies only. Checkpoint: faults of events from
// `first_event` on, vacuous successes in `trace`, and the current state of
// unload zones and stray blocks. Final: every fault in the log plus the
// end-of-episode scan.
std::vector<GroundTruthIssue> ground_truth_issues(const WorldState& world, const bt::Trace& trace,
                                                  IssueScope scope = IssueScope::Final,
                                                  std::size_t first_event = 0);

}  // namespace vrl::sim
