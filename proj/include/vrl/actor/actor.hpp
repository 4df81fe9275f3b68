// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrl/bt/library.hpp"
#include "vrl/bt/tree.hpp"
#include "vrl/critic/critic.hpp"
#include "vrl/dsl/dsl.hpp"
#include "vrl/rng.hpp"
#include "vrl/sim/world.hpp"

namespace vrl::actor {

// What the actor knows about the field: zone ids by role, never block state.
struct Environment {
    std::string start_zone;
    std::vector<std::string> load_zones;
    std::vector<std::string> unload_zones;
    std::string shelf_zone;
    std::string shelf_target;
    std::size_t carry_capacity = sim::kCarryCapacity;
    double time_limit = 180.0;

    // Unload zone paired with the i-th load zone.
    const std::string& unload_for(std::size_t load_index) const;
    std::string describe() const;
};

Environment environment_of(const sim::FieldConfig& field);

const std::string& task_definition();

struct ActorContext {
    std::string task_definition;
    std::string environment_spec;
    Environment environment;
    bt::NodeLibrary node_library;
    std::string authoring_rules;
    bt::BehaviorTree current_bt;
    std::optional<std::vector<sim::BlockState>> block_info;
    // Full episode trace; may be null.
    const bt::Trace* trace = nullptr;
};

ActorContext make_context(const sim::FieldConfig& field, bt::BehaviorTree current, const bt::Trace* trace,
                          std::optional<std::vector<sim::BlockState>> block_info = std::nullopt);

// Facts the actor extracts from one episode's feedback and trace.
struct EpisodeEvidence {
    bool transport_failure = false;
    bool critic_contradicted = false;
    std::optional<int> misoriented;  // colour-down deliveries implied by the score
    friend bool operator==(const EpisodeEvidence&, const EpisodeEvidence&) = default;
};

EpisodeEvidence evidence_of(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                            int real_score);

// Number of delivered blocks lying colour-down, recovered from the real score
// and the trace. Nullopt when the two do not pin it down.
std::optional<int> misoriented_from_score(const ActorContext& context, int real_score);

struct MemoryEntry {
    std::size_t episode_index = 0;
    std::optional<critic::CriticFeedback> final_feedback;
    int real_score = 0;
    dsl::TreeDiff bt_diff;
    EpisodeEvidence evidence;
    std::string bt_source;  // tree the episode ran
    std::string rule;       // refinement applied afterwards
};

struct ActorMemory {
    std::vector<MemoryEntry> entries;
    std::optional<int> best_score() const;
};

struct RefineResult {
    bt::BehaviorTree tree;
    dsl::TreeDiff diff;
    std::string rule;  // which rule or mutation produced the tree; "identity" otherwise
    std::optional<std::string> error;  // set on RefinementFailed
};

class ActorError : public std::runtime_error {
public:
    enum class Code { Timeout, MalformedReply, RefinementFailed };
    ActorError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view to_string(ActorError::Code code);

class Actor {
public:
    virtual ~Actor() = default;
    virtual std::string name() const = 0;
    // Never returns an invalid tree. Remote transport failures throw ActorError.
    virtual RefineResult refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                                int real_score, const ActorMemory& memory, Rng& rng) = 0;
};

enum class Rule { CursorWrap = 0, DropRotation, Transactional, TargetedRotation, TimeBudget };
std::string_view to_string(Rule rule);

struct RuleOptions {
    std::array<bool, 5> enabled{true, true, true, true, true};
    bool on(Rule r) const { return enabled[static_cast<std::size_t>(r)]; }
};

class RuleBasedActor : public Actor {
public:
    explicit RuleBasedActor(RuleOptions options = {}) : options_(options) {}
    std::string name() const override { return "rule"; }
    RefineResult refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                        int real_score, const ActorMemory& memory, Rng& rng) override;

private:
    RuleOptions options_;
};

class ScoreOnlyActor : public Actor {
public:
    explicit ScoreOnlyActor(int max_attempts = 16) : max_attempts_(max_attempts) {}
    std::string name() const override { return "score-only"; }
    RefineResult refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                        int real_score, const ActorMemory& memory, Rng& rng) override;

private:
    int max_attempts_;
};

struct RemoteActorConfig {
    std::string url;
    std::string token;
    double timeout_seconds = 60.0;
    int attempts = 3;  // transport attempts per request
    int reprompts = 2;  // extra turns after an invalid tree
};

inline constexpr const char* kActorSchema = "vrl.actor/1";

class RemoteActor : public Actor {
public:
    explicit RemoteActor(RemoteActorConfig config) : config_(std::move(config)) {}
    std::string name() const override { return "remote"; }
    RefineResult refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                        int real_score, const ActorMemory& memory, Rng& rng) override;

    nlohmann::json request_body(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                                int real_score, const ActorMemory& memory,
                                const std::optional<std::string>& violations) const;

private:
    RemoteActorConfig config_;
};

// "rule", "score-only" or "remote".
std::unique_ptr<Actor> make_actor(const std::string& spec, const RemoteActorConfig& remote = {});

// Tree editing helpers shared by the actors.
namespace edit {

// Removes the subtree at `id` and any composite ancestors left without children.
void remove_subtree(bt::BehaviorTree& tree, const bt::NodeId& id);
// An id not used in `tree`, derived from `stem`.
bt::NodeId fresh_id(const bt::BehaviorTree& tree, const std::string& stem);
// Bit i set iff the i-th of the first `capacity` blocks in `zone` is OrangeUp.
std::string rotation_mask(const std::vector<sim::BlockState>& blocks, const std::string& zone,
                          std::size_t capacity = sim::kCarryCapacity);

}  // namespace edit

void to_json(nlohmann::json& j, const EpisodeEvidence& v);
void from_json(const nlohmann::json& j, EpisodeEvidence& v);
void to_json(nlohmann::json& j, const MemoryEntry& v);
void from_json(const nlohmann::json& j, MemoryEntry& v);

}  // namespace vrl::actor
