// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrl/actor/actor.hpp"
#include "vrl/critic/critic.hpp"
#include "vrl/scoring/scoring.hpp"
#include "vrl/sim/world.hpp"

namespace vrl::runtime {

inline constexpr const char* kEpisodeSchema = "vrl.episode/1";

// Environment variables read for remote endpoints.
inline constexpr const char* kCriticUrlEnv = "VRL_CRITIC_URL";
inline constexpr const char* kActorUrlEnv = "VRL_ACTOR_URL";
inline constexpr const char* kTokenEnv = "VRL_API_TOKEN";

struct RunConfig {
    std::string name = "run";
    std::vector<std::string> field_configs;  // paths
    std::string initial_bt;                  // path
    std::size_t episodes_per_config = 10;
    std::vector<std::uint64_t> seeds{1};
    std::string critic = "none";  // none | remote | profile name | profile .json path
    std::string actor = "score-only";  // rule | score-only | remote
    std::vector<std::string> disabled_rules;
    bool block_info = false;
    sim::FaultModel fault_model;
    std::optional<double> time_limit;
    std::string output_dir = "out";
    critic::RemoteConfig critic_remote;
    actor::RemoteActorConfig actor_remote;
    int jobs = 1;  // lineages run in parallel

    // Throws std::invalid_argument.
    void check() const;
};

// Reads a JSON run config. Relative paths are resolved against the config's
// directory; remote endpoints default to the environment variables above.
RunConfig load_run_config(const std::string& path);

struct Checkpoint {
    sim::Mode mode = sim::Mode::Initial;
    std::optional<bt::NodeId> subtree;  // root child executed before this call
    sim::Observation observation;
    std::optional<critic::CriticFeedback> feedback;
    bool alarm_fired = false;
    std::string error;
};

struct Notification {
    std::string run_id;
    std::string config_label;
    std::uint64_t lineage_seed = 0;
    std::size_t episode_index = 0;
    std::size_t checkpoint = 0;
    sim::Mode mode = sim::Mode::Initial;
    double sim_time = 0.0;  // simulated clock at the checkpoint
    double alarm_score = 0.0;
    double confidence = 0.0;
    std::vector<critic::IssueReport> issues;

    std::string console_line() const;
};

struct EpisodeRecord {
    std::string run_id;
    std::string config_label;
    std::size_t episode_index = 0;
    std::uint64_t run_seed = 0;
    std::uint64_t lineage_seed = 0;
    std::uint64_t seed = 0;  // episode seed
    sim::FieldConfig field;
    sim::FaultModel fault_model;
    std::string critic;
    std::string actor;
    bool block_info = false;
    std::string bt_before;
    std::string bt_after;
    dsl::TreeDiff bt_diff;
    std::string refine_rule;
    std::vector<Checkpoint> checkpoints;
    bt::Trace full_trace;
    std::vector<sim::GroundTruthIssue> ground_truth_issues;
    scoring::ScoreBreakdown score;
    scoring::MetricsRecord metrics;
    std::vector<std::string> error_log;
    bool degraded = false;
    bool remote_failure = false;
    sim::WorldState final_state;
};

// The loop state a lineage threads through its episodes.
struct Lineage {
    std::string run_id;
    std::string config_label;
    std::uint64_t run_seed = 0;
    std::uint64_t lineage_seed = 0;
    sim::FieldConfig field;
    sim::FaultModel fault_model;
    bool block_info = false;
    critic::Critic* critic = nullptr;
    actor::Actor* actor = nullptr;
    actor::ActorMemory memory;
    std::function<void(const Notification&)> notify;
};

struct EpisodeResult {
    EpisodeRecord record;
    bt::BehaviorTree refined;
};

// One pass of the closed loop: critic calls at the start, after every root
// child and at the end, then scoring and one actor refinement.
EpisodeResult run_episode(const bt::BehaviorTree& tree, Lineage& lineage, std::size_t episode_index);

std::uint64_t lineage_seed(std::uint64_t run_seed, std::size_t field_index);

struct CampaignResult {
    std::vector<EpisodeRecord> records;  // sorted by (config_label, lineage_seed, episode_index)
    std::vector<Notification> notifications;
    std::vector<scoring::Series> series;
};

// Alarm console lines go to `console` in lineage order.
CampaignResult run_campaign(const RunConfig& config, std::ostream* console = nullptr);

// Writes records.jsonl, notifications.jsonl and one CSV per metric.
void write_campaign(const CampaignResult& result, const std::string& output_dir);

std::vector<scoring::Series> series_of(const std::vector<EpisodeRecord>& records);
void write_reports(const std::vector<scoring::Series>& series, const std::string& output_dir);

// Critic for a run; the run-level block_info flag is forced onto oracle profiles.
std::unique_ptr<critic::Critic> make_run_critic(const RunConfig& config);
std::unique_ptr<actor::Actor> make_run_actor(const RunConfig& config);

class ReplayDivergence : public std::runtime_error {
public:
    ReplayDivergence(const std::string& message, std::optional<std::size_t> event)
        : std::runtime_error(message), event_(event) {}
    // Sequence number of the first differing trace event, when the traces differ.
    std::optional<std::size_t> event() const { return event_; }

private:
    std::optional<std::size_t> event_;
};

// Re-executes (field, fault model, seed, bt_before) and compares the trace,
// final state and score. Throws ReplayDivergence.
void replay(const EpisodeRecord& record);

std::vector<EpisodeRecord> read_records(const std::string& jsonl_path);

void to_json(nlohmann::json& j, const Checkpoint& v);
void from_json(const nlohmann::json& j, Checkpoint& v);
void to_json(nlohmann::json& j, const Notification& v);
void to_json(nlohmann::json& j, const EpisodeRecord& v);
void from_json(const nlohmann::json& j, EpisodeRecord& v);

}  // namespace vrl::runtime

namespace vrl::scoring {
void to_json(nlohmann::json& j, const ScoreBreakdown& v);
void from_json(const nlohmann::json& j, ScoreBreakdown& v);
void to_json(nlohmann::json& j, const MetricsRecord& v);
void from_json(const nlohmann::json& j, MetricsRecord& v);
}  // namespace vrl::scoring
