// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vrl/sim/world.hpp"

namespace vrl::scoring {

struct ScoreRules {
    int correct_box = 10;
    int full_batch = 10;
    int incorrect_box = -5;
    int outside_box = -10;
    int final_position = 20;
    int overtime = -20;
    int shelf_bonus = 0;
};

struct ScoreBreakdown {
    int time_penalty = 0;
    int overtime_penalty = 0;
    int correct_boxes = 0;
    int batch_bonuses = 0;
    int incorrect_boxes = 0;
    int outside_boxes = 0;
    int final_position_bonus = 0;
    int shelf_bonus = 0;
    int total = 0;

    int component_sum() const {
        return time_penalty + overtime_penalty + correct_boxes + batch_bonuses + incorrect_boxes + outside_boxes +
               final_position_bonus + shelf_bonus;
    }
    friend bool operator==(const ScoreBreakdown&, const ScoreBreakdown&) = default;
};

// Blocks count once each; full batches are read from the PlaceBlocks events
// of the world's event log.
ScoreBreakdown score_episode(const sim::WorldState& final_world, const ScoreRules& rules = {});

// ---------------------------------------------------------------------------
// Issue detection

struct ReportedIssue {
    sim::IssueCategory category = sim::IssueCategory::SetupAnomaly;
    std::optional<bt::NodeId> node;
    std::string block_id;
};

struct MatchResult {
    std::size_t detected = 0;
    std::size_t real = 0;
    std::vector<bool> matched;  // per ground-truth issue
};

// One report detects at most one ground-truth issue. Categories must agree;
// an attributed ground-truth issue also needs the same node.
MatchResult match_issues(const std::vector<sim::GroundTruthIssue>& real, const std::vector<ReportedIssue>& reports);

// detected / real, 1.0 when real is zero.
double idr(std::size_t detected, std::size_t real);

// ---------------------------------------------------------------------------
// Per-episode metrics and aggregation

struct MetricsRecord {
    std::size_t episode_index = 0;
    int score = 0;
    // Empty when the episode ran without a critic.
    std::optional<double> idr;
    std::optional<double> mean_confidence;
    std::size_t alarm_count = 0;
    std::size_t critic_calls = 0;
    std::optional<double> alarm_rate;
    std::size_t detected_issue_count = 0;
    std::size_t real_issue_count = 0;
};

struct Series {
    std::string config;
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;
};

class ScoringError : public std::runtime_error {
public:
    enum class Code { RaggedInput };
    ScoringError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct Metric {
    std::string name;
    std::function<std::optional<double>(const MetricsRecord&)> value;
};

const std::vector<Metric>& metrics();
const Metric& metric(const std::string& name);

// Mean per episode index over all series; NA entries are skipped and an
// index where every series is NA stays NA. Throws RaggedInput.
std::vector<std::optional<double>> aggregate(const std::vector<Series>& series, const Metric& metric);

// Header `config,seed,1..N`, one row per series, then a `mean` row. NA is
// written as an empty cell.
void write_metric_csv(std::ostream& out, const std::vector<Series>& series, const Metric& metric);

}  // namespace vrl::scoring
