// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vrl/bt/tree.hpp"
#include "vrl/rng.hpp"
#include "vrl/sim/world.hpp"

namespace vrl::critic {

using sim::IssueCategory;
using sim::Mode;

enum class Severity { Clean, Minor, Borderline, Actionable, Severe };
enum class Tolerance { Strict, Tolerant };

std::string_view to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view text);

struct IssueReport {
    IssueCategory category = IssueCategory::SetupAnomaly;
    std::optional<bt::NodeId> node;
    Severity severity = Severity::Minor;
    std::string evidence;
    std::string block_id;  // empty when the report names no block
    friend bool operator==(const IssueReport&, const IssueReport&) = default;
};

struct CriticFeedback {
    Mode mode = Mode::Initial;
    std::string text;
    std::vector<IssueReport> issues;
    double alarm_score = 0.0;
    double confidence = 1.0;
    friend bool operator==(const CriticFeedback&, const CriticFeedback&) = default;
};

bool alarm(double s, double c);
bool alarm(const CriticFeedback& feedback);
bool alarm(const std::optional<CriticFeedback>& feedback);

// Draws s from the rubric bin of `severity`:
// Clean 0, Minor [0.1,0.3], Borderline (0.3,0.5), Actionable [0.5,0.7], Severe (0.7,1].
double sample_alarm_score(Severity severity, Rng& rng);
bool in_bin(double s, Severity severity);

// Rubric severity of a ground-truth issue.
Severity severity_of(const sim::GroundTruthIssue& issue);

struct ConfidenceModel {
    double mean = 0.5;
    double spread = 0.0;  // half-width of a uniform draw, clamped to [0,1]
    double sample(Rng& rng) const;
    friend bool operator==(const ConfidenceModel&, const ConfidenceModel&) = default;
};

struct CriticProfile {
    std::string name;
    std::map<IssueCategory, double> p_detect;  // missing categories count as 0
    double p_false_positive = 0.0;
    double p_color_misread = 0.0;
    double p_zone_miscount = 0.0;
    ConfidenceModel confidence_when_correct{0.9, 0.05};
    ConfidenceModel confidence_when_wrong{0.5, 0.1};
    Tolerance severity_tolerance = Tolerance::Tolerant;  // Initial mode is always Strict
    bool block_info = false;

    double detect(IssueCategory c) const;
    sim::PerceptionProfile perception() const { return {p_color_misread, p_zone_miscount, block_info}; }
    // Throws std::invalid_argument.
    void check() const;
};

CriticProfile uniform_profile(std::string name, double p_detect, double p_false_positive);
// perfect, blind, ft-3B-like, 7B-like, gemini-like, gemini+blockinfo, color-misreading
const std::vector<std::string>& profile_names();
CriticProfile profile_by_name(const std::string& name);

// Per-episode context: earlier feedback and the ground-truth ids already
// reported, so persistent issues are raised once during an episode.
struct CriticMemory {
    std::vector<CriticFeedback> feedback;
    std::set<std::string> reported;

    void clear() {
        feedback.clear();
        reported.clear();
    }
};

struct CriticInput {
    Mode mode = Mode::Initial;
    const sim::Observation* observation = nullptr;
    const bt::Trace* trace = nullptr;  // checkpoint window, or the whole episode in Final mode
    const std::vector<sim::GroundTruthIssue>* ground_truth = nullptr;
};

class CriticError : public std::runtime_error {
public:
    enum class Code { Timeout, MalformedReply, EndpointError };
    CriticError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view to_string(CriticError::Code code);

class Critic {
public:
    virtual ~Critic() = default;
    virtual std::string name() const = 0;
    // nullopt means "no feedback" (no critic in the loop).
    virtual std::optional<CriticFeedback> assess(const CriticInput& input, CriticMemory& memory, Rng& rng) = 0;
    virtual bool block_info() const { return false; }
    virtual sim::PerceptionProfile perception() const { return {}; }
};

class NullCritic : public Critic {
public:
    std::string name() const override { return "none"; }
    std::optional<CriticFeedback> assess(const CriticInput&, CriticMemory&, Rng&) override { return std::nullopt; }
};

class OracleCritic : public Critic {
public:
    explicit OracleCritic(CriticProfile profile);
    std::string name() const override { return profile_.name; }
    std::optional<CriticFeedback> assess(const CriticInput& input, CriticMemory& memory, Rng& rng) override;
    bool block_info() const override { return profile_.block_info; }
    sim::PerceptionProfile perception() const override { return profile_.perception(); }
    const CriticProfile& profile() const { return profile_; }

private:
    CriticProfile profile_;
};

struct RemoteConfig {
    std::string url;  // e.g. http://127.0.0.1:8080/critic
    std::string token;
    double timeout_seconds = 30.0;
    int attempts = 3;
    bool block_info = false;
};

inline constexpr const char* kCriticSchema = "vrl.critic/1";

class RemoteCritic : public Critic {
public:
    explicit RemoteCritic(RemoteConfig config);
    std::string name() const override { return "remote"; }
    std::optional<CriticFeedback> assess(const CriticInput& input, CriticMemory& memory, Rng& rng) override;
    bool block_info() const override { return config_.block_info; }
    sim::PerceptionProfile perception() const override { return {0.0, 0.0, config_.block_info}; }

    nlohmann::json request_body(const CriticInput& input, const CriticMemory& memory) const;

private:
    RemoteConfig config_;
};

// Validates a reply document; throws CriticError(MalformedReply).
CriticFeedback parse_reply(const nlohmann::json& reply, Mode mode);

void to_json(nlohmann::json& j, Severity v);
void from_json(const nlohmann::json& j, Severity& v);
void to_json(nlohmann::json& j, const IssueReport& v);
void from_json(const nlohmann::json& j, IssueReport& v);
void to_json(nlohmann::json& j, const CriticFeedback& v);
void from_json(const nlohmann::json& j, CriticFeedback& v);
void to_json(nlohmann::json& j, const CriticProfile& v);
void from_json(const nlohmann::json& j, CriticProfile& v);

std::unique_ptr<Critic> make_critic(const std::string& spec, const RemoteConfig& remote = {});

}  // namespace vrl::critic
