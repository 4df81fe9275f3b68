// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vrl/bt/engine.hpp"
#include "vrl/bt/trace_json.hpp"
#include "vrl/dsl/dsl.hpp"
#include "vrl/runtime/runtime.hpp"
#include "vrl/sim/executor.hpp"
#include "vrl/sim/io.hpp"

namespace vrl::runtime {

namespace {

struct Segment {
    bt::NodeId subtree;
    bt::Trace trace;
    std::size_t first_event = 0;
};

bool returned_home(const bt::Trace& trace) {
    return std::any_of(trace.begin(), trace.end(), [](const bt::TraceEvent& e) {
        return e.event == bt::TraceEvent::Kind::Returned && e.label == "Action:ReturnToStart" &&
               e.status == bt::TickStatus::Success;
    });
}

bool left_start(const sim::WorldState& world) {
    const auto& start = world.config.start_zone().zone_id;
    return std::any_of(world.event_log.begin(), world.event_log.end(),
                       [&](const sim::WorldEvent& e) { return e.robot_zone != start; });
}

// Runs the root's children one at a time (the root itself when it has no
// children), stopping after overtime or once the robot is back from a trip. `after`
// sees each segment right after it ran.
bt::Trace execute(bt::BehaviorTree& tree, sim::WorldState& world, const sim::FaultModel& faults,
                  const std::function<void(const Segment&)>& after) {
    sim::WorldExecutor ex(world, faults);
    bt::Trace full;
    std::vector<bt::NodeId> steps = tree.at(tree.root).children;
    const bool whole = steps.empty() || !bt::is_composite(tree.at(tree.root).kind);
    if (whole) steps = {tree.root};
    for (const auto& child : steps) {
        Segment seg{child, {}, world.event_log.size()};
        if (whole) {
            for (;;) {
                auto r = bt::tick_node(tree, child, ex, full.size() + seg.trace.size());
                seg.trace.insert(seg.trace.end(), r.trace.begin(), r.trace.end());
                if (r.status != bt::TickStatus::Running) break;
                ex.advance();
            }
        } else {
            seg.trace = bt::execute_subtree(tree, child, ex, full.size()).trace;
        }
        full.insert(full.end(), seg.trace.begin(), seg.trace.end());
        if (after) after(seg);
        if (world.overtime() || (returned_home(seg.trace) && left_start(world))) break;
    }
    return full;
}

std::vector<scoring::ReportedIssue> reported_issues(const std::vector<Checkpoint>& checkpoints) {
    std::vector<scoring::ReportedIssue> out;
    for (const auto& c : checkpoints) {
        if (!c.feedback) continue;
        for (const auto& i : c.feedback->issues) out.push_back({i.category, i.node, i.block_id});
    }
    return out;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string Notification::console_line() const {
    std::ostringstream os;
    os << "[ALARM] run=" << run_id << " config=" << config_label << " seed=" << lineage_seed
       << " episode=" << episode_index << " checkpoint=" << checkpoint << " mode=" << sim::to_string(mode)
       << " t=" << fmt2(sim_time) << " s=" << fmt2(alarm_score) << " c=" << fmt2(confidence) << " issues=";
    if (issues.empty()) os << "none";
    for (std::size_t i = 0; i < issues.size(); ++i) {
        os << (i ? "," : "") << sim::to_string(issues[i].category);
        if (issues[i].node) os << '@' << *issues[i].node;
    }
    return os.str();
}

std::uint64_t lineage_seed(std::uint64_t run_seed, std::size_t field_index) {
    return Rng::mix(run_seed ^ Rng::mix(0x5eed0000ULL + field_index));
}

EpisodeResult run_episode(const bt::BehaviorTree& tree, Lineage& lin, std::size_t episode_index) {
    EpisodeRecord rec;
    rec.run_id = lin.run_id;
    rec.config_label = lin.config_label;
    rec.episode_index = episode_index;
    rec.run_seed = lin.run_seed;
    rec.lineage_seed = lin.lineage_seed;
    rec.seed = episode_seed(lin.lineage_seed, episode_index);
    rec.field = lin.field;
    rec.fault_model = lin.fault_model;
    rec.critic = lin.critic ? lin.critic->name() : "none";
    rec.actor = lin.actor ? lin.actor->name() : "none";
    rec.block_info = lin.block_info;
    rec.bt_before = dsl::serialize(tree);

    critic::NullCritic null_critic;
    critic::Critic& critic = lin.critic ? *lin.critic : null_critic;
    auto perception = critic.perception();
    perception.block_info = perception.block_info || lin.block_info;
    Rng perception_rng = Rng::derive(rec.seed, Stream::Perception);
    Rng critic_rng = Rng::derive(rec.seed, Stream::Critic);
    Rng actor_rng = Rng::derive(rec.seed, Stream::Actor);
    critic::CriticMemory critic_memory;

    auto world = sim::init_world(lin.field, rec.seed);
    const auto initial_blocks = world.blocks;

    auto assess = [&](sim::Mode mode, std::optional<bt::NodeId> subtree, const bt::Trace& trace,
                      const std::vector<sim::GroundTruthIssue>& truth) {
        Checkpoint cp;
        cp.mode = mode;
        cp.subtree = std::move(subtree);
        cp.observation = sim::observe(world, perception, mode, perception_rng);
        try {
            cp.feedback = critic.assess({mode, &cp.observation, &trace, &truth}, critic_memory, critic_rng);
        } catch (const critic::CriticError& e) {
            cp.error = std::string(critic::to_string(e.code())) + ": " + e.what();
            rec.error_log.push_back("critic " + std::string(sim::to_string(mode)) + ": " + cp.error);
            rec.degraded = true;
            rec.remote_failure = true;
        }
        cp.alarm_fired = critic::alarm(cp.feedback);
        if (cp.alarm_fired) {
            Notification n{rec.run_id,          rec.config_label,          rec.lineage_seed,
                           episode_index,       rec.checkpoints.size(),    mode,
                           world.clock,         cp.feedback->alarm_score,  cp.feedback->confidence,
                           cp.feedback->issues};
            if (lin.notify) lin.notify(n);
        }
        rec.checkpoints.push_back(std::move(cp));
    };

    const auto setup = sim::ground_truth_issues(world, {}, sim::IssueScope::Initial);
    assess(sim::Mode::Initial, std::nullopt, {}, setup);

    auto running = bt::reset_copy(tree);
    rec.full_trace = execute(running, world, lin.fault_model, [&](const Segment& seg) {
        const auto truth = sim::ground_truth_issues(world, seg.trace, sim::IssueScope::Checkpoint, seg.first_event);
        assess(sim::Mode::Intermediate, seg.subtree, seg.trace, truth);
    });

    auto final_truth = sim::ground_truth_issues(world, rec.full_trace, sim::IssueScope::Final);
    assess(sim::Mode::Final, std::nullopt, rec.full_trace, final_truth);

    rec.ground_truth_issues = setup;
    for (auto& g : final_truth) {
        const bool dup = std::any_of(rec.ground_truth_issues.begin(), rec.ground_truth_issues.end(),
                                     [&](const sim::GroundTruthIssue& x) { return x.issue_id == g.issue_id; });
        if (!dup) rec.ground_truth_issues.push_back(std::move(g));
    }
    rec.score = scoring::score_episode(world);

    auto& m = rec.metrics;
    m.episode_index = episode_index;
    m.score = rec.score.total;
    m.real_issue_count = rec.ground_truth_issues.size();
    double conf_sum = 0.0;
    for (const auto& c : rec.checkpoints) {
        if (!c.feedback) continue;
        ++m.critic_calls;
        conf_sum += c.feedback->confidence;
        m.alarm_count += c.alarm_fired;
    }
    if (m.critic_calls > 0) {
        const auto match = scoring::match_issues(rec.ground_truth_issues, reported_issues(rec.checkpoints));
        m.detected_issue_count = match.detected;
        m.idr = scoring::idr(match.detected, match.real);
        m.mean_confidence = conf_sum / static_cast<double>(m.critic_calls);
        m.alarm_rate = static_cast<double>(m.alarm_count) / static_cast<double>(m.critic_calls);
    }

    std::optional<critic::CriticFeedback> final_feedback = rec.checkpoints.back().feedback;
    auto context = actor::make_context(lin.field, tree, &rec.full_trace,
                                       lin.block_info ? std::optional(initial_blocks) : std::nullopt);
    bt::BehaviorTree refined = tree;
    if (lin.actor) {
        try {
            auto r = lin.actor->refine(context, final_feedback, rec.score.total, lin.memory, actor_rng);
            refined = std::move(r.tree);
            rec.bt_diff = std::move(r.diff);
            rec.refine_rule = std::move(r.rule);
            if (r.error) {
                rec.error_log.push_back("actor: " + *r.error);
                rec.degraded = true;
            }
        } catch (const actor::ActorError& e) {
            rec.refine_rule = "identity";
            rec.error_log.push_back("actor: " + std::string(actor::to_string(e.code())) + ": " + e.what());
            rec.degraded = true;
            rec.remote_failure = true;
        }
    } else {
        rec.refine_rule = "identity";
    }
    lin.memory.entries.push_back({episode_index, final_feedback, rec.score.total, rec.bt_diff,
                                  actor::evidence_of(context, final_feedback, rec.score.total), rec.bt_before,
                                  rec.refine_rule});
    rec.bt_after = dsl::serialize(refined);
    rec.final_state = std::move(world);
    return {std::move(rec), std::move(refined)};
}

void replay(const EpisodeRecord& record) {
    bt::BehaviorTree tree;
    try {
        tree = dsl::parse(record.bt_before);
    } catch (const dsl::DslError& e) {
        throw ReplayDivergence(std::string("bt_before does not parse: ") + e.what(), std::nullopt);
    }
    auto world = sim::init_world(record.field, record.seed);
    const auto trace = execute(tree, world, record.fault_model, {});

    const auto n = std::min(trace.size(), record.full_trace.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (nlohmann::json(trace[i]) != nlohmann::json(record.full_trace[i])) {
            throw ReplayDivergence("trace differs at event " + std::to_string(i) + ": recorded " +
                                       nlohmann::json(record.full_trace[i]).dump() + ", replayed " +
                                       nlohmann::json(trace[i]).dump(),
                                   i);
        }
    }
    if (trace.size() != record.full_trace.size()) {
        throw ReplayDivergence("trace length differs: recorded " + std::to_string(record.full_trace.size()) +
                                   ", replayed " + std::to_string(trace.size()),
                               n);
    }
    if (sim::canonical(world) != sim::canonical(record.final_state)) {
        throw ReplayDivergence("final world state differs", std::nullopt);
    }
    const auto score = scoring::score_episode(world);
    if (!(score == record.score) || score.total != record.metrics.score) {
        throw ReplayDivergence("score differs: recorded " + std::to_string(record.score.total) + ", replayed " +
                                   std::to_string(score.total),
                               std::nullopt);
    }
}

}  // namespace vrl::runtime
